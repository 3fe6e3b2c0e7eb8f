#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ipbac/error.hpp"
#include "ipbac/fuzzy.hpp"

namespace ipbac {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool ieq(const std::string& a, const char* b) {
    std::size_t n = 0;
    for (; b[n]; ++n) {
        if (n >= a.size()) return false;
        if (std::toupper(static_cast<unsigned char>(a[n])) != std::toupper(static_cast<unsigned char>(b[n])))
            return false;
    }
    return n == a.size();
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

} // namespace detail

/// Rule-base text format, one directive per line ('#' starts a comment):
///
///   input reliability
///     term Low 0 0 0.5
///     term Medium 0 0.5 1
///     term High 0.5 1 1
///   output decision
///     term Deny-leaning 0 0 0.5
///     ...
///   IF reliability IS Low AND relevance IS Low AND engagement IS Low THEN Deny-leaning
///
/// Keywords are case-insensitive; variable and term names are exact. The
/// parsed base must pass RuleBase::validate(), so files with missing term
/// combinations, duplicate antecedents or dangling names are rejected.
inline RuleBase parse_rule_base(std::istream& in) {
    RuleBase rb;
    LinguisticVariable* current = nullptr;
    std::string raw;
    std::size_t lineno = 0;

    auto fail = [&](const std::string& why) {
        raise(Errc::parse_error, "rule file line " + std::to_string(lineno) + ": " + why);
    };

    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        auto toks = detail::split_ws(line);

        if (detail::ieq(toks[0], "input") || detail::ieq(toks[0], "output")) {
            if (toks.size() != 2) fail("expected: " + toks[0] + " <name>");
            if (detail::ieq(toks[0], "input")) {
                rb.inputs.push_back({toks[1], {}});
                current = &rb.inputs.back();
            } else {
                if (!rb.output.name.empty()) fail("second output variable");
                rb.output = {toks[1], {}};
                current = &rb.output;
            }
        } else if (detail::ieq(toks[0], "term")) {
            if (!current) fail("term before any variable");
            if (toks.size() != 5) fail("expected: term <name> <a> <b> <c>");
            TriangularMf mf;
            try {
                mf.a = std::stod(toks[2]);
                mf.b = std::stod(toks[3]);
                mf.c = std::stod(toks[4]);
            } catch (const std::exception&) {
                fail("non-numeric membership point");
            }
            if (!mf.valid()) fail("term '" + toks[1] + "' needs a <= b <= c");
            if (current->find_term(toks[1])) fail("duplicate term '" + toks[1] + "'");
            current->terms.emplace_back(toks[1], mf);
        } else if (detail::ieq(toks[0], "IF")) {
            // IF f1 IS t1 AND f2 IS t2 ... THEN cons
            FuzzyRule rule;
            std::size_t i = 1;
            while (true) {
                if (i + 2 >= toks.size() || !detail::ieq(toks[i + 1], "IS"))
                    fail("expected: <factor> IS <term>");
                rule.antecedent.emplace_back(toks[i], toks[i + 2]);
                i += 3;
                if (i >= toks.size()) fail("rule missing THEN clause");
                if (detail::ieq(toks[i], "AND")) {
                    ++i;
                    continue;
                }
                if (detail::ieq(toks[i], "THEN")) break;
                fail("expected AND or THEN, got '" + toks[i] + "'");
            }
            if (i + 2 != toks.size()) fail("expected exactly one output term after THEN");
            rule.consequent = toks[i + 1];
            rb.rules.push_back(std::move(rule));
        } else {
            fail("unknown directive '" + toks[0] + "'");
        }
    }

    rb.validate();
    return rb;
}

inline RuleBase load_rule_base(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::io_error, "cannot open rule file: " + path);
    return parse_rule_base(f);
}

inline std::string format_rule_base(const RuleBase& rb) {
    std::ostringstream out;
    auto put_var = [&](const char* kind, const LinguisticVariable& v) {
        out << kind << ' ' << v.name << '\n';
        for (const auto& [name, mf] : v.terms) {
            out << "  term " << name << ' ' << mf.a << ' ' << mf.b << ' ' << mf.c << '\n';
        }
    };
    for (const auto& v : rb.inputs) put_var("input", v);
    put_var("output", rb.output);
    out << '\n';
    for (const auto& r : rb.rules) {
        out << "IF ";
        for (std::size_t i = 0; i < r.antecedent.size(); ++i) {
            if (i) out << " AND ";
            out << r.antecedent[i].first << " IS " << r.antecedent[i].second;
        }
        out << " THEN " << r.consequent << '\n';
    }
    return out.str();
}

} // namespace ipbac

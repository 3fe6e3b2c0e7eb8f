#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ipbac/error.hpp"

namespace ipbac {

/// tri(a,b,c) with a <= b <= c; degenerate shoulders (a==b or b==c) allowed.
struct TriangularMf {
    double a = 0.0, b = 0.0, c = 0.0;

    bool valid() const { return a <= b && b <= c; }

    double operator()(double x) const {
        if (x < a || x > c) return 0.0;
        if (x == b) return 1.0; // covers both degenerate shoulders exactly
        if (x < b) return (x - a) / (b - a);
        return (c - x) / (c - b);
    }
};

struct LinguisticVariable {
    std::string name;
    std::vector<std::pair<std::string, TriangularMf>> terms; // ordered low -> high

    const TriangularMf* find_term(const std::string& term) const {
        for (const auto& [n, mf] : terms)
            if (n == term) return &mf;
        return nullptr;
    }

    /// The default three-term Ruspini partition over [0,1].
    static LinguisticVariable partition3(std::string name, std::string low = "Low",
                                         std::string medium = "Medium", std::string high = "High") {
        LinguisticVariable v;
        v.name = std::move(name);
        v.terms = {{std::move(low), {0.0, 0.0, 0.5}},
                   {std::move(medium), {0.0, 0.5, 1.0}},
                   {std::move(high), {0.5, 1.0, 1.0}}};
        return v;
    }

    static LinguisticVariable default_output() {
        return partition3("decision", "Deny-leaning", "Cautious", "Grant-leaning");
    }
};

/// Conjunctive antecedent (factor -> term), single output term.
struct FuzzyRule {
    std::vector<std::pair<std::string, std::string>> antecedent;
    std::string consequent;
};

struct RuleBase {
    std::vector<LinguisticVariable> inputs;
    LinguisticVariable output;
    std::vector<FuzzyRule> rules;

    const LinguisticVariable* find_input(const std::string& name) const {
        for (const auto& v : inputs)
            if (v.name == name) return &v;
        return nullptr;
    }

    /// Complete rule table over the three default factor variables,
    /// generated by level sum: Low=0, Medium=1, High=2 per antecedent term;
    /// total <= 2 -> Deny-leaning, 3..4 -> Cautious, >= 5 -> Grant-leaning.
    /// Monotone by construction: raising any one term level never lowers
    /// the consequent.
    static RuleBase default_level_sum() {
        RuleBase rb;
        rb.inputs = {LinguisticVariable::partition3("reliability"),
                     LinguisticVariable::partition3("relevance"),
                     LinguisticVariable::partition3("engagement")};
        rb.output = LinguisticVariable::default_output();
        const char* term_of[3] = {"Low", "Medium", "High"};
        for (int l1 = 0; l1 < 3; ++l1)
            for (int l2 = 0; l2 < 3; ++l2)
                for (int l3 = 0; l3 < 3; ++l3) {
                    int sum = l1 + l2 + l3;
                    FuzzyRule r;
                    r.antecedent = {{"reliability", term_of[l1]},
                                    {"relevance", term_of[l2]},
                                    {"engagement", term_of[l3]}};
                    r.consequent = sum <= 2 ? "Deny-leaning" : (sum <= 4 ? "Cautious" : "Grant-leaning");
                    rb.rules.push_back(std::move(r));
                }
        return rb;
    }

    /// Structural checks: every referenced variable/term exists, no two
    /// rules share an antecedent, and the rules cover the full cartesian
    /// product of input terms.
    void validate() const {
        std::size_t combos = 1;
        for (const auto& v : inputs) {
            if (v.terms.empty()) raise(Errc::invalid_config, "input variable '" + v.name + "' has no terms");
            combos *= v.terms.size();
        }
        if (output.terms.empty()) raise(Errc::invalid_config, "output variable has no terms");

        std::map<std::string, int> seen; // canonical antecedent key -> count
        for (const auto& r : rules) {
            if (r.antecedent.size() != inputs.size())
                raise(Errc::invalid_config, "rule must bind every input variable exactly once");
            std::map<std::string, std::string> by_factor;
            for (const auto& [factor, term] : r.antecedent) {
                const auto* var = find_input(factor);
                if (!var) raise(Errc::invalid_config, "rule references unknown variable '" + factor + "'");
                if (!var->find_term(term))
                    raise(Errc::invalid_config, "variable '" + factor + "' has no term '" + term + "'");
                if (!by_factor.emplace(factor, term).second)
                    raise(Errc::invalid_config, "rule binds variable '" + factor + "' twice");
            }
            if (!output.find_term(r.consequent))
                raise(Errc::invalid_config, "rule concludes unknown output term '" + r.consequent + "'");
            std::string key;
            for (const auto& [factor, term] : by_factor) key += factor + "=" + term + ";";
            if (++seen[key] > 1) raise(Errc::invalid_config, "duplicate rule antecedent: " + key);
        }
        if (seen.size() != combos)
            raise(Errc::invalid_config,
                  "rule base covers " + std::to_string(seen.size()) + " of " +
                      std::to_string(combos) + " input term combinations");
    }
};

inline constexpr std::size_t kCurvePoints = 1001; // grid step 1e-3 over [0,1]

using AggregateCurve = std::array<double, kCurvePoints>;

inline double curve_x(std::size_t i) { return static_cast<double>(i) / 1000.0; }

/// Membership degree per term of `variable` at `value`.
inline std::map<std::string, double> fuzzify(double value, const LinguisticVariable& variable) {
    if (value < 0.0 || value > 1.0)
        raise(Errc::out_of_domain, variable.name + " value " + std::to_string(value) + " outside [0,1]");
    std::map<std::string, double> out;
    for (const auto& [name, mf] : variable.terms) out[name] = mf(value);
    return out;
}

using Memberships = std::map<std::string, std::map<std::string, double>>;

/// Additive inference: each rule fires at the product of its antecedent
/// memberships; the consequent term is scaled by that strength and the
/// scaled terms are summed into one output curve. With the default Ruspini
/// partitions the 27 strengths sum to exactly 1, which keeps the curve a
/// genuine membership function and makes the defuzzified score monotone in
/// every factor.
inline AggregateCurve infer(const Memberships& memberships, const RuleBase& rulebase) {
    std::map<std::string, double> mass; // output term -> accumulated strength
    double total = 0.0;
    for (const auto& rule : rulebase.rules) {
        double w = 1.0;
        for (const auto& [factor, term] : rule.antecedent) {
            auto f = memberships.find(factor);
            if (f == memberships.end())
                raise(Errc::uncovered_input, "no memberships for factor '" + factor + "'");
            auto t = f->second.find(term);
            w *= (t == f->second.end() ? 0.0 : t->second);
            if (w == 0.0) break;
        }
        if (w == 0.0) continue;
        mass[rule.consequent] += w;
        total += w;
    }
    if (total == 0.0)
        raise(Errc::uncovered_input, "no rule fires with positive strength");

    AggregateCurve curve{};
    for (const auto& [term, m] : mass) {
        const auto* mf = rulebase.output.find_term(term);
        for (std::size_t i = 0; i < kCurvePoints; ++i) curve[i] += m * (*mf)(curve_x(i));
    }
    return curve;
}

/// Centroid over the curve's own grid: DS = sum(x*mu) / sum(mu).
inline double defuzzify_centroid(const AggregateCurve& curve) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < kCurvePoints; ++i) {
        num += curve_x(i) * curve[i];
        den += curve[i];
    }
    if (den == 0.0) raise(Errc::empty_aggregate, "aggregate curve is identically zero");
    return num / den;
}

} // namespace ipbac

#pragma once

#include <stdexcept>
#include <string>

namespace ipbac {

enum class Errc {
    principal_mismatch,
    chronology_violation,
    invalid_record,
    out_of_domain,
    uncovered_input,
    empty_aggregate,
    invalid_level,
    chain_mismatch,
    insufficient_data,
    parse_error,
    invalid_config,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::principal_mismatch:   return "principal_mismatch";
        case Errc::chronology_violation: return "chronology_violation";
        case Errc::invalid_record:       return "invalid_record";
        case Errc::out_of_domain:        return "out_of_domain";
        case Errc::uncovered_input:      return "uncovered_input";
        case Errc::empty_aggregate:      return "empty_aggregate";
        case Errc::invalid_level:        return "invalid_level";
        case Errc::chain_mismatch:       return "chain_mismatch";
        case Errc::insufficient_data:    return "insufficient_data";
        case Errc::parse_error:          return "parse_error";
        case Errc::invalid_config:       return "invalid_config";
        case Errc::io_error:             return "io_error";
    }
    return "unknown";
}

/// Engine-level failure. The code tells callers (and the wire layer) which
/// contract was violated; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace ipbac

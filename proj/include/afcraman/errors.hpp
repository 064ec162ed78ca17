#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace afcraman {

// Input fails a structural or physical invariant (bad sign, missing field,
// out-of-range value). CLI maps this to exit code 2.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Input is structurally valid but violates a protocol regime requirement
// (e.g. detection after the echo revival). CLI maps this to exit code 3.
class regime_error : public std::runtime_error {
public:
    explicit regime_error(const std::string& what) : std::runtime_error(what) {}
};

// Structured non-fatal diagnostic. Operations keep going; callers decide
// whether to surface these (CLI prints them to stderr, reports embed them).
struct Warning {
    std::string code;     // stable machine-readable identifier
    std::string message;  // human-readable detail
};

using WarningList = std::vector<Warning>;

}  // namespace afcraman

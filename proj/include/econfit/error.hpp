#pragma once

#include <stdexcept>
#include <string>

namespace econfit {

// Error taxonomy mirrored by the CLI exit codes: 1 validation, 2 data, 3 numerical.

// Bad parameters, malformed configuration, violated preconditions.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Problems with input data content: parse failures, duplicate keys, empty results.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Arithmetic and conditioning failures: all-zero matrices, rank deficiency, zero variance.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

enum class ExitCode : int {
    ok = 0,
    validation = 1,
    data = 2,
    numerical = 3,
};

} // namespace econfit

#pragma once

#include <stdexcept>
#include <string>

namespace adglab {

// Error taxonomy shared by the whole library. The C API and the CLI map
// these onto exit codes: validation -> 1, invariant -> 2, numeric -> 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adglab

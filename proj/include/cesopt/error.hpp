#pragma once

#include <stdexcept>
#include <string>

namespace cesopt {

// Exception families map one-to-one onto CLI exit codes (2, 3, 4).

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a physical model or formula receives inputs outside its domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace cesopt

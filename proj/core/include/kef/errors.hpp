#pragma once

#include <stdexcept>
#include <string>

namespace kef {

/// Invalid input: bad parameters, unsupported measure, violated precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent or incomplete run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine did not reach its tolerance.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

}  // namespace kef

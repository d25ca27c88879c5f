#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace elastotat {

/// Base exception for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument / precondition violation.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Iterative method failed to converge within its cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> history)
        : Error(msg), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}
}  // namespace detail

}  // namespace elastotat

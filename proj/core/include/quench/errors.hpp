#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace quench {

/// Configuration or precondition violation. `line` is nonzero when the error
/// can be traced to a config file line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_ = 0;
};

/// Nonlinear or linear solve failure, carrying the residual history that was
/// achieved before giving up.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& msg, std::vector<double> residual_history = {})
        : std::runtime_error(msg), residual_history_(std::move(residual_history)) {}

    const std::vector<double>& residual_history() const { return residual_history_; }
    double achieved_residual() const {
        return residual_history_.empty() ? -1.0 : residual_history_.back();
    }

private:
    std::vector<double> residual_history_;
};

} // namespace quench

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace abf {

// Argument outside the mathematical domain of an operation (p outside (0,1),
// non-positive variance, parameters violating model invariants, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration (unknown tag, bad key, split >= T).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data could not be ingested. `row` is 1-based and counts the header.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t row = 0)
        : std::runtime_error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"),
          row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Optimizer failed to converge; carries the best point reached.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, std::vector<double> best_point, double best_value)
        : std::runtime_error(what), best_point_(std::move(best_point)), best_value_(best_value) {}

    const std::vector<double>& best_point() const noexcept { return best_point_; }
    double best_value() const noexcept { return best_value_; }

private:
    std::vector<double> best_point_;
    double best_value_;
};

class LinearAlgebraError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// All particle weights vanished at time index `t` (0-based).
class FilterDegeneracyError : public std::runtime_error {
public:
    explicit FilterDegeneracyError(std::size_t t)
        : std::runtime_error("particle filter degenerated: all weights zero at t=" + std::to_string(t)),
          t_(t) {}

    std::size_t time_index() const noexcept { return t_; }

private:
    std::size_t t_;
};

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A pipeline stage needs an artifact that another subcommand produces.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace abf

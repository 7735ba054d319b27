#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace abf {

struct NelderMeadOptions {
    /// Initial simplex offset per coordinate (size must match the start point).
    std::vector<double> steps;
    /// Converged once every vertex lies within this distance of the best one.
    double diameter_tolerance = 1e-8;
    std::size_t max_evaluations = 20000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

/// Minimizes `objective` with the Nelder-Mead simplex method (standard
/// reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// objective values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options);

}  // namespace abf

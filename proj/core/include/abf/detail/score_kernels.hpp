#pragma once

// Inline per-observation scores on (mean, sd) used by the hot criterion
// loops. Callers validate inputs; these kernels do not.

#include "abf/distributions.hpp"
#include "abf/scoring.hpp"

#include <cmath>

namespace abf::detail {

inline constexpr double kInvSqrtPi = 0.56418958354775628695;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline double ls_kernel(double mean, double variance, double y) {
    const double r = y - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * r * r / variance;
}

inline double crps_kernel(double mean, double sd, double y) {
    const double z = (y - mean) / sd;
    return -sd * (z * std::erf(z * kInvSqrt2) + 2.0 * kInvSqrt2Pi * std::exp(-0.5 * z * z) - kInvSqrtPi);
}

inline double cls_kernel(const RegionSpec& region, double mean, double variance, double sd, double y) {
    if (region.contains(y)) {
        return ls_kernel(mean, variance, y);
    }
    // log mass of the complement of A
    if (region.kind == TailKind::lower) {
        return normal_logcdf((mean - region.threshold) / sd);
    }
    return normal_logcdf((region.threshold - mean) / sd);
}

inline double interval_kernel(double level, double z, double mean, double sd, double y) {
    const double half = z * sd;
    const double lower = mean - half;
    const double upper = mean + half;
    double loss = upper - lower;
    if (y < lower) {
        loss += (2.0 / level) * (lower - y);
    } else if (y > upper) {
        loss += (2.0 / level) * (y - upper);
    }
    return -loss;
}

inline double interval_from_endpoints(double level, double lower, double upper, double y) {
    double loss = upper - lower;
    if (y < lower) {
        loss += (2.0 / level) * (lower - y);
    } else if (y > upper) {
        loss += (2.0 / level) * (y - upper);
    }
    return -loss;
}

inline double score_kernel(const ScoringRule& rule, double mean, double variance, double y) {
    switch (rule.kind()) {
        case RuleKind::ls:
            return ls_kernel(mean, variance, y);
        case RuleKind::crps:
            return crps_kernel(mean, std::sqrt(variance), y);
        case RuleKind::cls:
            return cls_kernel(rule.region(), mean, variance, std::sqrt(variance), y);
        case RuleKind::interval:
            return interval_kernel(rule.level(), rule.interval_z(), mean, std::sqrt(variance), y);
    }
    return 0.0;
}

}  // namespace abf::detail

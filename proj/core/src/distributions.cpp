#include "abf/distributions.hpp"

#include "abf/error.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace abf {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

void require_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(what) + ": probability must lie in (0,1), got " +
                          std::to_string(p));
    }
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_logpdf(double x) { return -kLogSqrt2Pi - 0.5 * x * x; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_logcdf(double x) {
    if (x > -30.0) {
        return std::log(normal_cdf(x));
    }
    // Mills-ratio asymptotic series; relative error below 1e-12 here.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return normal_logpdf(x) - std::log(-x) + std::log(series);
}

double normal_quantile(double p) {
    require_probability(p, "normal_quantile");
    return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

StandardizedSkewNormal::StandardizedSkewNormal(double gamma) : gamma_(gamma) {
    if (!std::isfinite(gamma)) {
        throw DomainError("skew-normal shape must be finite");
    }
    delta_ = gamma / std::sqrt(1.0 + gamma * gamma);
    raw_mean_ = delta_ * std::sqrt(2.0 / kPi);
    raw_sd_ = std::sqrt(1.0 - 2.0 * delta_ * delta_ / kPi);
}

double StandardizedSkewNormal::cdf(double x) const {
    const double z = raw_mean_ + raw_sd_ * x;
    const double value = normal_cdf(z) - 2.0 * boost::math::owens_t(z, gamma_);
    return std::clamp(value, 0.0, 1.0);
}

double StandardizedSkewNormal::pdf(double x) const {
    const double z = raw_mean_ + raw_sd_ * x;
    return raw_sd_ * 2.0 * normal_pdf(z) * normal_cdf(gamma_ * z);
}

double StandardizedSkewNormal::quantile(double p) const {
    require_probability(p, "skew_normal_quantile");
    double lo = -8.0;
    double hi = 8.0;
    while (cdf(lo) > p) {
        lo *= 2.0;
    }
    while (cdf(hi) < p) {
        hi *= 2.0;
    }
    while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double StandardizedSkewNormal::skewness() const {
    const double m = raw_mean_;
    return 0.5 * (4.0 - kPi) * m * m * m / (raw_sd_ * raw_sd_ * raw_sd_);
}

double skew_normal_quantile(double p, double gamma) {
    return StandardizedSkewNormal(gamma).quantile(p);
}

double stable_sample(double alpha, double beta_skew, RngStream& rng) {
    if (!(alpha > 1.0 && alpha <= 2.0)) {
        throw DomainError("stable_sample: alpha must lie in (1,2], got " + std::to_string(alpha));
    }
    if (!(beta_skew >= -1.0 && beta_skew <= 1.0)) {
        throw DomainError("stable_sample: skewness must lie in [-1,1]");
    }
    const double v = rng.uniform_open(-0.5 * kPi, 0.5 * kPi);
    const double w = rng.exponential();

    const double t = beta_skew * std::tan(0.5 * kPi * alpha);
    const double b = std::atan(t) / alpha;
    const double s = std::pow(1.0 + t * t, 0.5 / alpha);
    const double shifted = alpha * (v + b);
    return s * std::sin(shifted) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - shifted) / w, (1.0 - alpha) / alpha);
}

}  // namespace abf

#pragma once

#include "abf/rng.hpp"

namespace abf {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x);
double normal_logpdf(double x);
double normal_cdf(double x);
/// log Phi(x), accurate far into the lower tail.
double normal_logcdf(double x);
/// Phi^{-1}(p); throws DomainError unless p in (0, 1).
double normal_quantile(double p);

/// Skew-normal with shape `gamma`, shifted and scaled to mean 0, variance 1.
///
/// With delta = gamma / sqrt(1 + gamma^2) the raw skew-normal Z has mean
/// delta * sqrt(2/pi) and variance 1 - 2 delta^2 / pi; the standardized
/// variable is (Z - mean) / sd. The CDF uses Owen's T function and the
/// quantile is found by bisection.
class StandardizedSkewNormal {
public:
    explicit StandardizedSkewNormal(double gamma);

    double gamma() const noexcept { return gamma_; }
    double delta() const noexcept { return delta_; }
    /// Mean and standard deviation of the unstandardized skew-normal.
    double raw_mean() const noexcept { return raw_mean_; }
    double raw_sd() const noexcept { return raw_sd_; }

    double cdf(double x) const;
    double pdf(double x) const;
    /// D^{-1}(p), absolute tolerance 1e-10; DomainError unless p in (0, 1).
    double quantile(double p) const;
    /// Closed-form skewness of the distribution.
    double skewness() const;

private:
    double gamma_;
    double delta_;
    double raw_mean_;
    double raw_sd_;
};

/// Free-function form of StandardizedSkewNormal(gamma).quantile(p).
double skew_normal_quantile(double p, double gamma);

/// One alpha-stable draw (location 0, scale 1) by Chambers-Mallows-Stuck.
///
/// Uses the Samorodnitsky-Taqqu "1-parametrization": characteristic function
/// exp(-|t|^a (1 - i b sign(t) tan(pi a / 2))). For a > 1 the draw has mean 0.
/// At a = 2 the law is N(0, 2) for every b. Requires a in (1, 2] and
/// b in [-1, 1].
double stable_sample(double alpha, double beta_skew, RngStream& rng);

}  // namespace abf

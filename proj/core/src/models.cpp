#include "abf/models.hpp"

#include "abf/distributions.hpp"
#include "abf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace abf {

namespace {

constexpr std::array<std::string_view, 4> kGaussianNames{"phi", "sigma_alpha", "mu", "h_bar"};
constexpr std::array<std::string_view, 4> kStableNames{"omega", "phi", "sigma_h", "alpha"};

void require_length(std::size_t length) {
    if (length == 0) {
        throw DomainError("path length must be at least 1");
    }
}

}  // namespace

std::string_view to_string(SsmModel model) {
    switch (model) {
        case SsmModel::sv_gaussian:
            return "sv_gaussian";
        case SsmModel::sv_stable:
            return "sv_stable";
    }
    return "unknown";
}

SsmModel parse_ssm_model(std::string_view name) {
    if (name == "sv_gaussian") {
        return SsmModel::sv_gaussian;
    }
    if (name == "sv_stable") {
        return SsmModel::sv_stable;
    }
    throw ConfigError("unknown state space model '" + std::string(name) +
                      "' (expected sv_gaussian or sv_stable)");
}

std::span<const std::string_view> parameter_names(SsmModel model) {
    if (model == SsmModel::sv_stable) {
        return kStableNames;
    }
    return kGaussianNames;
}

SsmTheta to_theta(const SvGaussianParams& p) {
    return {SsmModel::sv_gaussian, {p.phi, p.sigma_alpha, p.mu, p.h_bar}};
}

SsmTheta to_theta(const StableSvParams& p) {
    return {SsmModel::sv_stable, {p.omega, p.phi, p.sigma_h, p.alpha}};
}

SvGaussianParams as_sv_gaussian(const SsmTheta& theta) {
    if (theta.model != SsmModel::sv_gaussian) {
        throw ConfigError("theta is not tagged sv_gaussian");
    }
    return {theta.values[0], theta.values[1], theta.values[2], theta.values[3]};
}

StableSvParams as_stable_sv(const SsmTheta& theta) {
    if (theta.model != SsmModel::sv_stable) {
        throw ConfigError("theta is not tagged sv_stable");
    }
    return {theta.values[0], theta.values[1], theta.values[2], theta.values[3]};
}

void validate(const SvGaussianParams& p) {
    if (!(std::abs(p.phi) < 1.0)) {
        throw DomainError("SV persistence phi must satisfy |phi| < 1");
    }
    if (!(p.sigma_alpha >= 0.0) || !std::isfinite(p.sigma_alpha)) {
        throw DomainError("SV state innovation sd must be non-negative");
    }
    if (!std::isfinite(p.mu) || !std::isfinite(p.h_bar)) {
        throw DomainError("SV mean parameters must be finite");
    }
}

void validate(const SkewSvParams& p) {
    if (!(std::abs(p.a) < 1.0)) {
        throw DomainError("skew SV persistence must satisfy |a| < 1");
    }
    if (!(p.sigma_h > 0.0) || !std::isfinite(p.sigma_h)) {
        throw DomainError("skew SV innovation sd must be positive");
    }
    if (!std::isfinite(p.h_bar) || !std::isfinite(p.gamma)) {
        throw DomainError("skew SV level and shape must be finite");
    }
}

void validate(const StableSvParams& p) {
    if (!(std::abs(p.phi) < 1.0)) {
        throw DomainError("stable SV persistence must satisfy |phi| < 1");
    }
    if (!(p.sigma_h > 0.0) || !std::isfinite(p.sigma_h)) {
        throw DomainError("stable SV scale must be positive");
    }
    if (!(p.alpha > 1.0 && p.alpha <= 2.0)) {
        throw DomainError("stable SV tail index must lie in (1,2]");
    }
    if (!std::isfinite(p.omega)) {
        throw DomainError("stable SV intercept must be finite");
    }
}

void validate(const SsmTheta& theta) {
    if (theta.model == SsmModel::sv_gaussian) {
        validate(as_sv_gaussian(theta));
    } else {
        validate(as_stable_sv(theta));
    }
}

double sv_measurement_logpdf(double y, double h, double mu) {
    const double r = y - mu;
    return -kLogSqrt2Pi - 0.5 * h - 0.5 * r * r * std::exp(-h);
}

double sv_transition_sample(double h_prev, const SvGaussianParams& p, RngStream& rng) {
    return p.h_bar + p.phi * (h_prev - p.h_bar) + p.sigma_alpha * rng.normal();
}

double sv_transition_sample(double h_prev, const StableSvParams& p, RngStream& rng) {
    return p.omega + p.phi * h_prev + p.sigma_h * stable_sample(p.alpha, kStableSkewness, rng);
}

double sv_transition_sample(double h_prev, const SsmTheta& theta, RngStream& rng) {
    switch (theta.model) {
        case SsmModel::sv_gaussian:
            return sv_transition_sample(h_prev, as_sv_gaussian(theta), rng);
        case SsmModel::sv_stable:
            return sv_transition_sample(h_prev, as_stable_sv(theta), rng);
    }
    throw ConfigError("unknown state space model tag");
}

double sv_initial_sample(const SsmTheta& theta, RngStream& rng) {
    if (theta.model == SsmModel::sv_gaussian) {
        const auto p = as_sv_gaussian(theta);
        const double sd = p.sigma_alpha / std::sqrt(1.0 - p.phi * p.phi);
        return p.h_bar + sd * rng.normal();
    }
    const auto p = as_stable_sv(theta);
    // Burn-in plus the first recorded transition, as in simulate_stable_sv.
    double h = p.omega / (1.0 - p.phi);
    for (std::size_t i = 0; i <= kBurnIn; ++i) {
        h = sv_transition_sample(h, p, rng);
    }
    return h;
}

double measurement_mean(const SsmTheta& theta) {
    return theta.model == SsmModel::sv_gaussian ? theta.values[2] : 0.0;
}

SimulatedPath simulate_sv_gaussian(const SvGaussianParams& params, std::size_t length, RngStream& rng) {
    validate(params);
    require_length(length);
    SimulatedPath path;
    path.states.resize(length);
    path.observations.resize(length);

    const double sd0 = params.sigma_alpha / std::sqrt(1.0 - params.phi * params.phi);
    double h = params.h_bar + sd0 * rng.normal();
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) {
            h = sv_transition_sample(h, params, rng);
        }
        path.states[t] = h;
        path.observations[t] = params.mu + std::exp(0.5 * h) * rng.normal();
    }
    return path;
}

SimulatedPath simulate_stable_sv(const StableSvParams& params, std::size_t length, RngStream& rng) {
    validate(params);
    require_length(length);
    SimulatedPath path;
    path.states.resize(length);
    path.observations.resize(length);

    double h = params.omega / (1.0 - params.phi);
    for (std::size_t i = 0; i < kBurnIn; ++i) {
        h = sv_transition_sample(h, params, rng);
    }
    for (std::size_t t = 0; t < length; ++t) {
        h = sv_transition_sample(h, params, rng);
        path.states[t] = h;
        path.observations[t] = std::exp(0.5 * h) * rng.normal();
    }
    return path;
}

InterpolatedEcdf::InterpolatedEcdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) {
        throw DomainError("empirical CDF needs a non-empty reference sample");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double InterpolatedEcdf::operator()(double x) const {
    const auto n = static_cast<double>(sorted_.size());
    const double lo = 1.0 / (n + 1.0);
    const double hi = n / (n + 1.0);
    if (!(x > sorted_.front())) {
        return lo;
    }
    if (!(x < sorted_.back())) {
        return hi;
    }
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    const auto k = static_cast<std::size_t>(it - sorted_.begin());  // sorted_[k-1] <= x < sorted_[k]
    const double left = sorted_[k - 1];
    const double right = sorted_[k];
    const double frac = right > left ? (x - left) / (right - left) : 0.0;
    // Order statistic k (1-based) sits at k / (n+1).
    return (static_cast<double>(k) + frac) / (n + 1.0);
}

namespace {

// z_t = exp(h_t/2) eps_t with h a Gaussian AR(1) started at h_bar and
// burned in for kBurnIn steps. Returns (h, z).
void simulate_latent_z(const SkewSvParams& p, std::size_t length, RngStream& rng,
                       std::vector<double>* states, std::vector<double>& z) {
    double h = p.h_bar;
    for (std::size_t i = 0; i < kBurnIn; ++i) {
        h = p.h_bar + p.a * (h - p.h_bar) + p.sigma_h * rng.normal();
    }
    z.resize(length);
    if (states != nullptr) {
        states->resize(length);
    }
    for (std::size_t t = 0; t < length; ++t) {
        h = p.h_bar + p.a * (h - p.h_bar) + p.sigma_h * rng.normal();
        if (states != nullptr) {
            (*states)[t] = h;
        }
        z[t] = std::exp(0.5 * h) * rng.normal();
    }
}

}  // namespace

SimulatedPath simulate_skew_sv(const SkewSvParams& params, std::size_t length, RngStream& rng,
                               std::size_t fz_draws) {
    validate(params);
    require_length(length);
    if (fz_draws < 2) {
        throw DomainError("simulate_skew_sv needs at least 2 reference draws for F_z");
    }
    SimulatedPath path;
    std::vector<double> z;
    simulate_latent_z(params, length, rng, &path.states, z);

    std::vector<double> reference;
    simulate_latent_z(params, fz_draws, rng, nullptr, reference);
    const InterpolatedEcdf fz(std::move(reference));
    const StandardizedSkewNormal marginal(params.gamma);

    path.observations.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        path.observations[t] = marginal.quantile(fz(z[t]));
    }
    return path;
}

SimulatedPath simulate(const SsmTheta& theta, std::size_t length, RngStream& rng) {
    switch (theta.model) {
        case SsmModel::sv_gaussian:
            return simulate_sv_gaussian(as_sv_gaussian(theta), length, rng);
        case SsmModel::sv_stable:
            return simulate_stable_sv(as_stable_sv(theta), length, rng);
    }
    throw ConfigError("unknown state space model tag");
}

}  // namespace abf

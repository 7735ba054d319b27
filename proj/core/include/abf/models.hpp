#pragma once

#include "abf/rng.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abf {

/// Gaussian SV: y_t = mu + exp(h_t/2) e_t, h_t = h_bar + phi (h_{t-1} - h_bar) + sigma_alpha w_t,
/// with h_1 drawn from the stationary law N(h_bar, sigma_alpha^2 / (1 - phi^2)).
struct SvGaussianParams {
    double phi = 0.0;
    double sigma_alpha = 0.0;
    double mu = 0.0;
    double h_bar = 0.0;
};

/// Skew-copula SV data generator: Gaussian AR(1) log-volatility driving
/// z_t = exp(h_t/2) eps_t, mapped through its own marginal CDF into a
/// standardized skew-normal with shape `gamma`.
struct SkewSvParams {
    double a = 0.0;
    double h_bar = 0.0;
    double sigma_h = 0.0;
    double gamma = 0.0;
};

/// SV with alpha-stable log-volatility innovations (skewness fixed at -1):
/// h_t = omega + phi h_{t-1} + sigma_h eta_t, y_t = exp(h_t/2) e_t.
struct StableSvParams {
    double omega = 0.0;
    double phi = 0.0;
    double sigma_h = 0.0;
    double alpha = 2.0;
};

inline constexpr double kStableSkewness = -1.0;
inline constexpr std::size_t kBurnIn = 200;

struct SimulatedPath {
    std::vector<double> states;
    std::vector<double> observations;
};

/// State space models that can be simulated and particle filtered.
enum class SsmModel { sv_gaussian, sv_stable };

std::string_view to_string(SsmModel model);
/// ConfigError on unknown names.
SsmModel parse_ssm_model(std::string_view name);

/// Parameter names of a model, in the order SsmTheta stores them.
std::span<const std::string_view> parameter_names(SsmModel model);

/// Model-tagged parameter vector; the common currency of priors, ABC draws
/// and the particle filter.
struct SsmTheta {
    SsmModel model = SsmModel::sv_gaussian;
    std::array<double, 4> values{};
};

SsmTheta to_theta(const SvGaussianParams& p);
SsmTheta to_theta(const StableSvParams& p);
SvGaussianParams as_sv_gaussian(const SsmTheta& theta);
StableSvParams as_stable_sv(const SsmTheta& theta);

// DomainError when invariants fail. sigma_alpha = 0 is admitted as the
// deterministic-state limit.
void validate(const SvGaussianParams& p);
void validate(const SkewSvParams& p);
void validate(const StableSvParams& p);
void validate(const SsmTheta& theta);

SimulatedPath simulate_sv_gaussian(const SvGaussianParams& params, std::size_t length, RngStream& rng);

/// `fz_draws` sets the size of the independent reference simulation used to
/// estimate the marginal CDF of z_t (empirical CDF, linear interpolation
/// between order statistics, clamped to [1/(n+1), n/(n+1)]).
SimulatedPath simulate_skew_sv(const SkewSvParams& params, std::size_t length, RngStream& rng,
                               std::size_t fz_draws = 100000);

/// Starts at the fixed point omega / (1 - phi) and discards kBurnIn steps.
SimulatedPath simulate_stable_sv(const StableSvParams& params, std::size_t length, RngStream& rng);

/// Dispatches on theta.model.
SimulatedPath simulate(const SsmTheta& theta, std::size_t length, RngStream& rng);

/// log N(y; mu, exp(h)).
double sv_measurement_logpdf(double y, double h, double mu);

double sv_transition_sample(double h_prev, const SvGaussianParams& params, RngStream& rng);
double sv_transition_sample(double h_prev, const StableSvParams& params, RngStream& rng);
double sv_transition_sample(double h_prev, const SsmTheta& theta, RngStream& rng);

/// One draw of the initial state under the simulator's convention.
double sv_initial_sample(const SsmTheta& theta, RngStream& rng);

/// Mean of the measurement density (mu for Gaussian SV, 0 for stable SV).
double measurement_mean(const SsmTheta& theta);

/// Piecewise-linear empirical CDF over a sorted reference sample.
class InterpolatedEcdf {
public:
    explicit InterpolatedEcdf(std::vector<double> sample);
    double operator()(double x) const;
    std::size_t size() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

}  // namespace abf

#pragma once

#include "abf/abc.hpp"
#include "abf/models.hpp"
#include "abf/rng.hpp"
#include "abf/scoring.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace abf {

struct FilterConfig {
    std::size_t n_particles = 1000;
    /// K: resampled states propagated per theta in a predictive mixture.
    std::size_t state_draws_per_theta = 20;
    std::size_t workers = 1;

    /// ConfigError unless n_particles >= 100 and K >= 1.
    void validate() const;
};

/// Weighted particle approximation of p(x_t | theta, y_{1:t}); log-weights
/// are normalized (log-sum-exp = 0).
struct ParticleCloud {
    std::vector<double> particles;
    std::vector<double> log_weights;
};

struct FilterResult {
    std::vector<ParticleCloud> clouds;
    double log_likelihood = 0.0;
};

using CloudVisitor = std::function<void(std::size_t t, const ParticleCloud& cloud)>;

/// Bootstrap filter with systematic resampling at every step. Calls
/// `visit(t, cloud)` with the weighted cloud at each t and returns the
/// log-likelihood estimate. FilterDegeneracyError when all weights vanish.
double bootstrap_filter(const SsmTheta& theta, std::span<const double> y, const FilterConfig& config,
                        RngStream& rng, const CloudVisitor& visit);

/// Stores every cloud; memory grows as T x n_particles.
FilterResult bootstrap_filter(const SsmTheta& theta, std::span<const double> y, const FilterConfig& config,
                              RngStream& rng);

/// Systematic resampling: indices of n draws from the normalized weights.
std::vector<std::size_t> systematic_resample(std::span<const double> log_weights, std::size_t n, RngStream& rng);

/// Appends K components for one theta: K states drawn from the weighted
/// cloud, each propagated one step and mapped to N(mu_theta, exp(x)).
/// x is clamped to +-kMaxPredictiveLogVariance so exp(x) stays a positive
/// finite double; heavy-tailed stable transitions can leave that range.
inline constexpr double kMaxPredictiveLogVariance = 700.0;
void append_predictive_components(const SsmTheta& theta, const ParticleCloud& cloud, std::size_t k,
                                  RngStream& rng, std::vector<GaussianPredictive>& out);

/// Mixture over all thetas, K components each, equal weights.
PredictiveMixture one_step_predictive(std::span<const SsmTheta> thetas, std::span<const ParticleCloud> clouds,
                                      std::size_t k, RngStream& rng);

/// Filter stream for draw `index` of a posterior.
RngStream filter_stream(const RngStream& rng, std::size_t index);

/// Hold-out predictive components of one theta: entry h holds the K
/// components for y[split + h]. Uses filter_stream(rng, index).
std::vector<std::vector<GaussianPredictive>> theta_holdout_components(const SsmTheta& theta, std::size_t index,
                                                                       std::span<const double> y_full,
                                                                       std::size_t split, const FilterConfig& config,
                                                                       const RngStream& rng);

struct RollingEval {
    std::vector<std::string> rule_labels;
    std::vector<double> averages;
    std::size_t dropped_thetas = 0;
    std::vector<std::string> warnings;
};

/// Filters each kept theta once over y_full and scores the mixture
/// predictive of y[t] for every t >= split. Thetas whose filter degenerates
/// are dropped with a warning; more than 10% dropped is an EstimationError.
RollingEval rolling_predictive_eval(const AbcPosterior& posterior, std::span<const double> y_full,
                                    std::size_t split, const FilterConfig& config,
                                    const std::vector<ScoringRule>& rules, const RngStream& rng);

/// Same evaluation for several posteriors; filters for a draw index shared
/// by several posteriors run once. Result i equals the single-posterior call.
std::vector<RollingEval> rolling_predictive_eval(const std::vector<AbcPosterior>& posteriors,
                                                 std::span<const double> y_full, std::size_t split,
                                                 const FilterConfig& config, const std::vector<ScoringRule>& rules,
                                                 const RngStream& rng);

}  // namespace abf

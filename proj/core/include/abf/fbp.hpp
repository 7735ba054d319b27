#pragma once

#include "abf/auxiliary.hpp"
#include "abf/rng.hpp"
#include "abf/scoring.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace abf {

struct FbpConfig {
    double w = 1.0;
    /// M, draws kept after burn-in and thinning.
    std::size_t n_draws = 4000;
    std::size_t burn_in = 10000;
    std::size_t thin = 5;
    /// Initial random-walk sd per unconstrained coordinate; empty means
    /// derived from the curvature of the target at the start point.
    std::vector<double> proposal_scale;

    /// ConfigError unless w > 0, M >= 100, thin >= 1 and scales positive.
    void validate() const;
};

struct FbpPosterior {
    AuxModel model = AuxModel::garch;
    std::vector<AuxParams> draws;
    double acceptance_rate = 0.0;
    ScoringRule rule = ScoringRule::log_score();
    double w_used = 1.0;
    std::vector<std::string> warnings;
};

/// w * criterion - log(beta1) inside the support, -inf outside.
double log_generalized_posterior(const AuxParams& params, const ScoringRule& rule, double w,
                                 std::span<const double> y);

/// Gaussian random-walk Metropolis-Hastings in the unconstrained coordinates.
/// During burn-in the global proposal scale adapts towards acceptance in
/// [0.2, 0.4] and, halfway through, the proposal covariance is re-estimated
/// from the chain; both are frozen afterwards. Starts at `start` when given,
/// otherwise at fit_auxiliary(rule, model, y).
FbpPosterior run_rwmh(const ScoringRule& rule, double w, std::span<const double> y, AuxModel model,
                      const FbpConfig& config, RngStream& rng, const std::optional<AuxFit>& start = std::nullopt);

/// Ratio of summed LS scores to summed rule scores; EstimationError when the
/// denominator is zero or the ratio is not positive and finite.
double w_from_score_sums(double ls_sum, double rule_sum);

/// 1 for LS and CLS; otherwise w_from_score_sums over the base draws, each
/// draw contributing its in-sample criterion under LS and under `rule`.
double estimate_w(const ScoringRule& rule, std::span<const double> y, const FbpPosterior& base_posterior);

/// Mixture of the next-step auxiliary predictives over all draws.
PredictiveMixture fbp_predictive(const FbpPosterior& posterior, std::span<const double> y);

/// Hold-out mixtures for y[split..]: entry h uses y[0..split+h).
std::vector<PredictiveMixture> fbp_holdout_predictives(const FbpPosterior& posterior, std::span<const double> y_full,
                                                       std::size_t split, std::size_t workers = 1);

}  // namespace abf

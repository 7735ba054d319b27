#pragma once

#include "abf/auxiliary.hpp"
#include "abf/models.hpp"
#include "abf/rng.hpp"
#include "abf/scoring.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace abf {

struct PriorMarginal {
    enum class Kind { uniform, normal, point };

    std::string name;
    Kind kind = Kind::uniform;
    double a = 0.0;  // lower bound | mean | value
    double b = 1.0;  // upper bound | variance | unused

    static PriorMarginal uniform(std::string name, double lo, double hi);
    static PriorMarginal normal(std::string name, double mean, double variance);
    static PriorMarginal point(std::string name, double value);
};

/// Independent marginals, one per parameter of `model` (any order).
struct PriorSpec {
    SsmModel model = SsmModel::sv_gaussian;
    std::vector<PriorMarginal> marginals;

    /// DomainError for bad marginals; ConfigError when names do not match
    /// the model's parameters.
    void validate() const;
};

/// Priors used by the simulation and empirical designs.
PriorSpec correct_spec_prior();
PriorSpec misspec_prior();
PriorSpec stable_sv_prior();

SsmTheta sample_prior(const PriorSpec& spec, RngStream& rng);

struct AbcConfig {
    std::size_t n_draws = 10000;
    /// Number of nearest draws to keep. When unset, `quantile` is used, and
    /// when that is unset too the default q_T = 50 T^{-3/2}.
    std::optional<std::size_t> keep;
    std::optional<double> quantile;
    std::size_t workers = 1;

    /// ConfigError unless 1 <= keep <= n_draws.
    std::size_t resolved_keep(std::size_t series_length) const;
};

/// q_T = 50 T^{-3/2}.
double default_keep_quantile(std::size_t series_length);

struct AbcPosterior {
    std::string rule_label;
    /// Kept draws in ascending (distance, draw index) order.
    std::vector<SsmTheta> kept_thetas;
    std::vector<double> kept_distances;
    std::vector<std::size_t> kept_indices;
    /// One row per prior draw (N x dim beta); non-finite rows mark
    /// degenerate simulations.
    Eigen::MatrixXd summaries;
    Eigen::MatrixXd weight_matrix;
    /// Distance of every draw, +inf for degenerate ones.
    std::vector<double> distances;
};

/// Score-gradient summary of a simulated series at the fitted parameters.
std::vector<double> summary_statistic(std::span<const double> y_sim, const AuxFit& fit);

/// Inverse sample covariance of the finite rows, with ridge
/// 1e-10 * trace / dim added before inversion. DomainError with fewer than
/// dim + 1 finite rows; LinearAlgebraError if still not positive definite.
Eigen::MatrixXd estimate_weight_matrix(const Eigen::MatrixXd& summaries);

/// sqrt(s' W s). DomainError on dimension mismatch.
double mahalanobis(std::span<const double> s, const Eigen::MatrixXd& weight);

/// Stream used for prior draw i of a run seeded by `rng`.
RngStream abc_draw_stream(const RngStream& rng, std::size_t draw);

/// Loss-based ABC for one focusing rule: fits the auxiliary model on y_obs
/// (aborting on optimization failure), then runs the two-phase selection.
AbcPosterior run_abc(const PriorSpec& prior, AuxModel aux_model, const ScoringRule& rule,
                     std::span<const double> y_obs, const AbcConfig& config, const RngStream& rng);

/// Two-phase selection for several fits sharing one set of prior draws and
/// simulated series. Result i is identical to running the single-rule
/// version with fits[i].
std::vector<AbcPosterior> run_abc(const PriorSpec& prior, const std::vector<AuxFit>& fits,
                                  std::span<const double> y_obs, const AbcConfig& config, const RngStream& rng);

/// Selection step alone: keeps the `keep` smallest distances, ties broken by
/// draw index.
std::vector<std::size_t> nearest_indices(std::span<const double> distances, std::size_t keep);

}  // namespace abf

#pragma once

#include "abf/scoring.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace abf {

/// Gaussian ARCH(1): y_t = beta0 + sqrt(a_t) e_t, a_t = beta1 + beta2 (y_{t-1} - beta0)^2.
struct ArchParams {
    double beta0 = 0.0;
    double beta1 = 1.0;
    double beta2 = 0.0;
};

/// Gaussian GARCH(1,1): a_t = beta1 + beta2 a_{t-1} + beta3 (y_{t-1} - beta0)^2.
struct GarchParams {
    double beta0 = 0.0;
    double beta1 = 1.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
};

using AuxParams = std::variant<ArchParams, GarchParams>;

enum class AuxModel { arch, garch };

std::string_view to_string(AuxModel model);
/// ConfigError on unknown names.
AuxModel parse_aux_model(std::string_view name);
std::size_t dimension(AuxModel model);
AuxModel model_of(const AuxParams& params);

std::vector<double> to_vector(const AuxParams& params);
/// DomainError if the vector length does not match the model.
AuxParams params_from_vector(AuxModel model, std::span<const double> beta);

/// beta1 > 0, beta2 (and beta3) in [0,1), beta2 + beta3 < 1.
bool in_support(const AuxParams& params);
void validate(const ArchParams& p);
void validate(const GarchParams& p);
void validate(const AuxParams& p);

/// Unconstrained coordinates: (beta0, log beta1, logit beta2) for ARCH and
/// (beta0, log beta1, logit s_a, logit s_b) for GARCH, where beta2 = s_a and
/// beta3 = (1 - s_a) s_b (stick-breaking keeps beta2 + beta3 < 1).
/// DomainError for parameters on the support boundary.
std::vector<double> to_unconstrained(const AuxParams& params);
AuxParams from_unconstrained(AuxModel model, std::span<const double> u);
/// log |d beta / d u| at u.
double log_jacobian(AuxModel model, std::span<const double> u);

/// One-step predictives for observations 2..T (index i predicts y[i+1]).
std::vector<GaussianPredictive> arch_filter(const ArchParams& params, std::span<const double> y);
/// The variance recursion starts at beta1 / (1 - beta2 - beta3).
std::vector<GaussianPredictive> garch_filter(const GarchParams& params, std::span<const double> y);
std::vector<GaussianPredictive> aux_filter(const AuxParams& params, std::span<const double> y);

/// Predictive for the observation following the last element of y.
GaussianPredictive next_predictive(const AuxParams& params, std::span<const double> y);

/// Sum of rule scores over the T-1 in-sample one-step predictives.
double criterion(const ScoringRule& rule, const AuxParams& params, std::span<const double> y);

/// Gradient of the criterion with respect to beta.
///
/// Central finite differences in the unconstrained coordinates (step
/// 1e-6 relative to each coordinate's magnitude) mapped back through the
/// transform's Jacobian. DomainError when params lie on the support boundary.
std::vector<double> criterion_gradient(const ScoringRule& rule, const AuxParams& params,
                                       std::span<const double> y);

struct AuxFit {
    AuxParams params;
    ScoringRule rule;
    double criterion_value = 0.0;
    double gradient_norm = 0.0;
    std::size_t evaluations = 0;
};

struct FitOptions {
    std::size_t restarts = 3;
    /// Holds beta_i fixed at the given value (beta0..beta2 only).
    std::array<std::optional<double>, 3> pinned{};
    double diameter_tolerance = 1e-8;
    std::size_t max_evaluations = 20000;
};

/// Maximizes the criterion by Nelder-Mead in the unconstrained coordinates,
/// keeping the best of `restarts` runs from jittered moment-based starts.
/// DomainError for series shorter than 50; OptimizationError if no run converges.
AuxFit fit_auxiliary(const ScoringRule& rule, AuxModel model, std::span<const double> y,
                     const FitOptions& options = {});

/// Precomputed finite-difference plan for the score-gradient summary of a fit.
///
/// `compute(y)` returns T^-1 times the criterion gradient at the fitted
/// parameters, T being the number of summed score terms; it is bitwise
/// identical to criterion_gradient(fit.rule, fit.params, y) / T.
class GradientSummary {
public:
    explicit GradientSummary(const AuxFit& fit);
    GradientSummary(const ScoringRule& rule, const AuxParams& params);

    std::size_t dimension() const noexcept { return dim_; }
    std::vector<double> compute(std::span<const double> y) const;
    /// Unscaled gradient (sum over terms).
    std::vector<double> gradient(std::span<const double> y) const;

private:
    ScoringRule rule_;
    AuxModel model_;
    std::size_t dim_;
    std::vector<AuxParams> plus_;
    std::vector<AuxParams> minus_;
    std::vector<double> steps_;
    // Row-major inverse transpose of the Jacobian d beta / d u.
    std::vector<double> inv_jacobian_t_;
};

}  // namespace abf

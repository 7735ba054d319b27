#include "abf/fbp.hpp"

#include "abf/error.hpp"
#include "abf/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace abf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kAdaptWindow = 100;

double target_unconstrained(const ScoringRule& rule, double w, std::span<const double> y, AuxModel model,
                            std::span<const double> u) {
    for (double v : u) {
        if (!std::isfinite(v)) {
            return kNegInf;
        }
    }
    const AuxParams p = from_unconstrained(model, u);
    const double lp = log_generalized_posterior(p, rule, w, y);
    if (!std::isfinite(lp)) {
        return kNegInf;
    }
    return lp + log_jacobian(model, u);
}

double initial_scale(const ScoringRule& rule, double w, std::span<const double> y, AuxModel model,
                     std::vector<double> u, std::size_t i, double f0, double typical) {
    const double base = i == 0 ? typical : 1.0;
    const double h = 1e-3 * std::max(std::abs(u[i]), base);
    const double x = u[i];
    u[i] = x + h;
    const double up = target_unconstrained(rule, w, y, model, u);
    u[i] = x - h;
    const double down = target_unconstrained(rule, w, y, model, u);
    const double curvature = -(up - 2.0 * f0 + down) / (h * h);
    if (std::isfinite(curvature) && curvature > 0.0) {
        return 1.0 / std::sqrt(curvature);
    }
    return 0.1 * base;
}

}  // namespace

void FbpConfig::validate() const {
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw ConfigError("FBP scale w must be positive and finite");
    }
    if (n_draws < 100) {
        throw ConfigError("FBP needs at least 100 posterior draws");
    }
    if (thin < 1) {
        throw ConfigError("FBP thinning must be >= 1");
    }
    for (double s : proposal_scale) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ConfigError("FBP proposal scales must be positive");
        }
    }
}

double log_generalized_posterior(const AuxParams& params, const ScoringRule& rule, double w,
                                 std::span<const double> y) {
    if (!in_support(params)) {
        return kNegInf;
    }
    const double beta1 = std::visit([](const auto& p) { return p.beta1; }, params);
    const double value = w * criterion(rule, params, y) - std::log(beta1);
    return std::isnan(value) ? kNegInf : value;
}

FbpPosterior run_rwmh(const ScoringRule& rule, double w, std::span<const double> y, AuxModel model,
                      const FbpConfig& config, RngStream& rng, const std::optional<AuxFit>& start) {
    FbpConfig cfg = config;
    cfg.w = w;
    cfg.validate();
    const std::size_t d = dimension(model);
    if (!cfg.proposal_scale.empty() && cfg.proposal_scale.size() != d) {
        throw ConfigError("FBP proposal_scale needs one entry per auxiliary parameter");
    }

    const AuxFit fit = start ? *start : fit_auxiliary(rule, model, y);
    if (model_of(fit.params) != model) {
        throw ConfigError("FBP start point belongs to a different auxiliary model");
    }
    std::vector<double> u = to_unconstrained(fit.params);
    double f = target_unconstrained(rule, w, y, model, u);
    if (!std::isfinite(f)) {
        throw EstimationError("FBP target is not finite at the start point");
    }

    const auto dim = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(dim, dim);
    {
        const auto beta = to_vector(fit.params);
        const double typical = std::sqrt(std::max(beta[1], 1e-12));
        for (std::size_t i = 0; i < d; ++i) {
            const double s = cfg.proposal_scale.empty() ? initial_scale(rule, w, y, model, u, i, f, typical)
                                                        : cfg.proposal_scale[i];
            chol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = s;
        }
    }
    double lambda = 2.38 / std::sqrt(static_cast<double>(d));

    std::vector<double> proposal(d);
    std::vector<double> z(d);
    auto step = [&]() {
        for (auto& v : z) {
            v = rng.normal();
        }
        for (std::size_t i = 0; i < d; ++i) {
            double inc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                inc += chol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
            }
            proposal[i] = u[i] + lambda * inc;
        }
        const double fp = target_unconstrained(rule, w, y, model, proposal);
        const double log_u = std::log(rng.uniform_open(0.0, 1.0));
        if (std::isfinite(fp) && log_u < fp - f) {
            u = proposal;
            f = fp;
            return true;
        }
        return false;
    };

    // Burn-in with adaptation.
    const std::size_t pilot_begin = cfg.burn_in / 4;
    const std::size_t pilot_end = cfg.burn_in / 2;
    std::vector<std::vector<double>> pilot;
    std::size_t window_accepts = 0;
    for (std::size_t it = 0; it < cfg.burn_in; ++it) {
        window_accepts += step() ? 1 : 0;
        if (it >= pilot_begin && it < pilot_end) {
            pilot.push_back(u);
        }
        if ((it + 1) % kAdaptWindow == 0) {
            const double rate = static_cast<double>(window_accepts) / static_cast<double>(kAdaptWindow);
            if (rate < 0.2) {
                lambda *= 0.75;
            } else if (rate > 0.4) {
                lambda *= 1.3;
            }
            window_accepts = 0;
        }
        if (it + 1 == pilot_end && pilot.size() >= 10 * d) {
            Eigen::MatrixXd samples(static_cast<Eigen::Index>(pilot.size()), dim);
            for (std::size_t r = 0; r < pilot.size(); ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pilot[r][c];
                }
            }
            const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
            Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(pilot.size() - 1);
            cov.diagonal().array() += 1e-10 * std::max(cov.trace() / static_cast<double>(d), 1e-300);
            Eigen::LLT<Eigen::MatrixXd> llt(cov);
            if (llt.info() == Eigen::Success && cov.diagonal().minCoeff() > 0.0) {
                chol = llt.matrixL();
                lambda = 2.38 / std::sqrt(static_cast<double>(d));
            }
        }
    }

    FbpPosterior post;
    post.model = model;
    post.rule = rule;
    post.w_used = w;
    post.draws.reserve(cfg.n_draws);
    const std::size_t iterations = cfg.n_draws * cfg.thin;
    std::size_t accepts = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
        accepts += step() ? 1 : 0;
        if ((it + 1) % cfg.thin == 0) {
            post.draws.push_back(from_unconstrained(model, u));
        }
    }
    post.acceptance_rate = static_cast<double>(accepts) / static_cast<double>(iterations);
    if (post.acceptance_rate < 0.05 || post.acceptance_rate > 0.7) {
        post.warnings.push_back("FBP-" + rule.label() + ": acceptance rate " + std::to_string(post.acceptance_rate) +
                                " outside [0.05, 0.7]; proposal tuning is poor");
    }
    return post;
}

double w_from_score_sums(double ls_sum, double rule_sum) {
    if (rule_sum == 0.0) {
        throw EstimationError("scale factor: summed rule scores are zero");
    }
    const double w = ls_sum / rule_sum;
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw EstimationError("scale factor: score ratio is not positive and finite");
    }
    return w;
}

double estimate_w(const ScoringRule& rule, std::span<const double> y, const FbpPosterior& base_posterior) {
    if (rule.kind() == RuleKind::ls || rule.kind() == RuleKind::cls) {
        return 1.0;
    }
    if (base_posterior.draws.empty()) {
        throw EstimationError("scale factor needs base posterior draws");
    }
    const ScoringRule ls = ScoringRule::log_score();
    double ls_sum = 0.0;
    double rule_sum = 0.0;
    for (const auto& beta : base_posterior.draws) {
        ls_sum += criterion(ls, beta, y);
        rule_sum += criterion(rule, beta, y);
    }
    return w_from_score_sums(ls_sum, rule_sum);
}

PredictiveMixture fbp_predictive(const FbpPosterior& posterior, std::span<const double> y) {
    if (posterior.draws.empty()) {
        throw DomainError("FBP predictive needs at least one draw");
    }
    PredictiveMixture mix;
    mix.components.reserve(posterior.draws.size());
    for (const auto& beta : posterior.draws) {
        mix.components.push_back(next_predictive(beta, y));
    }
    return mix;
}

std::vector<PredictiveMixture> fbp_holdout_predictives(const FbpPosterior& posterior, std::span<const double> y_full,
                                                       std::size_t split, std::size_t workers) {
    if (posterior.draws.empty()) {
        throw DomainError("FBP predictive needs at least one draw");
    }
    if (split < 1 || split >= y_full.size()) {
        throw ConfigError("hold-out split must satisfy 1 <= split < series length");
    }
    const std::size_t m = posterior.draws.size();
    const std::size_t horizon = y_full.size() - split;
    std::vector<PredictiveMixture> out(horizon);
    for (auto& mix : out) {
        mix.components.resize(m);
    }
    parallel_for(m, workers, [&](std::size_t j) {
        const auto preds = aux_filter(posterior.draws[j], y_full);
        // preds[i] is the predictive of y[i + 1].
        for (std::size_t h = 0; h < horizon; ++h) {
            out[h].components[j] = preds[split + h - 1];
        }
    });
    return out;
}

}  // namespace abf

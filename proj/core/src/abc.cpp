#include "abf/abc.hpp"

#include "abf/error.hpp"
#include "abf/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace abf {

PriorMarginal PriorMarginal::uniform(std::string name, double lo, double hi) {
    return {std::move(name), Kind::uniform, lo, hi};
}

PriorMarginal PriorMarginal::normal(std::string name, double mean, double variance) {
    return {std::move(name), Kind::normal, mean, variance};
}

PriorMarginal PriorMarginal::point(std::string name, double value) {
    return {std::move(name), Kind::point, value, 0.0};
}

void PriorSpec::validate() const {
    const auto names = parameter_names(model);
    if (marginals.size() != names.size()) {
        throw ConfigError("prior must have one marginal per parameter of " + std::string(to_string(model)));
    }
    for (const auto& name : names) {
        const auto count = std::count_if(marginals.begin(), marginals.end(),
                                         [&](const PriorMarginal& m) { return m.name == name; });
        if (count != 1) {
            throw ConfigError("prior needs exactly one marginal for '" + std::string(name) + "'");
        }
    }
    for (const auto& m : marginals) {
        if (!std::isfinite(m.a) || !std::isfinite(m.b)) {
            throw DomainError("prior marginal '" + m.name + "' has non-finite hyperparameters");
        }
        if (m.kind == PriorMarginal::Kind::uniform && !(m.a < m.b)) {
            throw DomainError("uniform prior for '" + m.name + "' needs a < b");
        }
        if (m.kind == PriorMarginal::Kind::normal && !(m.b > 0.0)) {
            throw DomainError("normal prior for '" + m.name + "' needs variance > 0");
        }
    }
}

PriorSpec correct_spec_prior() {
    return {SsmModel::sv_gaussian,
            {PriorMarginal::uniform("phi", 0.5, 0.99), PriorMarginal::uniform("sigma_alpha", 0.05, 0.4),
             PriorMarginal::normal("mu", 0.0, 0.5), PriorMarginal::normal("h_bar", -1.0, 1.0)}};
}

PriorSpec misspec_prior() {
    return {SsmModel::sv_gaussian,
            {PriorMarginal::uniform("phi", 0.5, 0.99), PriorMarginal::uniform("sigma_alpha", 0.05, 0.4),
             PriorMarginal::normal("mu", 0.0, 1.0), PriorMarginal::normal("h_bar", -3.0, 2.0)}};
}

PriorSpec stable_sv_prior() {
    return {SsmModel::sv_stable,
            {PriorMarginal::uniform("omega", -1.0, 1.0), PriorMarginal::uniform("phi", 0.5, 0.99),
             PriorMarginal::uniform("sigma_h", 0.0, 0.3), PriorMarginal::uniform("alpha", 1.0, 2.0)}};
}

SsmTheta sample_prior(const PriorSpec& spec, RngStream& rng) {
    SsmTheta theta;
    theta.model = spec.model;
    const auto names = parameter_names(spec.model);
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto it = std::find_if(spec.marginals.begin(), spec.marginals.end(),
                                     [&](const PriorMarginal& m) { return m.name == names[k]; });
        if (it == spec.marginals.end()) {
            throw ConfigError("prior has no marginal for '" + std::string(names[k]) + "'");
        }
        switch (it->kind) {
            case PriorMarginal::Kind::uniform:
                theta.values[k] = rng.uniform_open(it->a, it->b);
                break;
            case PriorMarginal::Kind::normal:
                theta.values[k] = it->a + std::sqrt(it->b) * rng.normal();
                break;
            case PriorMarginal::Kind::point:
                theta.values[k] = it->a;
                break;
        }
    }
    return theta;
}

double default_keep_quantile(std::size_t series_length) {
    return 50.0 * std::pow(static_cast<double>(series_length), -1.5);
}

std::size_t AbcConfig::resolved_keep(std::size_t series_length) const {
    if (n_draws == 0) {
        throw ConfigError("ABC needs n_draws >= 1");
    }
    std::size_t k = 0;
    if (keep) {
        k = *keep;
    } else {
        const double q = quantile ? *quantile : default_keep_quantile(series_length);
        if (!(q > 0.0 && q <= 1.0)) {
            throw ConfigError("ABC keep quantile must lie in (0, 1]");
        }
        k = static_cast<std::size_t>(std::llround(q * static_cast<double>(n_draws)));
        k = std::max<std::size_t>(k, 1);
    }
    if (k < 1 || k > n_draws) {
        throw ConfigError("ABC keep must satisfy 1 <= keep <= n_draws");
    }
    return k;
}

std::vector<double> summary_statistic(std::span<const double> y_sim, const AuxFit& fit) {
    return GradientSummary(fit).compute(y_sim);
}

Eigen::MatrixXd estimate_weight_matrix(const Eigen::MatrixXd& summaries) {
    const Eigen::Index dim = summaries.cols();
    if (dim == 0) {
        throw DomainError("weight matrix needs at least one summary coordinate");
    }
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(summaries.rows()));
    for (Eigen::Index i = 0; i < summaries.rows(); ++i) {
        if (summaries.row(i).allFinite()) {
            rows.push_back(i);
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < dim + 1) {
        throw DomainError("weight matrix needs at least dim + 1 finite summary rows");
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto i : rows) {
        mean += summaries.row(i).transpose();
    }
    mean /= static_cast<double>(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto i : rows) {
        const Eigen::VectorXd d = summaries.row(i).transpose() - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n - 1);

    const double ridge = 1e-10 * cov.trace() / static_cast<double>(dim);
    cov.diagonal().array() += ridge;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.vectorD().array() > 0.0).all()) {
        throw LinearAlgebraError("summary covariance is singular after regularization");
    }
    Eigen::MatrixXd w = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
    if (!w.allFinite()) {
        throw LinearAlgebraError("summary covariance inverse is not finite");
    }
    return (0.5 * (w + w.transpose())).eval();
}

double mahalanobis(std::span<const double> s, const Eigen::MatrixXd& weight) {
    const auto dim = static_cast<Eigen::Index>(s.size());
    if (weight.rows() != dim || weight.cols() != dim) {
        throw DomainError("summary and weight matrix dimensions differ");
    }
    double q = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
            row += weight(i, j) * s[static_cast<std::size_t>(j)];
        }
        q += s[static_cast<std::size_t>(i)] * row;
    }
    if (std::isnan(q)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(std::max(q, 0.0));
}

RngStream abc_draw_stream(const RngStream& rng, std::size_t draw) {
    return RngStream(rng.seed(), stream_id(StreamPurpose::abc_draw, rng.stream_id(), draw));
}

std::vector<std::size_t> nearest_indices(std::span<const double> distances, std::size_t keep) {
    if (keep < 1 || keep > distances.size()) {
        throw ConfigError("ABC keep must satisfy 1 <= keep <= n_draws");
    }
    std::vector<std::size_t> order(distances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        const double da = std::isnan(distances[a]) ? std::numeric_limits<double>::infinity() : distances[a];
        const double db = std::isnan(distances[b]) ? std::numeric_limits<double>::infinity() : distances[b];
        return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), less);
    order.resize(keep);
    return order;
}

AbcPosterior run_abc(const PriorSpec& prior, AuxModel aux_model, const ScoringRule& rule,
                     std::span<const double> y_obs, const AbcConfig& config, const RngStream& rng) {
    if (y_obs.size() < 100) {
        throw DomainError("ABC needs an observed series of length >= 100");
    }
    prior.validate();
    const AuxFit fit = fit_auxiliary(rule, aux_model, y_obs);
    return std::move(run_abc(prior, std::vector<AuxFit>{fit}, y_obs, config, rng).front());
}

std::vector<AbcPosterior> run_abc(const PriorSpec& prior, const std::vector<AuxFit>& fits,
                                  std::span<const double> y_obs, const AbcConfig& config, const RngStream& rng) {
    if (y_obs.size() < 100) {
        throw DomainError("ABC needs an observed series of length >= 100");
    }
    if (fits.empty()) {
        throw ConfigError("ABC needs at least one auxiliary fit");
    }
    prior.validate();
    const std::size_t n = config.n_draws;
    const std::size_t keep = config.resolved_keep(y_obs.size());
    const std::size_t length = y_obs.size();

    std::vector<GradientSummary> plans;
    std::vector<Eigen::Index> offsets;
    Eigen::Index total_dim = 0;
    for (const auto& fit : fits) {
        plans.emplace_back(fit);
        offsets.push_back(total_dim);
        total_dim += static_cast<Eigen::Index>(plans.back().dimension());
    }

    // Phase 1: one simulated series per prior draw, summarized under every fit.
    std::vector<SsmTheta> thetas(n);
    Eigen::MatrixXd all(static_cast<Eigen::Index>(n), total_dim);
    parallel_for(n, config.workers, [&](std::size_t i) {
        RngStream stream = abc_draw_stream(rng, i);
        thetas[i] = sample_prior(prior, stream);
        const auto row = static_cast<Eigen::Index>(i);
        std::vector<double> y;
        try {
            y = simulate(thetas[i], length, stream).observations;
        } catch (const DomainError&) {
            all.row(row).setConstant(std::numeric_limits<double>::quiet_NaN());
            return;
        }
        const bool finite = std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
        for (std::size_t r = 0; r < plans.size(); ++r) {
            const auto dim = static_cast<Eigen::Index>(plans[r].dimension());
            if (!finite) {
                all.block(row, offsets[r], 1, dim).setConstant(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const auto s = plans[r].compute(y);
            for (Eigen::Index k = 0; k < dim; ++k) {
                all(row, offsets[r] + k) = s[static_cast<std::size_t>(k)];
            }
        }
    });

    // Phase 2: weight matrix from all draws, then nearest-neighbour selection.
    std::vector<AbcPosterior> out;
    out.reserve(fits.size());
    for (std::size_t r = 0; r < fits.size(); ++r) {
        AbcPosterior post;
        post.rule_label = fits[r].rule.label();
        const auto dim = static_cast<Eigen::Index>(plans[r].dimension());
        post.summaries = all.middleCols(offsets[r], dim);
        post.weight_matrix = estimate_weight_matrix(post.summaries);
        post.distances.resize(n);
        std::vector<double> s(static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = post.summaries.row(static_cast<Eigen::Index>(i));
            if (!row.allFinite()) {
                post.distances[i] = std::numeric_limits<double>::infinity();
                continue;
            }
            for (Eigen::Index k = 0; k < dim; ++k) {
                s[static_cast<std::size_t>(k)] = row(k);
            }
            post.distances[i] = mahalanobis(s, post.weight_matrix);
        }
        post.kept_indices = nearest_indices(post.distances, keep);
        for (const auto i : post.kept_indices) {
            post.kept_thetas.push_back(thetas[i]);
            post.kept_distances.push_back(post.distances[i]);
        }
        out.push_back(std::move(post));
    }
    return out;
}

}  // namespace abf

#include "abf/auxiliary.hpp"

#include "abf/detail/score_kernels.hpp"
#include "abf/error.hpp"
#include "abf/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace abf {

namespace {

constexpr double kFdRelativeStep = 1e-6;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double s) { return std::log(s / (1.0 - s)); }

// -log(1 + exp(-u)) without overflow.
double log_logistic(double u) { return u > 0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u)); }

// Score sum over predictives for y[1..n-1] under ARCH/GARCH variance
// recursions; `kernel(mean, variance, y)`.
template <typename Kernel>
double arch_sum(const ArchParams& p, std::span<const double> y, Kernel&& kernel) {
    double sum = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double r = y[t - 1] - p.beta0;
        const double v = p.beta1 + p.beta2 * r * r;
        sum += kernel(p.beta0, v, y[t]);
    }
    return sum;
}

template <typename Kernel>
double garch_sum(const GarchParams& p, std::span<const double> y, Kernel&& kernel) {
    double v = p.beta1 / (1.0 - p.beta2 - p.beta3);
    double sum = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double r = y[t - 1] - p.beta0;
        v = p.beta1 + p.beta2 * v + p.beta3 * r * r;
        sum += kernel(p.beta0, v, y[t]);
    }
    return sum;
}

template <typename Kernel>
double aux_sum(const AuxParams& params, std::span<const double> y, Kernel&& kernel) {
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        return arch_sum(*a, y, kernel);
    }
    return garch_sum(std::get<GarchParams>(params), y, kernel);
}

// Criterion without validation; the rule dispatch happens once per pass.
double criterion_unchecked(const ScoringRule& rule, const AuxParams& params, std::span<const double> y) {
    switch (rule.kind()) {
        case RuleKind::ls:
            return aux_sum(params, y, [](double m, double v, double obs) { return detail::ls_kernel(m, v, obs); });
        case RuleKind::crps:
            return aux_sum(params, y,
                           [](double m, double v, double obs) { return detail::crps_kernel(m, std::sqrt(v), obs); });
        case RuleKind::cls: {
            const RegionSpec region = rule.region();
            return aux_sum(params, y, [region](double m, double v, double obs) {
                if (region.contains(obs)) {
                    return detail::ls_kernel(m, v, obs);
                }
                return detail::cls_kernel(region, m, v, std::sqrt(v), obs);
            });
        }
        case RuleKind::interval: {
            const double level = rule.level();
            const double z = rule.interval_z();
            return aux_sum(params, y, [level, z](double m, double v, double obs) {
                return detail::interval_kernel(level, z, m, std::sqrt(v), obs);
            });
        }
    }
    return 0.0;
}

using Pins = std::array<std::optional<double>, 3>;

// Map between unconstrained coordinates and beta with optional pinned
// coordinates. Pinned entries of u are ignored.
struct Reparam {
    AuxModel model;
    Pins pins{};

    std::size_t dim() const { return dimension(model); }

    std::vector<std::size_t> free_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < dim(); ++i) {
            if (i >= pins.size() || !pins[i]) {
                out.push_back(i);
            }
        }
        return out;
    }

    AuxParams map(std::span<const double> u) const {
        const double b0 = pins[0] ? *pins[0] : u[0];
        const double b1 = pins[1] ? *pins[1] : std::exp(u[1]);
        const double b2 = pins[2] ? *pins[2] : logistic(u[2]);
        if (model == AuxModel::arch) {
            return ArchParams{b0, b1, b2};
        }
        return GarchParams{b0, b1, b2, (1.0 - b2) * logistic(u[3])};
    }

    // d beta / d u (full size; pinned columns are zero).
    Eigen::MatrixXd jacobian(std::span<const double> u) const {
        const std::size_t d = dim();
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        j(0, 0) = pins[0] ? 0.0 : 1.0;
        j(1, 1) = pins[1] ? 0.0 : std::exp(u[1]);
        const double b2 = pins[2] ? *pins[2] : logistic(u[2]);
        const double db2 = pins[2] ? 0.0 : b2 * (1.0 - b2);
        j(2, 2) = db2;
        if (model == AuxModel::garch) {
            const double sb = logistic(u[3]);
            j(3, 2) = -sb * db2;
            j(3, 3) = (1.0 - b2) * sb * (1.0 - sb);
        }
        return j;
    }
};

// (J_ff^T)^{-1} restricted to free coordinates.
Eigen::MatrixXd inverse_jacobian_transpose(const Reparam& reparam, std::span<const double> u,
                                           const std::vector<std::size_t>& free) {
    const Eigen::MatrixXd full = reparam.jacobian(u);
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd jff(nf, nf);
    for (Eigen::Index r = 0; r < nf; ++r) {
        for (Eigen::Index c = 0; c < nf; ++c) {
            jff(r, c) = full(static_cast<Eigen::Index>(free[static_cast<std::size_t>(r)]),
                             static_cast<Eigen::Index>(free[static_cast<std::size_t>(c)]));
        }
    }
    for (Eigen::Index i = 0; i < nf; ++i) {
        if (!(std::abs(jff(i, i)) > 0.0)) {
            throw DomainError("criterion gradient: parameters on the support boundary");
        }
    }
    return jff.transpose().inverse();
}

double typical_scale(const AuxParams& params) {
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        return std::sqrt(a->beta1 / (1.0 - a->beta2));
    }
    const auto& g = std::get<GarchParams>(params);
    return std::sqrt(g.beta1 / (1.0 - g.beta2 - g.beta3));
}

double fd_step(double u, double typical) { return kFdRelativeStep * std::max(std::abs(u), typical); }

// Finite-difference gradient w.r.t. beta over the free coordinates.
std::vector<double> gradient_free(const ScoringRule& rule, const Reparam& reparam, std::span<const double> u,
                                  std::span<const double> y) {
    const auto free = reparam.free_indices();
    const double typ0 = typical_scale(reparam.map(u));
    std::vector<double> g_u(free.size());
    std::vector<double> shifted(u.begin(), u.end());
    for (std::size_t k = 0; k < free.size(); ++k) {
        const std::size_t i = free[k];
        const double h = fd_step(u[i], i == 0 ? typ0 : 1.0);
        shifted[i] = u[i] + h;
        const double up = criterion_unchecked(rule, reparam.map(shifted), y);
        const double hi = shifted[i];
        shifted[i] = u[i] - h;
        const double down = criterion_unchecked(rule, reparam.map(shifted), y);
        const double lo = shifted[i];
        shifted[i] = u[i];
        g_u[k] = (up - down) / (hi - lo);
    }
    const Eigen::MatrixXd inv_jt = inverse_jacobian_transpose(reparam, u, free);
    const Eigen::VectorXd g_beta =
        inv_jt * Eigen::Map<const Eigen::VectorXd>(g_u.data(), static_cast<Eigen::Index>(g_u.size()));
    return {g_beta.data(), g_beta.data() + g_beta.size()};
}

}  // namespace

std::string_view to_string(AuxModel model) { return model == AuxModel::arch ? "arch" : "garch"; }

AuxModel parse_aux_model(std::string_view name) {
    if (name == "arch") {
        return AuxModel::arch;
    }
    if (name == "garch") {
        return AuxModel::garch;
    }
    throw ConfigError("unknown auxiliary model '" + std::string(name) + "' (expected arch or garch)");
}

std::size_t dimension(AuxModel model) { return model == AuxModel::arch ? 3 : 4; }

AuxModel model_of(const AuxParams& params) {
    return std::holds_alternative<ArchParams>(params) ? AuxModel::arch : AuxModel::garch;
}

std::vector<double> to_vector(const AuxParams& params) {
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        return {a->beta0, a->beta1, a->beta2};
    }
    const auto& g = std::get<GarchParams>(params);
    return {g.beta0, g.beta1, g.beta2, g.beta3};
}

AuxParams params_from_vector(AuxModel model, std::span<const double> beta) {
    if (beta.size() != dimension(model)) {
        throw DomainError("auxiliary parameter vector has wrong length for " + std::string(to_string(model)));
    }
    if (model == AuxModel::arch) {
        return ArchParams{beta[0], beta[1], beta[2]};
    }
    return GarchParams{beta[0], beta[1], beta[2], beta[3]};
}

bool in_support(const AuxParams& params) {
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        return std::isfinite(a->beta0) && a->beta1 > 0.0 && std::isfinite(a->beta1) && a->beta2 >= 0.0 &&
               a->beta2 < 1.0;
    }
    const auto& g = std::get<GarchParams>(params);
    return std::isfinite(g.beta0) && g.beta1 > 0.0 && std::isfinite(g.beta1) && g.beta2 >= 0.0 && g.beta2 < 1.0 &&
           g.beta3 >= 0.0 && g.beta3 < 1.0 && g.beta2 + g.beta3 < 1.0;
}

void validate(const ArchParams& p) {
    if (!in_support(AuxParams{p})) {
        throw DomainError("ARCH(1) parameters violate beta1 > 0, 0 <= beta2 < 1");
    }
}

void validate(const GarchParams& p) {
    if (!in_support(AuxParams{p})) {
        throw DomainError("GARCH(1,1) parameters violate beta1 > 0, beta2, beta3 in [0,1), beta2 + beta3 < 1");
    }
}

void validate(const AuxParams& p) {
    std::visit([](const auto& v) { validate(v); }, p);
}

std::vector<double> to_unconstrained(const AuxParams& params) {
    validate(params);
    const auto beta = to_vector(params);
    const auto boundary = [] { return DomainError("auxiliary parameters lie on the support boundary"); };
    if (beta[2] <= 0.0) {
        throw boundary();
    }
    std::vector<double> u{beta[0], std::log(beta[1]), logit(beta[2])};
    if (beta.size() == 4) {
        const double sb = beta[3] / (1.0 - beta[2]);
        if (sb <= 0.0 || sb >= 1.0) {
            throw boundary();
        }
        u.push_back(logit(sb));
    }
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw boundary();
        }
    }
    return u;
}

AuxParams from_unconstrained(AuxModel model, std::span<const double> u) {
    if (u.size() != dimension(model)) {
        throw DomainError("unconstrained vector has wrong length");
    }
    return Reparam{model}.map(u);
}

double log_jacobian(AuxModel model, std::span<const double> u) {
    double lj = u[1] + log_logistic(u[2]) + log_logistic(-u[2]);
    if (model == AuxModel::garch) {
        lj += log_logistic(-u[2]) + log_logistic(u[3]) + log_logistic(-u[3]);
    }
    return lj;
}

std::vector<GaussianPredictive> arch_filter(const ArchParams& params, std::span<const double> y) {
    validate(params);
    if (y.size() < 2) {
        throw DomainError("arch_filter needs at least two observations");
    }
    std::vector<GaussianPredictive> out;
    out.reserve(y.size() - 1);
    arch_sum(params, y, [&out](double m, double v, double) {
        out.push_back({m, v});
        return 0.0;
    });
    return out;
}

std::vector<GaussianPredictive> garch_filter(const GarchParams& params, std::span<const double> y) {
    validate(params);
    if (y.size() < 2) {
        throw DomainError("garch_filter needs at least two observations");
    }
    std::vector<GaussianPredictive> out;
    out.reserve(y.size() - 1);
    garch_sum(params, y, [&out](double m, double v, double) {
        out.push_back({m, v});
        return 0.0;
    });
    return out;
}

std::vector<GaussianPredictive> aux_filter(const AuxParams& params, std::span<const double> y) {
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        return arch_filter(*a, y);
    }
    return garch_filter(std::get<GarchParams>(params), y);
}

GaussianPredictive next_predictive(const AuxParams& params, std::span<const double> y) {
    validate(params);
    if (y.empty()) {
        throw DomainError("next_predictive needs at least one observation");
    }
    if (const auto* a = std::get_if<ArchParams>(&params)) {
        const double r = y.back() - a->beta0;
        return {a->beta0, a->beta1 + a->beta2 * r * r};
    }
    const auto& g = std::get<GarchParams>(params);
    double v = g.beta1 / (1.0 - g.beta2 - g.beta3);
    for (double obs : y) {
        const double r = obs - g.beta0;
        v = g.beta1 + g.beta2 * v + g.beta3 * r * r;
    }
    return {g.beta0, v};
}

double criterion(const ScoringRule& rule, const AuxParams& params, std::span<const double> y) {
    validate(params);
    if (y.size() < 2) {
        throw DomainError("criterion needs at least two observations");
    }
    return criterion_unchecked(rule, params, y);
}

std::vector<double> criterion_gradient(const ScoringRule& rule, const AuxParams& params,
                                       std::span<const double> y) {
    return GradientSummary(rule, params).gradient(y);
}

GradientSummary::GradientSummary(const AuxFit& fit) : GradientSummary(fit.rule, fit.params) {}

GradientSummary::GradientSummary(const ScoringRule& rule, const AuxParams& params)
    : rule_(rule), model_(model_of(params)), dim_(abf::dimension(model_of(params))) {
    const Reparam reparam{model_};
    const auto u = to_unconstrained(params);
    const double typ0 = typical_scale(params);
    std::vector<double> shifted = u;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double h = fd_step(u[i], i == 0 ? typ0 : 1.0);
        shifted[i] = u[i] + h;
        plus_.push_back(reparam.map(shifted));
        const double hi = shifted[i];
        shifted[i] = u[i] - h;
        minus_.push_back(reparam.map(shifted));
        steps_.push_back(hi - shifted[i]);
        shifted[i] = u[i];
        if (!in_support(plus_.back()) || !in_support(minus_.back())) {
            throw DomainError("criterion gradient: finite-difference step leaves the support");
        }
    }
    std::vector<std::size_t> all(dim_);
    std::iota(all.begin(), all.end(), 0);
    const Eigen::MatrixXd inv_jt = inverse_jacobian_transpose(reparam, u, all);
    inv_jacobian_t_.resize(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
            inv_jacobian_t_[r * dim_ + c] = inv_jt(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
}

std::vector<double> GradientSummary::gradient(std::span<const double> y) const {
    if (y.size() < 2) {
        throw DomainError("criterion gradient needs at least two observations");
    }
    std::vector<double> g_u(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        g_u[i] = (criterion_unchecked(rule_, plus_[i], y) - criterion_unchecked(rule_, minus_[i], y)) / steps_[i];
    }
    std::vector<double> g(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) {
            g[r] += inv_jacobian_t_[r * dim_ + c] * g_u[c];
        }
    }
    return g;
}

std::vector<double> GradientSummary::compute(std::span<const double> y) const {
    auto g = gradient(y);
    const double terms = static_cast<double>(y.size() - 1);
    for (double& v : g) {
        v /= terms;
    }
    return g;
}

namespace {

std::vector<AuxParams> starting_points(AuxModel model, std::span<const double> y, const Pins& pins,
                                       std::size_t restarts) {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) {
        ss += (v - mean) * (v - mean);
    }
    const double var = std::max(ss / n, 1e-12);
    const double sd = std::sqrt(var);

    std::vector<AuxParams> starts;
    for (std::size_t k = 0; k < restarts; ++k) {
        const double jitter = (k % 3 == 0 ? 0.0 : (k % 3 == 1 ? 0.05 : -0.05)) * static_cast<double>(1 + k / 3);
        const double b0 = pins[0] ? *pins[0] : mean + jitter * sd;
        if (model == AuxModel::arch) {
            constexpr std::array<double, 3> b2s{0.2, 0.05, 0.5};
            const double b2 = pins[2] ? *pins[2] : b2s[k % 3];
            const double b1 = pins[1] ? *pins[1] : var * (1.0 - b2);
            starts.emplace_back(ArchParams{b0, b1, b2});
        } else {
            constexpr std::array<std::array<double, 2>, 3> pairs{{{0.85, 0.10}, {0.70, 0.20}, {0.50, 0.30}}};
            const double b2 = pins[2] ? *pins[2] : pairs[k % 3][0];
            const double b3 = std::min(pairs[k % 3][1], 0.9 * (1.0 - b2));
            const double b1 = pins[1] ? *pins[1] : var * (1.0 - b2 - b3);
            starts.emplace_back(GarchParams{b0, b1, b2, b3});
        }
    }
    return starts;
}

// Unconstrained coordinates of a start point; pinned entries are set to 0.
std::vector<double> start_coordinates(const AuxParams& start, const Pins& pins) {
    auto beta = to_vector(start);
    std::vector<double> u(beta.size(), 0.0);
    if (!pins[0]) {
        u[0] = beta[0];
    }
    if (!pins[1]) {
        u[1] = std::log(beta[1]);
    }
    if (!pins[2]) {
        u[2] = logit(beta[2]);
    }
    if (beta.size() == 4) {
        u[3] = logit(beta[3] / (1.0 - beta[2]));
    }
    return u;
}

}  // namespace

AuxFit fit_auxiliary(const ScoringRule& rule, AuxModel model, std::span<const double> y, const FitOptions& options) {
    if (y.size() < 50) {
        throw DomainError("fit_auxiliary needs at least 50 observations");
    }
    if (options.restarts == 0) {
        throw DomainError("fit_auxiliary needs at least one restart");
    }
    const Reparam reparam{model, options.pinned};
    const auto free = reparam.free_indices();
    const std::size_t d = dimension(model);

    std::vector<double> full(d, 0.0);
    auto expand = [&](std::span<const double> x) {
        for (std::size_t k = 0; k < free.size(); ++k) {
            full[free[k]] = x[k];
        }
        return reparam.map(full);
    };
    auto objective = [&](std::span<const double> x) {
        const AuxParams p = expand(x);
        if (!in_support(p)) {
            return std::numeric_limits<double>::infinity();
        }
        return -criterion_unchecked(rule, p, y);
    };

    const auto starts = starting_points(model, y, options.pinned, options.restarts);
    double sd_scale = 1.0;
    {
        const auto first = to_vector(starts.front());
        sd_scale = std::sqrt(first[1] / (1.0 - (d == 4 ? first[2] + first[3] : first[2])));
    }

    std::size_t evaluations = 0;
    bool have_best = false;
    std::vector<double> best_x;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> fallback_x;
    double fallback_value = std::numeric_limits<double>::infinity();

    for (const auto& start : starts) {
        const auto u0 = start_coordinates(start, options.pinned);
        std::vector<double> x0;
        NelderMeadOptions nm;
        nm.diameter_tolerance = options.diameter_tolerance;
        nm.max_evaluations = options.max_evaluations;
        for (std::size_t i : free) {
            x0.push_back(u0[i]);
            nm.steps.push_back(i == 0 ? 0.2 * sd_scale : 0.2);
        }
        auto run = nelder_mead(objective, x0, nm);
        evaluations += run.evaluations;
        // Restart once from the reported optimum to guard against a
        // collapsed simplex.
        auto polish = nelder_mead(objective, run.x, nm);
        evaluations += polish.evaluations;
        if (polish.value > run.value) {
            polish.x = run.x;
            polish.value = run.value;
        }
        if (polish.value < fallback_value) {
            fallback_value = polish.value;
            fallback_x = polish.x;
        }
        if (polish.converged && polish.value < best_value) {
            have_best = true;
            best_value = polish.value;
            best_x = polish.x;
        }
    }

    if (!have_best) {
        throw OptimizationError("fit_auxiliary: no Nelder-Mead run converged for rule " + rule.label(),
                                to_vector(expand(fallback_x)), -fallback_value);
    }

    const AuxParams params = expand(best_x);
    const auto g = gradient_free(rule, reparam, full, y);
    double norm = 0.0;
    for (double v : g) {
        norm += v * v;
    }
    return AuxFit{params, rule, -best_value, std::sqrt(norm), evaluations};
}

}  // namespace abf

#include "abf/scoring.hpp"

#include "abf/detail/score_kernels.hpp"
#include "abf/distributions.hpp"
#include "abf/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace abf {

std::string RuleSpec::label() const {
    switch (kind) {
        case RuleKind::ls:
            return "LS";
        case RuleKind::crps:
            return "CRPS";
        case RuleKind::cls:
            return "CLS" + std::to_string(static_cast<int>(std::lround(level * 100.0)));
        case RuleKind::interval:
            return "IS";
    }
    return "?";
}

RuleSpec RuleSpec::parse(std::string_view name) {
    if (name == "LS") {
        return {RuleKind::ls, 0.0};
    }
    if (name == "CRPS") {
        return {RuleKind::crps, 0.0};
    }
    if (name == "IS") {
        return {RuleKind::interval, 0.05};
    }
    if (name.starts_with("CLS") && name.size() > 3) {
        int pct = 0;
        const auto digits = name.substr(3);
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), pct);
        if (ec == std::errc() && end == digits.data() + digits.size() && pct > 0 && pct < 100) {
            return {RuleKind::cls, pct / 100.0};
        }
    }
    throw ConfigError("unknown scoring rule '" + std::string(name) +
                      "' (expected LS, CRPS, IS or CLS<pct> such as CLS10)");
}

std::vector<RuleSpec> default_rule_specs() {
    return {RuleSpec::parse("LS"),    RuleSpec::parse("CLS10"), RuleSpec::parse("CLS20"),
            RuleSpec::parse("CLS80"), RuleSpec::parse("CLS90"), RuleSpec::parse("CRPS"),
            RuleSpec::parse("IS")};
}

ScoringRule ScoringRule::log_score() { return ScoringRule(RuleKind::ls, "LS"); }

ScoringRule ScoringRule::crps() { return ScoringRule(RuleKind::crps, "CRPS"); }

ScoringRule ScoringRule::censored(RegionSpec region, std::string label) {
    if (!std::isfinite(region.threshold)) {
        throw DomainError("CLS region threshold must be finite");
    }
    ScoringRule rule(RuleKind::cls, std::move(label));
    rule.region_ = region;
    return rule;
}

ScoringRule ScoringRule::interval(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("interval score level must lie in (0,1)");
    }
    ScoringRule rule(RuleKind::interval, "IS");
    rule.level_ = level;
    rule.interval_z_ = normal_quantile(1.0 - 0.5 * level);
    return rule;
}

double score_gaussian(const ScoringRule& rule, const GaussianPredictive& pred, double y) {
    if (!(pred.variance > 0.0) || !std::isfinite(pred.variance)) {
        throw DomainError("Gaussian predictive variance must be positive and finite");
    }
    return detail::score_kernel(rule, pred.mean, pred.variance, y);
}

namespace detail {

void validate_mixture(const PredictiveMixture& mix) {
    if (mix.components.empty()) {
        throw DomainError("predictive mixture must have at least one component");
    }
    for (const auto& c : mix.components) {
        if (!(c.variance > 0.0) || !std::isfinite(c.variance)) {
            throw DomainError("mixture component variance must be positive and finite");
        }
    }
}

}  // namespace detail

namespace {

double log_mean_exp(std::span<const double> logs) {
    const double peak = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(peak)) {
        return peak;
    }
    double acc = 0.0;
    for (double v : logs) {
        acc += std::exp(v - peak);
    }
    return peak + std::log(acc / static_cast<double>(logs.size()));
}

}  // namespace

double mixture_logpdf(const PredictiveMixture& mix, double y) {
    detail::validate_mixture(mix);
    std::vector<double> logs(mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
        logs[i] = detail::ls_kernel(mix.components[i].mean, mix.components[i].variance, y);
    }
    return log_mean_exp(logs);
}

double mixture_cdf(const PredictiveMixture& mix, double y) {
    detail::validate_mixture(mix);
    double acc = 0.0;
    for (const auto& c : mix.components) {
        acc += normal_cdf((y - c.mean) / std::sqrt(c.variance));
    }
    return acc / static_cast<double>(mix.size());
}

double mixture_quantile(const PredictiveMixture& mix, double p) {
    detail::validate_mixture(mix);
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("mixture_quantile: probability must lie in (0,1)");
    }
    // The mixture quantile lies between the smallest and largest component
    // quantiles.
    const double zp = normal_quantile(p);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : mix.components) {
        const double q = c.mean + zp * std::sqrt(c.variance);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (lo == hi) {
        return lo;
    }
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f = mixture_cdf(mix, mid);
        if (std::abs(f - p) <= 1e-12 || mid <= lo || mid >= hi) {
            return mid;
        }
        if (f < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double expected_abs_normal(double m, double s) {
    if (s <= 0.0) {
        return std::abs(m);
    }
    const double z = m / s;
    return s * 2.0 * kInvSqrt2Pi * std::exp(-0.5 * z * z) + m * std::erf(z * detail::kInvSqrt2);
}

double mixture_crps(const PredictiveMixture& mix, double y) {
    detail::validate_mixture(mix);
    const std::size_t n = mix.size();
    std::vector<double> sd(n);
    double to_obs = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sd[i] = std::sqrt(mix.components[i].variance);
        to_obs += expected_abs_normal(mix.components[i].mean - y, sd[i]);
        diag += sd[i];
    }
    // E|X - X'| = n^-2 [sum_i 2 sd_i / sqrt(pi) + 2 sum_{i<j} E|N(m_i - m_j, v_i + v_j)|]
    double pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = mix.components[i].mean;
        const double vi = mix.components[i].variance;
        double row = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            row += expected_abs_normal(mi - mix.components[j].mean, std::sqrt(vi + mix.components[j].variance));
        }
        pairs += row;
    }
    const double nn = static_cast<double>(n);
    const double spread = (2.0 * detail::kInvSqrtPi * diag + 2.0 * pairs) / (nn * nn);
    return -(to_obs / nn - 0.5 * spread);
}

double score_mixture(const ScoringRule& rule, const PredictiveMixture& mix, double y) {
    switch (rule.kind()) {
        case RuleKind::ls:
            return mixture_logpdf(mix, y);
        case RuleKind::crps:
            return mixture_crps(mix, y);
        case RuleKind::cls: {
            const auto& region = rule.region();
            if (region.contains(y)) {
                return mixture_logpdf(mix, y);
            }
            detail::validate_mixture(mix);
            std::vector<double> logs(mix.size());
            for (std::size_t i = 0; i < mix.size(); ++i) {
                const auto& c = mix.components[i];
                const double sd = std::sqrt(c.variance);
                logs[i] = region.kind == TailKind::lower ? normal_logcdf((c.mean - region.threshold) / sd)
                                                         : normal_logcdf((region.threshold - c.mean) / sd);
            }
            return log_mean_exp(logs);
        }
        case RuleKind::interval: {
            const double lower = mixture_quantile(mix, 0.5 * rule.level());
            const double upper = mixture_quantile(mix, 1.0 - 0.5 * rule.level());
            return detail::interval_from_endpoints(rule.level(), lower, upper, y);
        }
    }
    return 0.0;
}

}  // namespace abf

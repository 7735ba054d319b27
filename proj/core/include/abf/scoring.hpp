#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abf {

enum class RuleKind { ls, crps, cls, interval };
enum class TailKind { lower, upper };

/// Region A of the censored log score. Lower tail: A = (-inf, threshold];
/// upper tail: A = [threshold, inf).
struct RegionSpec {
    TailKind kind = TailKind::lower;
    double threshold = 0.0;

    bool contains(double y) const noexcept {
        return kind == TailKind::lower ? y <= threshold : y >= threshold;
    }
};

/// A rule as named in configuration, before any CLS threshold is resolved
/// from data: LS, CRPS, CLS<pct> (e.g. CLS10, CLS90), IS (level 0.05).
struct RuleSpec {
    RuleKind kind = RuleKind::ls;
    double level = 0.0;  // CLS quantile level, or IS miscoverage level

    std::string label() const;
    /// ConfigError on unknown names.
    static RuleSpec parse(std::string_view name);
    bool operator==(const RuleSpec&) const = default;
};

/// The seven focusing/evaluation rules in table order.
std::vector<RuleSpec> default_rule_specs();

/// Positively oriented scoring rule, ready to evaluate.
class ScoringRule {
public:
    static ScoringRule log_score();
    static ScoringRule crps();
    static ScoringRule censored(RegionSpec region, std::string label = "CLS");
    /// Interval score of the central 100(1 - level)% interval; DomainError
    /// unless level in (0, 1).
    static ScoringRule interval(double level = 0.05);

    RuleKind kind() const noexcept { return kind_; }
    const RegionSpec& region() const noexcept { return region_; }
    double level() const noexcept { return level_; }
    /// Phi^{-1}(1 - level/2) for the interval score.
    double interval_z() const noexcept { return interval_z_; }
    const std::string& label() const noexcept { return label_; }

private:
    ScoringRule(RuleKind kind, std::string label) : kind_(kind), label_(std::move(label)) {}

    RuleKind kind_;
    RegionSpec region_{};
    double level_ = 0.0;
    double interval_z_ = 0.0;
    std::string label_;
};

struct GaussianPredictive {
    double mean = 0.0;
    double variance = 1.0;
};

/// Equally weighted mixture of Gaussian components.
struct PredictiveMixture {
    std::vector<GaussianPredictive> components;

    std::size_t size() const noexcept { return components.size(); }
};

/// DomainError on non-positive variance.
double score_gaussian(const ScoringRule& rule, const GaussianPredictive& pred, double y);

double mixture_logpdf(const PredictiveMixture& mix, double y);
double mixture_cdf(const PredictiveMixture& mix, double y);
/// Bracketing bisection; |cdf(q) - p| < 1e-10. DomainError unless p in (0, 1).
double mixture_quantile(const PredictiveMixture& mix, double p);
/// Closed-form CRPS (positively oriented) of an equally weighted mixture,
/// -(E|X - y| - E|X - X'| / 2).
double mixture_crps(const PredictiveMixture& mix, double y);
double score_mixture(const ScoringRule& rule, const PredictiveMixture& mix, double y);

/// E|N(m, s^2)|.
double expected_abs_normal(double m, double s);

namespace detail {
void validate_mixture(const PredictiveMixture& mix);
}

}  // namespace abf

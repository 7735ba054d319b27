#include "abf/particle.hpp"

#include "abf/error.hpp"
#include "abf/evaluation.hpp"
#include "abf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

namespace abf {

namespace {

// Largest number of stored hold-out components before the multi-posterior
// evaluation stops sharing filters across posteriors.
constexpr std::size_t kSharedComponentBudget = std::size_t{1} << 26;

std::vector<double> cumulative_weights(std::span<const double> log_weights) {
    std::vector<double> cum(log_weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        acc += std::exp(log_weights[i]);
        cum[i] = acc;
    }
    return cum;
}

std::size_t pick(const std::vector<double>& cum, double u) {
    const double target = u * cum.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

void check_split(std::size_t split, std::size_t length) {
    if (split < 1 || split >= length) {
        throw ConfigError("hold-out split must satisfy 1 <= split < series length");
    }
}

}  // namespace

void FilterConfig::validate() const {
    if (n_particles < 100) {
        throw ConfigError("particle filter needs n_particles >= 100");
    }
    if (state_draws_per_theta < 1) {
        throw ConfigError("particle filter needs state_draws_per_theta >= 1");
    }
}

std::vector<std::size_t> systematic_resample(std::span<const double> log_weights, std::size_t n, RngStream& rng) {
    if (log_weights.empty() || n == 0) {
        throw DomainError("systematic resampling needs weights and n >= 1");
    }
    const auto cum = cumulative_weights(log_weights);
    const double total = cum.back();
    const double u0 = rng.uniform();
    std::vector<std::size_t> out(n);
    std::size_t j = 0;
    const std::size_t last = cum.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (u0 + static_cast<double>(i)) / static_cast<double>(n) * total;
        while (j < last && cum[j] <= u) {
            ++j;
        }
        out[i] = j;
    }
    return out;
}

double bootstrap_filter(const SsmTheta& theta, std::span<const double> y, const FilterConfig& config,
                        RngStream& rng, const CloudVisitor& visit) {
    config.validate();
    validate(theta);
    const std::size_t n = config.n_particles;
    const double mu = measurement_mean(theta);
    const double log_n = std::log(static_cast<double>(n));

    ParticleCloud cloud;
    cloud.particles.resize(n);
    cloud.log_weights.resize(n);
    std::vector<double> next(n);
    for (auto& x : cloud.particles) {
        x = sv_initial_sample(theta, rng);
    }

    double log_likelihood = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (t > 0) {
            const auto idx = systematic_resample(cloud.log_weights, n, rng);
            for (std::size_t i = 0; i < n; ++i) {
                next[i] = sv_transition_sample(cloud.particles[idx[i]], theta, rng);
            }
            cloud.particles.swap(next);
        }
        double max_lw = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double lw = sv_measurement_logpdf(y[t], cloud.particles[i], mu);
            cloud.log_weights[i] = std::isnan(lw) ? -std::numeric_limits<double>::infinity() : lw;
            max_lw = std::max(max_lw, cloud.log_weights[i]);
        }
        if (!std::isfinite(max_lw)) {
            throw FilterDegeneracyError(t);
        }
        double sum = 0.0;
        for (const double lw : cloud.log_weights) {
            sum += std::exp(lw - max_lw);
        }
        const double lse = max_lw + std::log(sum);
        log_likelihood += lse - log_n;
        for (auto& lw : cloud.log_weights) {
            lw -= lse;
        }
        if (visit) {
            visit(t, cloud);
        }
    }
    return log_likelihood;
}

FilterResult bootstrap_filter(const SsmTheta& theta, std::span<const double> y, const FilterConfig& config,
                              RngStream& rng) {
    FilterResult result;
    result.clouds.reserve(y.size());
    result.log_likelihood =
        bootstrap_filter(theta, y, config, rng, [&](std::size_t, const ParticleCloud& c) { result.clouds.push_back(c); });
    return result;
}

void append_predictive_components(const SsmTheta& theta, const ParticleCloud& cloud, std::size_t k,
                                  RngStream& rng, std::vector<GaussianPredictive>& out) {
    if (cloud.particles.empty() || cloud.particles.size() != cloud.log_weights.size()) {
        throw DomainError("particle cloud is empty or has mismatched sizes");
    }
    const auto cum = cumulative_weights(cloud.log_weights);
    const double mu = measurement_mean(theta);
    for (std::size_t j = 0; j < k; ++j) {
        const double x = cloud.particles[pick(cum, rng.uniform())];
        const double next = sv_transition_sample(x, theta, rng);
        out.push_back({mu, std::exp(std::clamp(next, -kMaxPredictiveLogVariance, kMaxPredictiveLogVariance))});
    }
}

PredictiveMixture one_step_predictive(std::span<const SsmTheta> thetas, std::span<const ParticleCloud> clouds,
                                      std::size_t k, RngStream& rng) {
    if (thetas.empty()) {
        throw DomainError("predictive mixture needs at least one theta");
    }
    if (thetas.size() != clouds.size()) {
        throw DomainError("one particle cloud per theta is required");
    }
    if (k < 1) {
        throw DomainError("predictive mixture needs K >= 1");
    }
    PredictiveMixture mix;
    mix.components.reserve(thetas.size() * k);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        append_predictive_components(thetas[i], clouds[i], k, rng, mix.components);
    }
    return mix;
}

RngStream filter_stream(const RngStream& rng, std::size_t index) {
    return RngStream(rng.seed(), stream_id(StreamPurpose::filter, splitmix64(rng.stream_id()) ^ index, 0));
}

std::vector<std::vector<GaussianPredictive>> theta_holdout_components(const SsmTheta& theta, std::size_t index,
                                                                       std::span<const double> y_full,
                                                                       std::size_t split, const FilterConfig& config,
                                                                       const RngStream& rng) {
    check_split(split, y_full.size());
    const std::size_t k = config.state_draws_per_theta;
    std::vector<std::vector<GaussianPredictive>> out(y_full.size() - split);
    RngStream filter_rng = filter_stream(rng, index);
    RngStream draw_rng(rng.seed(), stream_id(StreamPurpose::filter, splitmix64(rng.stream_id()) ^ index, 1));
    // The cloud at t predicts y[t + 1]; the last observation is never filtered.
    bootstrap_filter(theta, y_full.first(y_full.size() - 1), config, filter_rng,
                     [&](std::size_t t, const ParticleCloud& cloud) {
                         if (t + 1 >= split) {
                             auto& slot = out[t + 1 - split];
                             slot.reserve(k);
                             append_predictive_components(theta, cloud, k, draw_rng, slot);
                         }
                     });
    return out;
}

RollingEval rolling_predictive_eval(const AbcPosterior& posterior, std::span<const double> y_full,
                                    std::size_t split, const FilterConfig& config,
                                    const std::vector<ScoringRule>& rules, const RngStream& rng) {
    return std::move(rolling_predictive_eval(std::vector<AbcPosterior>{posterior}, y_full, split, config, rules, rng)
                         .front());
}

std::vector<RollingEval> rolling_predictive_eval(const std::vector<AbcPosterior>& posteriors,
                                                 std::span<const double> y_full, std::size_t split,
                                                 const FilterConfig& config, const std::vector<ScoringRule>& rules,
                                                 const RngStream& rng) {
    config.validate();
    check_split(split, y_full.size());
    if (rules.empty()) {
        throw ConfigError("rolling evaluation needs at least one rule");
    }
    const std::size_t horizon = y_full.size() - split;
    const std::size_t k = config.state_draws_per_theta;

    using Components = std::vector<std::vector<GaussianPredictive>>;
    struct Slot {
        std::optional<Components> components;
        std::optional<std::size_t> degenerate_at;
    };

    auto filter_draws = [&](const std::vector<std::pair<std::size_t, SsmTheta>>& draws) {
        std::vector<Slot> slots(draws.size());
        parallel_for(draws.size(), config.workers, [&](std::size_t j) {
            try {
                slots[j].components =
                    theta_holdout_components(draws[j].second, draws[j].first, y_full, split, config, rng);
            } catch (const FilterDegeneracyError& e) {
                slots[j].degenerate_at = e.time_index();
            }
        });
        return slots;
    };

    // Draw index -> theta over all posteriors.
    std::map<std::size_t, SsmTheta> unique;
    for (const auto& post : posteriors) {
        if (post.kept_thetas.empty() || post.kept_thetas.size() != post.kept_indices.size()) {
            throw DomainError("ABC posterior has no kept draws or inconsistent indices");
        }
        for (std::size_t i = 0; i < post.kept_thetas.size(); ++i) {
            unique.emplace(post.kept_indices[i], post.kept_thetas[i]);
        }
    }
    const bool share = unique.size() * horizon * k <= kSharedComponentBudget;

    std::map<std::size_t, const Slot*> shared_lookup;
    std::vector<Slot> shared_slots;
    if (share) {
        std::vector<std::pair<std::size_t, SsmTheta>> draws(unique.begin(), unique.end());
        shared_slots = filter_draws(draws);
        for (std::size_t j = 0; j < draws.size(); ++j) {
            shared_lookup.emplace(draws[j].first, &shared_slots[j]);
        }
    }

    std::vector<RollingEval> out;
    out.reserve(posteriors.size());
    for (const auto& post : posteriors) {
        std::vector<Slot> own;
        std::vector<const Slot*> slots;
        if (share) {
            for (const auto idx : post.kept_indices) {
                slots.push_back(shared_lookup.at(idx));
            }
        } else {
            std::vector<std::pair<std::size_t, SsmTheta>> draws;
            for (std::size_t i = 0; i < post.kept_thetas.size(); ++i) {
                draws.emplace_back(post.kept_indices[i], post.kept_thetas[i]);
            }
            own = filter_draws(draws);
            for (const auto& s : own) {
                slots.push_back(&s);
            }
        }

        RollingEval eval;
        for (const auto& rule : rules) {
            eval.rule_labels.push_back(rule.label());
        }
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (slots[i]->degenerate_at) {
                ++eval.dropped_thetas;
                eval.warnings.push_back(post.rule_label + ": dropped draw " + std::to_string(post.kept_indices[i]) +
                                        " (filter degenerated at t=" + std::to_string(*slots[i]->degenerate_at) + ")");
            }
        }
        if (10 * eval.dropped_thetas > slots.size()) {
            throw EstimationError(post.rule_label + ": particle filter degenerated for more than 10% of kept draws");
        }

        std::vector<PredictiveMixture> mixtures(horizon);
        for (std::size_t h = 0; h < horizon; ++h) {
            auto& comps = mixtures[h].components;
            comps.reserve((slots.size() - eval.dropped_thetas) * k);
            for (const auto* slot : slots) {
                if (slot->components) {
                    const auto& c = (*slot->components)[h];
                    comps.insert(comps.end(), c.begin(), c.end());
                }
            }
        }
        eval.averages = average_score_row(mixtures, y_full.subspan(split), rules, config.workers);
        out.push_back(std::move(eval));
    }
    return out;
}

}  // namespace abf

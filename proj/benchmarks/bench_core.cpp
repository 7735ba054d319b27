#include "abf/abc.hpp"
#include "abf/auxiliary.hpp"
#include "abf/distributions.hpp"
#include "abf/models.hpp"
#include "abf/particle.hpp"
#include "abf/scoring.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

std::vector<double> sv_series(std::size_t n) {
    abf::RngStream rng(1, 0);
    return abf::simulate_sv_gaussian({0.95, 0.3, 0.0009, -1.3}, n, rng).observations;
}

abf::ScoringRule rule_for(int idx) {
    switch (idx) {
        case 0:
            return abf::ScoringRule::log_score();
        case 1:
            return abf::ScoringRule::censored({abf::TailKind::lower, -0.6}, "CLS10");
        case 2:
            return abf::ScoringRule::crps();
        default:
            return abf::ScoringRule::interval();
    }
}

void BM_Criterion(benchmark::State& state) {
    const auto y = sv_series(2000);
    const auto rule = rule_for(static_cast<int>(state.range(0)));
    const abf::GarchParams p{0.0, 0.05, 0.85, 0.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(abf::criterion(rule, p, y));
    }
    state.SetLabel(rule.label());
}
BENCHMARK(BM_Criterion)->DenseRange(0, 3);

void BM_Summary(benchmark::State& state) {
    const auto y = sv_series(2000);
    const auto fit = abf::fit_auxiliary(rule_for(static_cast<int>(state.range(0))), abf::AuxModel::garch, y);
    const abf::GradientSummary summary(fit);
    const auto sim = sv_series(2000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(summary.compute(sim));
    }
    state.SetLabel(fit.rule.label());
}
BENCHMARK(BM_Summary)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_MixtureCrps(benchmark::State& state) {
    abf::RngStream rng(2, 0);
    abf::PredictiveMixture mix;
    for (int i = 0; i < state.range(0); ++i) {
        mix.components.push_back({0.0, std::exp(-1.3 + 0.5 * rng.normal())});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(abf::mixture_crps(mix, 0.7));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MixtureCrps)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_FilterStep(benchmark::State& state) {
    const auto y = sv_series(100);
    abf::FilterConfig cfg;
    cfg.n_particles = static_cast<std::size_t>(state.range(0));
    const auto theta = abf::to_theta(abf::SvGaussianParams{0.95, 0.3, 0.0009, -1.3});
    abf::RngStream rng(3, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(abf::bootstrap_filter(theta, y, cfg, rng, {}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.size()));
}
BENCHMARK(BM_FilterStep)->Arg(200)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_StableSample(benchmark::State& state) {
    abf::RngStream rng(4, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(abf::stable_sample(1.5, -1.0, rng));
    }
}
BENCHMARK(BM_StableSample);

void BM_SimulateSv(benchmark::State& state) {
    abf::RngStream rng(5, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(abf::simulate_sv_gaussian({0.95, 0.3, 0.0009, -1.3}, 2000, rng));
    }
}
BENCHMARK(BM_SimulateSv)->Unit(benchmark::kMicrosecond);

}  // namespace

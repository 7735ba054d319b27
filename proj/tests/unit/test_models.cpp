#include "abf/abc.hpp"
#include "abf/distributions.hpp"
#include "abf/error.hpp"
#include "abf/models.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

using namespace abf;

const SvGaussianParams kPaperSv{0.95, 0.3, 0.0009, -1.3};
const SkewSvParams kPaperSkew{0.9, -0.4581, 0.4173, -5.0};

// Batch-means standard error of the mean of a stationary dependent series.
double batch_se(const std::vector<double>& x, std::size_t batches = 200) {
    const std::size_t len = x.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) {
            s += x[i];
        }
        means.push_back(s / static_cast<double>(len));
    }
    return std::sqrt(oracle::variance(means) / static_cast<double>(batches));
}

double lag1_autocorrelation(const std::vector<double>& x) {
    const double m = oracle::mean(x);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - m) * (x[t] - m);
        if (t > 0) {
            num += (x[t] - m) * (x[t - 1] - m);
        }
    }
    return num / den;
}

TEST(SvGaussian, DegenerateStateIsConstant) {
    RngStream rng(1, 0);
    const auto path = simulate_sv_gaussian({0.0, 0.0, 0.5, -1.0}, 200000, rng);
    for (double h : path.states) {
        ASSERT_EQ(h, -1.0);
    }
    EXPECT_NEAR(oracle::mean(path.observations), 0.5, 3.0 * oracle::mean_se(path.observations));
    // Var of the sample variance of iid normals: 2 sigma^4 / (n - 1).
    const double v = std::exp(-1.0);
    EXPECT_NEAR(oracle::variance(path.observations), v, 3.0 * v * std::sqrt(2.0 / 200000.0));
}

TEST(SvGaussian, StationaryStateVarianceAtPaperValues) {
    RngStream rng(2, 0);
    const std::size_t n = 1000000;
    const auto path = simulate_sv_gaussian(kPaperSv, n, rng);
    const double target = 0.3 * 0.3 / (1.0 - 0.95 * 0.95);
    EXPECT_NEAR(target, 0.9231, 1e-4);
    // Gaussian AR(1): Var(sample variance) ~ 2 s^4 (1 + phi^2) / ((1 - phi^2) n).
    const double phi2 = 0.95 * 0.95;
    const double se = std::sqrt(2.0 * target * target * (1.0 + phi2) / ((1.0 - phi2) * static_cast<double>(n)));
    EXPECT_NEAR(oracle::variance(path.states), target, 3.0 * se);
    EXPECT_NEAR(oracle::mean(path.observations), kPaperSv.mu, 3.0 * oracle::mean_se(path.observations));
    // Lag-1 autocorrelation of an AR(1): SE ~ sqrt((1 - phi^2) / n).
    EXPECT_NEAR(lag1_autocorrelation(path.states), 0.95, 3.0 * std::sqrt((1.0 - phi2) / static_cast<double>(n)));
}

TEST(SvGaussian, InvalidParametersThrow) {
    RngStream rng(1, 0);
    EXPECT_THROW(simulate_sv_gaussian({1.0, 0.3, 0.0, 0.0}, 10, rng), DomainError);
    EXPECT_THROW(simulate_sv_gaussian({0.5, -0.1, 0.0, 0.0}, 10, rng), DomainError);
    EXPECT_THROW(simulate_skew_sv({0.9, 0.0, 0.0, -5.0}, 10, rng), DomainError);
    EXPECT_THROW(simulate_stable_sv({0.0, 0.9, 0.1, 1.0}, 10, rng), DomainError);
    EXPECT_THROW(simulate_stable_sv({0.0, 0.9, 0.0, 1.5}, 10, rng), DomainError);
}

TEST(SvGaussian, StepwiseReplayEqualsSimulator) {
    RngStream a(5, 5);
    const auto path = simulate_sv_gaussian(kPaperSv, 500, a);
    RngStream b(5, 5);
    const SsmTheta theta = to_theta(kPaperSv);
    double h = sv_initial_sample(theta, b);
    for (std::size_t t = 0; t < 500; ++t) {
        if (t > 0) {
            h = sv_transition_sample(h, theta, b);
        }
        ASSERT_EQ(h, path.states[t]);
        ASSERT_EQ(kPaperSv.mu + std::exp(0.5 * h) * b.normal(), path.observations[t]);
    }
}

TEST(StableSv, StepwiseReplayEqualsSimulator) {
    const StableSvParams p{-0.05, 0.95, 0.2, 1.7};
    RngStream a(6, 1);
    const auto path = simulate_stable_sv(p, 300, a);
    RngStream b(6, 1);
    const SsmTheta theta = to_theta(p);
    double h = sv_initial_sample(theta, b);
    for (std::size_t t = 0; t < 300; ++t) {
        if (t > 0) {
            h = sv_transition_sample(h, theta, b);
        }
        ASSERT_EQ(h, path.states[t]);
        ASSERT_EQ(std::exp(0.5 * h) * b.normal(), path.observations[t]);
    }
}

TEST(StableSv, DeterministicGivenSeed) {
    const StableSvParams p{0.0, 0.9, 0.2, 1.5};
    RngStream a(3, 3);
    RngStream b(3, 3);
    EXPECT_EQ(simulate_stable_sv(p, 1000, a).observations, simulate_stable_sv(p, 1000, b).observations);
}

TEST(StableSv, AlphaTwoMatchesGaussianSvInDistribution) {
    // alpha = 2 stable innovations are N(0, 2): compare stationary moments
    // with the Gaussian SV at sigma_alpha = sigma_h sqrt(2), h_bar = omega / (1 - phi).
    const StableSvParams p{-0.1, 0.9, 0.2, 2.0};
    const std::size_t n = 400000;
    RngStream rng(8, 0);
    const auto path = simulate_stable_sv(p, n, rng);
    const double h_bar = p.omega / (1.0 - p.phi);
    const double sigma = p.sigma_h * std::sqrt(2.0);
    const double var = sigma * sigma / (1.0 - p.phi * p.phi);
    EXPECT_NEAR(oracle::mean(path.states), h_bar, 3.0 * batch_se(path.states));
    const double se_var = std::sqrt(2.0 * var * var * (1.0 + p.phi * p.phi) / ((1.0 - p.phi * p.phi) * n));
    EXPECT_NEAR(oracle::variance(path.states), var, 3.0 * se_var);
    EXPECT_NEAR(lag1_autocorrelation(path.states), p.phi, 3.0 * std::sqrt((1.0 - p.phi * p.phi) / n));

    // One-step transitions from a fixed state: KS against the Gaussian transition law.
    RngStream t_rng(8, 1);
    const SsmTheta stable = to_theta(p);
    std::vector<double> draws(100000);
    for (auto& d : draws) {
        d = sv_transition_sample(0.3, stable, t_rng);
    }
    const double mean = p.omega + p.phi * 0.3;
    const double ks = oracle::ks_statistic(draws, [&](double x) { return oracle::norm_cdf((x - mean) / sigma); });
    EXPECT_LT(ks, oracle::ks_critical_1pct(draws.size()));
}

TEST(StableSv, HeavyLeftTailOfIncrements) {
    const std::size_t n = 1000000;
    auto tail_fraction = [&](double alpha) {
        RngStream rng(12, 0);
        const StableSvParams p{0.0, 0.9, 0.1, alpha};
        const auto path = simulate_stable_sv(p, n, rng);
        std::size_t count = 0;
        for (std::size_t t = 1; t < n; ++t) {
            const double innovation = path.states[t] - p.phi * path.states[t - 1] - p.omega;
            count += innovation < -5.0 * p.sigma_h ? 1 : 0;
        }
        return static_cast<double>(count) / static_cast<double>(n - 1);
    };
    EXPECT_GT(tail_fraction(1.5), tail_fraction(2.0) + 1e-3);
}

// Last observation of independent short paths: an iid sample from the marginal.
// Indicators along one long path are serially dependent through h, so the iid
// KS critical value would not apply there.
std::vector<double> skew_marginal_sample(const SkewSvParams& p, std::uint64_t seed, std::size_t reps) {
    std::vector<double> out(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        RngStream rng(seed, r);
        out[r] = simulate_skew_sv(p, 2, rng, 5000).observations.back();
    }
    return out;
}

TEST(SkewSv, ZeroShapeGivesStandardNormalMarginal) {
    const auto y = skew_marginal_sample({0.9, -0.4581, 0.4173, 0.0}, 21, 20000);
    EXPECT_LT(oracle::ks_statistic(y, oracle::norm_cdf), oracle::ks_critical_1pct(y.size()));
}

TEST(SkewSv, MarginalIsTheSkewNormalForSeveralParameterSets) {
    const StandardizedSkewNormal target(-5.0);
    std::uint64_t seed = 30;
    for (const SkewSvParams p : {kPaperSkew, SkewSvParams{0.5, 0.0, 0.3, -5.0}, SkewSvParams{0.95, -1.0, 0.2, -5.0}}) {
        const auto y = skew_marginal_sample(p, seed++, 20000);
        const double ks = oracle::ks_statistic(y, [&](double x) { return target.cdf(x); });
        EXPECT_LT(ks, oracle::ks_critical_1pct(y.size())) << "a=" << p.a;
    }
}

TEST(SkewSv, NegativeSkewnessAndVolatilityClustering) {
    RngStream rng(22, 0);
    const auto path = simulate_skew_sv(kPaperSkew, 100000, rng, 100000);
    const auto& y = path.observations;
    const double m = oracle::mean(y);
    const double sd = std::sqrt(oracle::variance(y));
    std::vector<double> cubes;
    std::vector<double> squares;
    for (double v : y) {
        const double z = (v - m) / sd;
        cubes.push_back(z * z * z);
        squares.push_back(v * v);
    }
    const double skew = oracle::mean(cubes);
    const double expected = StandardizedSkewNormal(-5.0).skewness();
    EXPECT_LT(skew, 0.0);
    EXPECT_NEAR(skew, expected, 3.0 * batch_se(cubes));
    EXPECT_GT(lag1_autocorrelation(squares), 0.0);
}

TEST(Simulators, FiniteForPriorDraws) {
    RngStream rng(40, 0);
    for (int i = 0; i < 20; ++i) {
        const auto theta = sample_prior(correct_spec_prior(), rng);
        const auto path = simulate(theta, 20000, rng);
        for (double v : path.observations) {
            ASSERT_TRUE(std::isfinite(v));
        }
    }
    for (int i = 0; i < 20; ++i) {
        // Stable draws with alpha away from 1, where paths stay finite.
        auto theta = sample_prior(stable_sv_prior(), rng);
        theta.values[3] = 1.3 + 0.7 * rng.uniform();
        const auto path = simulate(theta, 20000, rng);
        for (double v : path.states) {
            ASSERT_TRUE(std::isfinite(v));
        }
    }
}

TEST(Measurement, LogDensityValues) {
    EXPECT_NEAR(sv_measurement_logpdf(0.0, 0.0, 0.0), -0.9189385332046727, 1e-12);
    EXPECT_NEAR(sv_measurement_logpdf(1.0, 0.0, 0.0), -1.4189385332046727, 1e-12);
    for (double h : {-3.0, 0.0, 2.5}) {
        EXPECT_NEAR(sv_measurement_logpdf(0.7, h, 0.7), -0.5 * std::log(2.0 * oracle::kPi) - 0.5 * h, 1e-12);
    }
}

TEST(Transition, NoiselessGaussianIsDeterministic) {
    RngStream rng(1, 1);
    const SsmTheta theta = to_theta(SvGaussianParams{0.8, 0.0, 0.0, -1.0});
    EXPECT_DOUBLE_EQ(sv_transition_sample(2.0, theta, rng), -1.0 + 0.8 * 3.0);
}

TEST(Transition, GaussianMoments) {
    RngStream rng(1, 2);
    const SsmTheta theta = to_theta(kPaperSv);
    std::vector<double> draws(1000000);
    for (auto& d : draws) {
        d = sv_transition_sample(0.5, theta, rng);
    }
    const double mean = kPaperSv.h_bar + kPaperSv.phi * (0.5 - kPaperSv.h_bar);
    EXPECT_NEAR(oracle::mean(draws), mean, 3.0 * oracle::mean_se(draws));
    const double v = kPaperSv.sigma_alpha * kPaperSv.sigma_alpha;
    EXPECT_NEAR(oracle::variance(draws), v, 3.0 * v * std::sqrt(2.0 / draws.size()));
}

TEST(Models, TagsAndNames) {
    EXPECT_EQ(parse_ssm_model("sv_gaussian"), SsmModel::sv_gaussian);
    EXPECT_EQ(parse_ssm_model("sv_stable"), SsmModel::sv_stable);
    EXPECT_THROW(parse_ssm_model("garch"), ConfigError);
    EXPECT_EQ(parameter_names(SsmModel::sv_stable)[3], "alpha");
    EXPECT_THROW(as_stable_sv(to_theta(kPaperSv)), ConfigError);
    EXPECT_DOUBLE_EQ(measurement_mean(to_theta(kPaperSv)), kPaperSv.mu);
    EXPECT_DOUBLE_EQ(measurement_mean(to_theta(StableSvParams{0.1, 0.5, 0.1, 1.5})), 0.0);
}

}  // namespace

#include "abf/abc.hpp"
#include "abf/auxiliary.hpp"
#include "abf/error.hpp"
#include "abf/models.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

namespace {

using namespace abf;

std::vector<double> sv_series(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    return simulate_sv_gaussian({0.95, 0.3, 0.0009, -1.3}, n, rng).observations;
}

TEST(Prior, UniformSupportAndNormalMean) {
    const PriorSpec spec{SsmModel::sv_gaussian,
                         {PriorMarginal::uniform("phi", 0.5, 0.99), PriorMarginal::uniform("sigma_alpha", 0.05, 1.0),
                          PriorMarginal::normal("mu", -1.0, 1.0), PriorMarginal::point("h_bar", 0.25)}};
    spec.validate();
    RngStream rng(1, 0);
    std::vector<double> mus;
    for (int i = 0; i < 100000; ++i) {
        const auto t = sample_prior(spec, rng);
        ASSERT_GE(t.values[0], 0.5);
        ASSERT_LE(t.values[0], 0.99);
        ASSERT_EQ(t.values[3], 0.25);
        mus.push_back(t.values[2]);
    }
    EXPECT_NEAR(oracle::mean(mus), -1.0, 3.0 * oracle::mean_se(mus));

    RngStream a(9, 9);
    RngStream b(9, 9);
    EXPECT_EQ(sample_prior(spec, a).values, sample_prior(spec, b).values);
}

TEST(Prior, ValidationErrors) {
    PriorSpec bad{SsmModel::sv_gaussian,
                  {PriorMarginal::uniform("phi", 0.9, 0.5), PriorMarginal::uniform("sigma_alpha", 0.05, 1.0),
                   PriorMarginal::normal("mu", 0.0, 1.0), PriorMarginal::normal("h_bar", 0.0, 1.0)}};
    EXPECT_THROW(bad.validate(), DomainError);
    bad.marginals[0] = PriorMarginal::uniform("phi", 0.5, 0.9);
    bad.marginals[2] = PriorMarginal::normal("mu", 0.0, 0.0);
    EXPECT_THROW(bad.validate(), DomainError);
    bad.marginals[2] = PriorMarginal::normal("nu", 0.0, 1.0);
    EXPECT_THROW(bad.validate(), ConfigError);
    correct_spec_prior().validate();
    misspec_prior().validate();
    stable_sv_prior().validate();
}

TEST(Summary, ZeroAtObservedDataAndDimension) {
    const auto y = sv_series(2000, 2);
    const auto arch = fit_auxiliary(ScoringRule::log_score(), AuxModel::arch, y);
    const auto garch = fit_auxiliary(ScoringRule::log_score(), AuxModel::garch, y);
    EXPECT_EQ(summary_statistic(y, arch).size(), 3u);
    const auto s = summary_statistic(y, garch);
    ASSERT_EQ(s.size(), 4u);
    double n = 0.0;
    for (double v : s) {
        n += v * v;
    }
    EXPECT_LT(std::sqrt(n), 1e-4);
    const auto g = criterion_gradient(garch.rule, garch.params, y);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(s[i], g[i] / 1999.0);
    }
}

TEST(Summary, DuplicatedSeriesAveragesOut) {
    // For ARCH(1) the predictive depends on one lag, so [y, y] contributes two
    // copies of each in-sample term plus one junction term (y_T -> y_1).
    const auto y = sv_series(300, 3);
    const auto fit = fit_auxiliary(ScoringRule::crps(), AuxModel::arch, y);
    std::vector<double> twice = y;
    twice.insert(twice.end(), y.begin(), y.end());
    const auto single = criterion_gradient(fit.rule, fit.params, y);
    const auto junction = criterion_gradient(fit.rule, fit.params, std::vector<double>{y.back(), y.front()});
    const auto s2 = summary_statistic(twice, fit);
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = (2.0 * single[i] + junction[i]) / 599.0;
        EXPECT_NEAR(s2[i], expected, 1e-6 * (1.0 + std::abs(expected)));
        EXPECT_NEAR(s2[i], single[i] / 299.0, 0.05 + std::abs(junction[i]) / 599.0);
    }
}

TEST(WeightMatrix, IdentityCovarianceGivesIdentity) {
    RngStream rng(4, 0);
    Eigen::MatrixXd x(500, 4);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            x(i, j) = rng.normal() + (j == 1 ? 0.5 * x(i, 0) : 0.0);
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(x.rows() - 1);
    const Eigen::MatrixXd l = cov.llt().matrixL();
    const Eigen::MatrixXd white = x * l.transpose().inverse();
    const Eigen::MatrixXd w = estimate_weight_matrix(white);
    EXPECT_LT((w - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);

    Eigen::MatrixXd scaled = white;
    scaled.col(2) *= 3.0;
    EXPECT_NEAR(estimate_weight_matrix(scaled)(2, 2), 1.0 / 9.0, 1e-8);
}

TEST(WeightMatrix, TwoByTwoHandInverse) {
    RngStream rng(5, 0);
    Eigen::MatrixXd x(200, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = 0.7 * x(i, 0) + 0.4 * rng.normal() + 2.0;
    }
    std::vector<double> a(200), b(200);
    for (int i = 0; i < 200; ++i) {
        a[i] = x(i, 0);
        b[i] = x(i, 1);
    }
    const double ma = oracle::mean(a);
    const double mb = oracle::mean(b);
    double sab = 0.0;
    for (int i = 0; i < 200; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
    }
    sab /= 199.0;
    const double saa = oracle::variance(a);
    const double sbb = oracle::variance(b);
    const double det = saa * sbb - sab * sab;
    const Eigen::MatrixXd w = estimate_weight_matrix(x);
    EXPECT_NEAR(w(0, 0), sbb / det, 1e-7 * std::abs(sbb / det));
    EXPECT_NEAR(w(1, 1), saa / det, 1e-7 * std::abs(saa / det));
    EXPECT_NEAR(w(0, 1), -sab / det, 1e-7 * std::abs(sab / det));
    EXPECT_EQ(w(0, 1), w(1, 0));
    EXPECT_THROW(estimate_weight_matrix(x.topRows(2)), DomainError);
}

TEST(WeightMatrix, IgnoresNonFiniteRows) {
    RngStream rng(6, 0);
    Eigen::MatrixXd x(100, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            x(i, j) = rng.normal();
        }
    }
    Eigen::MatrixXd with_nan(101, 3);
    with_nan << x, Eigen::RowVector3d::Constant(std::nan(""));
    EXPECT_EQ(estimate_weight_matrix(with_nan), estimate_weight_matrix(x));
}

TEST(Mahalanobis, Examples) {
    Eigen::Matrix2d w;
    w << 2.0, 0.0, 0.0, 3.0;
    EXPECT_DOUBLE_EQ(mahalanobis(std::vector<double>{1.0, 1.0}, w), std::sqrt(5.0));
    EXPECT_EQ(mahalanobis(std::vector<double>{0.0, 0.0}, w), 0.0);
    EXPECT_DOUBLE_EQ(mahalanobis(std::vector<double>{3.0, 4.0}, Eigen::Matrix2d::Identity()), 5.0);
    EXPECT_THROW(mahalanobis(std::vector<double>{1.0, 1.0, 1.0}, w), DomainError);
    EXPECT_TRUE(std::isinf(mahalanobis(std::vector<double>{std::nan(""), 1.0}, w)));
}

TEST(Selection, OrderStatisticsNestingAndPermutation) {
    RngStream rng(7, 0);
    std::vector<double> d(5000);
    for (auto& v : d) {
        v = std::abs(rng.normal());
    }
    d[10] = d[20] = d[30] = 0.5;  // ties broken by index
    d[40] = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
    for (std::size_t keep : {1u, 50u, 777u, 5000u}) {
        const auto idx = nearest_indices(d, keep);
        ASSERT_EQ(idx, std::vector<std::size_t>(order.begin(), order.begin() + keep));
    }
    const auto big = nearest_indices(d, 300);
    const auto small = nearest_indices(d, 100);
    EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));

    // Permute the draw order: the selected draws are the same set.
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::vector<double> permuted(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        permuted[i] = d[perm[i]];
    }
    std::set<std::size_t> original(small.begin(), small.end());
    std::set<std::size_t> mapped;
    for (std::size_t i : nearest_indices(permuted, 100)) {
        mapped.insert(perm[i]);
    }
    EXPECT_EQ(original, mapped);
}

TEST(KeepPolicy, Resolution) {
    AbcConfig cfg;
    cfg.n_draws = 200000;
    EXPECT_NEAR(default_keep_quantile(4000), 50.0 * std::pow(4000.0, -1.5), 1e-15);
    EXPECT_EQ(cfg.resolved_keep(4000), static_cast<std::size_t>(std::llround(200000 * 50.0 * std::pow(4000.0, -1.5))));
    cfg.quantile = 0.01;
    EXPECT_EQ(cfg.resolved_keep(4000), 2000u);
    cfg.keep = 0;
    EXPECT_THROW(cfg.resolved_keep(4000), ConfigError);
    cfg.keep = 200001;
    EXPECT_THROW(cfg.resolved_keep(4000), ConfigError);
}

class RunAbc : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        y_ = new std::vector<double>(sv_series(500, 8));
        fits_ = new std::vector<AuxFit>{fit_auxiliary(ScoringRule::log_score(), AuxModel::garch, *y_),
                                        fit_auxiliary(ScoringRule::crps(), AuxModel::garch, *y_)};
    }
    static void TearDownTestSuite() {
        delete y_;
        delete fits_;
    }
    static std::vector<double>* y_;
    static std::vector<AuxFit>* fits_;
};
std::vector<double>* RunAbc::y_ = nullptr;
std::vector<AuxFit>* RunAbc::fits_ = nullptr;

TEST_F(RunAbc, KeepAllReturnsPriorSample) {
    AbcConfig cfg;
    cfg.n_draws = 200;
    cfg.keep = 200;
    const RngStream rng(10, 0);
    const auto post = run_abc(correct_spec_prior(), {fits_->front()}, *y_, cfg, rng).front();
    ASSERT_EQ(post.kept_thetas.size(), 200u);
    std::set<std::size_t> idx(post.kept_indices.begin(), post.kept_indices.end());
    EXPECT_EQ(idx.size(), 200u);
    for (std::size_t k = 0; k < 200; ++k) {
        auto stream = abc_draw_stream(rng, post.kept_indices[k]);
        EXPECT_EQ(post.kept_thetas[k].values, sample_prior(correct_spec_prior(), stream).values);
    }
    EXPECT_TRUE(std::is_sorted(post.kept_distances.begin(), post.kept_distances.end()));
    EXPECT_EQ(post.summaries.rows(), 200);
    EXPECT_EQ(post.summaries.cols(), 4);
    const Eigen::MatrixXd w = post.weight_matrix;
    EXPECT_EQ(w, w.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
}

TEST_F(RunAbc, PointMassPrior) {
    const PriorSpec point{SsmModel::sv_gaussian,
                          {PriorMarginal::point("phi", 0.9), PriorMarginal::point("sigma_alpha", 0.2),
                           PriorMarginal::point("mu", 0.0), PriorMarginal::point("h_bar", -1.0)}};
    AbcConfig cfg;
    cfg.n_draws = 100;
    cfg.keep = 10;
    const auto post = run_abc(point, {fits_->front()}, *y_, cfg, RngStream(11, 0)).front();
    for (const auto& t : post.kept_thetas) {
        EXPECT_EQ(t.values, (std::array<double, 4>{0.9, 0.2, 0.0, -1.0}));
    }
}

TEST_F(RunAbc, KeptAreOrderStatisticsFromAllDraws) {
    AbcConfig cfg;
    cfg.n_draws = 400;
    cfg.keep = 25;
    const auto post = run_abc(correct_spec_prior(), {fits_->back()}, *y_, cfg, RngStream(12, 0)).front();
    // Weight matrix from all N summaries, distances recomputed from it.
    EXPECT_EQ(post.weight_matrix, estimate_weight_matrix(post.summaries));
    std::vector<double> recomputed(400);
    for (Eigen::Index i = 0; i < 400; ++i) {
        std::vector<double> s(post.summaries.cols());
        for (Eigen::Index j = 0; j < post.summaries.cols(); ++j) {
            s[j] = post.summaries(i, j);
        }
        recomputed[i] = mahalanobis(s, post.weight_matrix);
        EXPECT_EQ(recomputed[i], post.distances[i]);
    }
    std::vector<double> sorted = recomputed;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < 25; ++k) {
        EXPECT_EQ(post.kept_distances[k], sorted[k]);
        EXPECT_EQ(post.kept_distances[k], recomputed[post.kept_indices[k]]);
    }
    // Summary of draw i is the summary of its own simulated path.
    const std::size_t i = post.kept_indices[0];
    auto stream = abc_draw_stream(RngStream(12, 0), i);
    const auto theta = sample_prior(correct_spec_prior(), stream);
    const auto path = simulate(theta, y_->size(), stream).observations;
    const auto s = summary_statistic(path, fits_->back());
    for (std::size_t j = 0; j < s.size(); ++j) {
        EXPECT_EQ(s[j], post.summaries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
}

TEST_F(RunAbc, MultiRuleEqualsSingleRuleAndWorkerInvariant) {
    AbcConfig cfg;
    cfg.n_draws = 300;
    cfg.keep = 20;
    const RngStream rng(13, 0);
    const auto multi = run_abc(correct_spec_prior(), *fits_, *y_, cfg, rng);
    cfg.workers = 3;
    const auto threaded = run_abc(correct_spec_prior(), *fits_, *y_, cfg, rng);
    ASSERT_EQ(multi.size(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
        cfg.workers = 1;
        const auto single = run_abc(correct_spec_prior(), {(*fits_)[r]}, *y_, cfg, rng).front();
        EXPECT_EQ(multi[r].kept_indices, single.kept_indices);
        EXPECT_EQ(multi[r].kept_distances, single.kept_distances);
        EXPECT_EQ(multi[r].distances, threaded[r].distances);
        EXPECT_EQ(multi[r].kept_indices, threaded[r].kept_indices);
        EXPECT_EQ(multi[r].rule_label, (*fits_)[r].rule.label());
    }
    // Nested subsets when shrinking keep.
    cfg.keep = 5;
    const auto smaller = run_abc(correct_spec_prior(), *fits_, *y_, cfg, rng);
    EXPECT_TRUE(std::equal(smaller[0].kept_indices.begin(), smaller[0].kept_indices.end(),
                           multi[0].kept_indices.begin()));
}

TEST_F(RunAbc, ShortSeriesRejected) {
    AbcConfig cfg;
    cfg.n_draws = 10;
    cfg.keep = 1;
    const std::vector<double> short_y(y_->begin(), y_->begin() + 99);
    EXPECT_THROW(run_abc(correct_spec_prior(), *fits_, short_y, cfg, RngStream(1, 0)), DomainError);
}

TEST(RunAbcRecovery, PersistencePulledTowardsTruth) {
    // Conditional recovery: the other coordinates sit at their true values, so
    // 4000 draws suffice. With all four free, a 1% keep rate at this N is not
    // yet below the distance noise at the truth.
    const auto y = sv_series(1000, 20);
    const PriorSpec prior{SsmModel::sv_gaussian,
                          {PriorMarginal::uniform("phi", 0.5, 0.99), PriorMarginal::point("sigma_alpha", 0.3),
                           PriorMarginal::point("mu", 0.0009), PriorMarginal::point("h_bar", -1.3)}};
    AbcConfig cfg;
    cfg.n_draws = 4000;
    cfg.keep = 40;
    const auto post = run_abc(prior, AuxModel::garch, ScoringRule::log_score(), y, cfg, RngStream(21, 0));
    std::vector<double> phi;
    for (const auto& t : post.kept_thetas) {
        phi.push_back(t.values[0]);
    }
    const double prior_mean = 0.5 * (0.5 + 0.99);
    EXPECT_GT(oracle::mean(phi), prior_mean + 0.1);
    EXPECT_NEAR(oracle::mean(phi), 0.95, 0.08);
}

}  // namespace

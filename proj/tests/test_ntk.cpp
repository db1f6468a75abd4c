#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ntklab/ntk_analysis.hpp"

using namespace ntklab;
using network::ShallowNet;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST(EmpiricalNtk, SingleUnitExamples) {
    const auto m = ntk::empirical_ntk(ShallowNet({1.0}, {-1.0}), 4);
    EXPECT_NEAR(m(0, 0), 16.0 / (pi * pi), 1e-12);
    EXPECT_NEAR(m(0, 0), 1.6211389, 1e-7);
    const auto zero = ntk::empirical_ntk(ShallowNet({1.0}, {1.0}), 8);
    for (double v : zero.entries()) EXPECT_NEAR(v, 0.0, 1e-14);
    EXPECT_THROW(ntk::empirical_ntk(ShallowNet({1.0}, {0.0}), 0), std::invalid_argument);
}

TEST(EmpiricalNtk, SymmetricPositiveSemidefinite) {
    const auto net = network::init(3, 8).net;
    const auto m = ntk::empirical_ntk(net, 10);
    EXPECT_EQ(m.max_asymmetry(), 0.0);
    CounterRng rng(1, 0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(10);
        for (auto& x : v) x = rng.normal();
        double q = 0.0;
        for (std::size_t k = 0; k < 10; ++k)
            for (std::size_t l = 0; l < 10; ++l) q += v[k] * m(k, l) * v[l];
        EXPECT_GE(q, -1e-12);
    }
    // Trace equals the sum of squared coefficients.
    const auto c = ntk::coefficient_table(net, 10);
    double sq = 0.0;
    for (double x : c) sq += x * x;
    EXPECT_NEAR(m.trace(), sq, 1e-12);
}

TEST(EmpiricalNtk, MonteCarloMeanMatchesEigenvalue) {
    const int n = 10000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto v = ntk::empirical_ntk(network::init(1, static_cast<std::uint64_t>(i)).net, 1)(0, 0);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
    EXPECT_NEAR(mean, 0.81057, 3 * sd / 100);
}

TEST(AnalyticNtk, Diagonal) {
    const auto one = ntk::analytic_ntk(1);
    EXPECT_NEAR(one(0, 0), 0.8105695, 1e-7);
    const auto m = ntk::analytic_ntk(16);
    for (std::size_t k = 0; k < 16; ++k)
        for (std::size_t l = 0; l < 16; ++l)
            if (k != l) {
                EXPECT_EQ(m(k, l), 0.0);
            }
}

TEST(Constants, MuAgainstPartialSum) {
    const std::size_t K = 100000;
    for (double s : {0.0, 0.1, 0.25}) {
        double partial = 0.0;
        for (std::size_t k = 0; k < K; ++k) partial += 4.0 * std::pow(spectral::eigen_frequency(k), 2 * s - 2);
        // Midpoint-rule tail: sum_{k >= K} 4 w_k^{p} ~ (8/pi) w_{K-1/2}^{p+1} / -(p+1), p = 2s - 2.
        const double p = 2 * s - 2;
        const double w = std::numbers::pi / 4 + std::numbers::pi / 2 * (K - 0.5);
        const double tail = 8.0 / std::numbers::pi * std::pow(w, p + 1) / -(p + 1);
        const double mu2 = ntk::mu_constant(s) * ntk::mu_constant(s);
        EXPECT_NEAR(mu2 - partial, tail, 1e-4 * tail) << s;
    }
    // sum 4/omega_k^2 = 8 sum lambda_k = 8.
    EXPECT_NEAR(ntk::mu_constant(0.0), std::sqrt(8.0), 1e-10);
    EXPECT_THROW(ntk::mu_constant(0.5), std::domain_error);
}

TEST(Constants, BernsteinTailExamples) {
    EXPECT_DOUBLE_EQ(ntk::bernstein_tail(1.0), 1.0);
    EXPECT_NEAR(ntk::bernstein_tail(8.0), 16.0 / (std::exp(8.0) - 9.0), 1e-15);
    EXPECT_NEAR(ntk::bernstein_tail(8.0), 0.005384, 1e-6);
    EXPECT_NEAR(ntk::bernstein_tail(6.0), 0.0302703, 1e-6);
    EXPECT_THROW(ntk::bernstein_tail(0.0), std::domain_error);
    EXPECT_THROW(ntk::bernstein_tail(1.0, 0.5), std::domain_error);
}

TEST(Constants, RankOneThresholdArithmetic) {
    const double t = ntk::rank_one_threshold(1, 1, 6, 1e4);
    EXPECT_NEAR(t, std::sqrt(48.0 / 1e4) + 12.0 / 3e4, 1e-15);
    EXPECT_NEAR(t, 0.069682, 1e-6);
    EXPECT_NEAR(ntk::bernstein_threshold(1.0, 6.0, 1e4), t, 1e-15);
}

TEST(Concentration, TrialsReproducibleAndShrinking) {
    const std::vector<double> taus{8.0};
    const auto a = ntk::concentration_trials(100, 8, 32, 0.25, taus, 3);
    const auto b = ntk::concentration_trials(100, 8, 32, 0.25, taus, 3);
    EXPECT_EQ(a.norms, b.norms);
    const auto big = ntk::concentration_trials(6400, 8, 32, 0.25, taus, 3);
    EXPECT_LT(big.median, a.median);
    EXPECT_EQ(a.taus.size(), 1u);
    EXPECT_NEAR(a.taus[0].bound, ntk::bernstein_tail(8.0), 1e-15);
    EXPECT_THROW(ntk::concentration_trials(100, 8, 32, 0.5, taus, 3), std::domain_error);
}

TEST(Concentration, NormMatchesDirectSpectralNorm) {
    // s = 0 reduces to the largest |eigenvalue| of H_theta - H; compare with
    // power iteration on the square of the difference, written out here.
    const auto rep = ntk::concentration_trials(50, 1, 6, 0.0, std::vector<double>{8.0}, 7);
    const auto net = network::init(50, ntk::trial_seed(7, 50, 0)).net;
    auto d = ntk::empirical_ntk(net, 6);
    d -= ntk::analytic_ntk(6);
    std::vector<double> v(6, 1.0), w(6);
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        for (std::size_t i = 0; i < 6; ++i) {
            w[i] = 0.0;
            for (std::size_t j = 0; j < 6; ++j) w[i] += d(i, j) * v[j];
        }
        std::vector<double> u(6, 0.0);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) u[i] += d(i, j) * w[j];
        double n = 0.0;
        for (double x : u) n += x * x;
        n = std::sqrt(n);
        lambda = std::sqrt(n);
        for (std::size_t i = 0; i < 6; ++i) v[i] = u[i] / n;
    }
    EXPECT_NEAR(rep.norms[0], lambda, 1e-8 * lambda);
}

TEST(Perturbation, ZeroRadiusAndCap) {
    const auto net = network::init(50, 2).net;
    const auto zero = ntk::perturbation_sup_estimate(net, 0.0, 0.25, 3, 1, 256);
    EXPECT_EQ(zero.estimate, 0.0);
    const auto rep = ntk::perturbation_sup_estimate(net, 0.05, 0.25, 3, 1, 256);
    EXPECT_GT(rep.estimate, 0.0);
    EXPECT_LE(rep.estimate, rep.triangle_cap * (1 + 1e-12));
    EXPECT_THROW(ntk::perturbation_sup_estimate(net, 0.1, 0.6, 3, 1, 256), std::domain_error);
    EXPECT_THROW(ntk::perturbation_sup_estimate(net, 0.1, 0.25, 0, 1, 256), std::invalid_argument);
}

TEST(Perturbation, EstimateGrowsWithRadius) {
    const auto net = network::init(200, 4).net;
    double prev = 0.0;
    for (double h : {0.005, 0.02, 0.08}) {
        const auto rep = ntk::perturbation_sup_estimate(net, h, 0.25, 4, 1, 1024);
        EXPECT_GT(rep.estimate, prev);
        prev = rep.estimate;
    }
}

TEST(Partition, CountingOracles) {
    EXPECT_DOUBLE_EQ(ntk::partition_overlap_max(std::vector<double>{0.3}, 0.25), 1.0);
    const std::size_t m = 200;
    std::vector<double> eq(m);
    for (std::size_t i = 0; i < m; ++i) eq[i] = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / m;
    EXPECT_LE(ntk::partition_overlap_max(eq, 2.0 / m), 5.0 / m + 1e-15);
    EXPECT_EQ(ntk::partition_cell_count(0.01), 100u);
    EXPECT_THROW(ntk::partition_overlap_max(eq, 0.0), std::domain_error);
    EXPECT_THROW(ntk::partition_overlap_max(std::vector<double>{}, 0.1), std::invalid_argument);
}

TEST(Partition, HoeffdingBoundIsValid) {
    // m = 2000, h = 0.05, tau = 0.05: bound 1 - 10 e^{-10} is near one.
    const double bound = ntk::hoeffding_overlap_frequency(2000, 0.05, 0.05);
    std::size_t within = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        if (ntk::partition_overlap_max(network::init(2000, seed).net.biases, 0.05) <= 0.15) ++within;
    EXPECT_GE(static_cast<double>(within) / 50.0, bound - 3 * ntk::binomial_standard_error(bound, 50));
}

TEST(RankOneBench, CenteredAndWithinBound) {
    const auto b = ntk::rank_one_bernstein_bench(2000, 1.0, 1.0, 8, 100, 6.0, 3);
    EXPECT_EQ(b.deviations.size(), 100u);
    EXPECT_NEAR(b.threshold, ntk::rank_one_threshold(1, 1, 6, 2000), 1e-15);
    EXPECT_LE(b.frequency, b.bound + 3 * b.standard_error);
    // Deviation of an average of n centered terms scales like n^{-1/2}.
    const auto big = ntk::rank_one_bernstein_bench(32000, 1.0, 1.0, 8, 100, 6.0, 3);
    EXPECT_NEAR(median(big.deviations) / median(b.deviations), 0.25, 0.08);
}

#pragma once

// Empirical and analytic NTK matrices in the eigenbasis, concentration and
// perturbation experiments, partition overlap counts and Bernstein tails.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "ntklab/math.hpp"
#include "ntklab/network.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/spectral.hpp"

namespace ntklab::ntk {

using network::ShallowNet;
using spectral::KernelMatrix;

// Coefficient table c_{rk}, row-major m x K.
inline std::vector<double> coefficient_table(const ShallowNet& net, std::size_t truncation) {
    const std::size_t m = net.width();
    std::vector<double> c(m * truncation);
    for (std::size_t r = 0; r < m; ++r) {
        const auto row = network::partial_derivative_coeffs(net, r, truncation);
        std::copy(row.coeffs().begin(), row.coeffs().end(), c.begin() + static_cast<std::ptrdiff_t>(r * truncation));
    }
    return c;
}

// M_{kl} = sum_r c_{rk} c_{rl}.
inline KernelMatrix empirical_ntk(const ShallowNet& net, std::size_t truncation) {
    if (truncation == 0) throw std::invalid_argument("empirical_ntk: truncation must be >= 1");
    const auto c = coefficient_table(net, truncation);
    KernelMatrix out(truncation);
    for (std::size_t r = 0; r < net.width(); ++r) {
        const double* row = c.data() + r * truncation;
        for (std::size_t k = 0; k < truncation; ++k) {
            const double ck = row[k];
            for (std::size_t l = k; l < truncation; ++l) out(k, l) += ck * row[l];
        }
    }
    for (std::size_t k = 0; k < truncation; ++k)
        for (std::size_t l = 0; l < k; ++l) out(k, l) = out(l, k);
    return out;
}

inline KernelMatrix analytic_ntk(std::size_t truncation) {
    if (truncation == 0) throw std::invalid_argument("analytic_ntk: truncation must be >= 1");
    std::vector<double> diag(truncation);
    for (std::size_t k = 0; k < truncation; ++k) diag[k] = spectral::ntk_eigenvalue(k);
    return KernelMatrix::diagonal(diag);
}

// mu(s) = (sum_k 4 omega_k^{2s-2})^{1/2}, the bound on sqrt(m) ||d_r f||_s.
inline double mu_constant(double s) {
    if (!(s < 0.5)) throw std::domain_error("mu_constant: requires s < 1/2");
    return std::sqrt(4.0 * spectral::frequency_power_tail(2.0 * s - 2.0));
}

inline double bernstein_threshold(double mu, double tau, double m) {
    return std::sqrt(8.0 * std::pow(mu, 4) * tau / m) + 2.0 * mu * mu * tau / (3.0 * m);
}

// Threshold for averages of n rank-one terms v u^T with |u| <= mu, |v| <= nu.
inline double rank_one_threshold(double mu, double nu, double tau, double n) {
    return std::sqrt(8.0 * mu * mu * nu * nu * tau / n) + 2.0 * mu * nu * tau / (3.0 * n);
}

inline double bernstein_tail(double tau, double k = 1.0) {
    if (!(tau > 0.0)) throw std::domain_error("bernstein_tail: requires tau > 0");
    if (!(k >= 1.0)) throw std::domain_error("bernstein_tail: requires k >= 1");
    const double denom = std::expm1(tau) - tau;
    return std::min(1.0, 2.0 * k * tau / denom);
}

inline double binomial_standard_error(double p, std::size_t trials) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

struct TauSummary {
    double tau = 0.0;
    double threshold = 0.0;
    double bound = 0.0;
    std::size_t exceedances = 0;
    double frequency = 0.0;
};

struct ConcentrationReport {
    std::size_t width = 0;
    std::size_t trials = 0;
    std::size_t truncation = 0;
    double s = 0.0;
    double mu = 0.0;
    std::vector<double> norms;
    double median = 0.0;
    double lower_quartile = 0.0;
    double upper_quartile = 0.0;
    std::vector<TauSummary> taus;
};

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t width, std::size_t trial) {
    return derive_seed(derive_seed(seed, width), trial);
}

inline ConcentrationReport concentration_trials(std::size_t m, std::size_t trials, std::size_t truncation, double s,
                                                std::span<const double> taus, std::uint64_t seed) {
    if (!(s < 0.5)) throw std::domain_error("concentration_experiment: requires s < 1/2");
    if (trials == 0) throw std::invalid_argument("concentration_experiment: trials must be >= 1");
    ConcentrationReport rep;
    rep.width = m;
    rep.trials = trials;
    rep.truncation = truncation;
    rep.s = s;
    rep.mu = std::max(mu_constant(0.0), mu_constant(s));
    const KernelMatrix h = analytic_ntk(truncation);
    for (std::size_t i = 0; i < trials; ++i) {
        const auto net = network::init(m, trial_seed(seed, m, i)).net;
        const KernelMatrix diff = empirical_ntk(net, truncation) - h;
        rep.norms.push_back(spectral::weighted_operator_norm(diff, 0.0, s));
    }
    rep.median = median(rep.norms);
    rep.lower_quartile = quantile(rep.norms, 0.25);
    rep.upper_quartile = quantile(rep.norms, 0.75);
    for (double tau : taus) {
        TauSummary t;
        t.tau = tau;
        t.threshold = bernstein_threshold(rep.mu, tau, static_cast<double>(m));
        t.bound = bernstein_tail(tau);
        t.exceedances = static_cast<std::size_t>(
            std::count_if(rep.norms.begin(), rep.norms.end(), [&](double v) { return v >= t.threshold; }));
        t.frequency = static_cast<double>(t.exceedances) / static_cast<double>(trials);
        rep.taus.push_back(t);
    }
    return rep;
}

inline std::vector<ConcentrationReport> concentration_experiment(std::span<const std::size_t> widths,
                                                                 std::size_t trials, std::size_t truncation,
                                                                 double s, std::span<const double> taus,
                                                                 std::uint64_t seed) {
    std::vector<ConcentrationReport> out;
    for (std::size_t m : widths) out.push_back(concentration_trials(m, trials, truncation, s, taus, seed));
    return out;
}

// Slope of log median norm against log m.
inline double concentration_slope(std::span<const ConcentrationReport> reports) {
    std::vector<double> x, y;
    for (const auto& r : reports) {
        x.push_back(static_cast<double>(r.width));
        y.push_back(r.median);
    }
    return log_log_fit(x, y).slope;
}

struct PerturbationReport {
    std::size_t width = 0;
    double h = 0.0;
    double s = 0.0;
    std::size_t truncation = 0;
    std::size_t restarts = 0;
    double estimate = 0.0;
    double triangle_cap = 0.0;  // sum_r ||Delta_r||_s
    double constant = 1.0;
    double envelope = 0.0;  // constant * sqrt(m) * h^{1-s}
};

// Greedy lower bound on sup_{|nu|_inf <= 1} ||Delta^T nu||_s where the rows of
// Delta are d_r f_theta - d_r f_thetabar, thetabar_r = theta_r +- h.
// The objective nu^T G nu with G = Delta W Delta^T is convex, so the maximum
// over the cube sits at a vertex; single-sign flips are taken greedily from
// `restarts` random vertices.
inline PerturbationReport perturbation_sup_estimate(const ShallowNet& net, double h, double s,
                                                    std::size_t restarts, std::uint64_t seed,
                                                    std::size_t truncation = 4096) {
    if (!(h >= 0.0 && h <= 1.0)) throw std::domain_error("perturbation_sup_estimate: requires 0 <= h <= 1");
    if (!(s >= 0.0 && s < 0.5)) throw std::domain_error("perturbation_sup_estimate: requires 0 <= s < 1/2");
    if (restarts == 0) throw std::invalid_argument("perturbation_sup_estimate: restarts must be >= 1");
    const std::size_t m = net.width();
    const std::size_t k = truncation;
    PerturbationReport rep;
    rep.width = m;
    rep.h = h;
    rep.s = s;
    rep.truncation = k;
    rep.restarts = restarts;
    rep.envelope = std::sqrt(static_cast<double>(m)) * std::pow(h, 1.0 - s);

    CounterRng rng(seed, streams::perturbation);
    ShallowNet moved = net;
    for (std::size_t r = 0; r < m; ++r) moved.biases[r] += h * rng.sign();

    std::vector<double> weight(k);
    for (std::size_t j = 0; j < k; ++j) weight[j] = std::pow(spectral::eigen_frequency(j), s);
    std::vector<double> delta(m * k);
    for (std::size_t r = 0; r < m; ++r) {
        const auto a = network::partial_derivative_coeffs(net, r, k);
        const auto b = network::partial_derivative_coeffs(moved, r, k);
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double d = (a[j] - b[j]) * weight[j];
            delta[r * k + j] = d;
            norm_sq += d * d;
        }
        rep.triangle_cap += std::sqrt(norm_sq);
    }
    if (h == 0.0) return rep;

    std::vector<double> gram(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* di = delta.data() + i * k;
        for (std::size_t j = i; j < m; ++j) {
            const double* dj = delta.data() + j * k;
            double sum = 0.0;
            for (std::size_t q = 0; q < k; ++q) sum += di[q] * dj[q];
            gram[i * m + j] = sum;
            gram[j * m + i] = sum;
        }
    }

    double best = 0.0;
    std::vector<double> nu(m), g_nu(m);
    for (std::size_t rs = 0; rs < restarts; ++rs) {
        for (double& v : nu) v = rng.sign();
        double value = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) sum += gram[i * m + j] * nu[j];
            g_nu[i] = sum;
            value += nu[i] * sum;
        }
        for (std::size_t iter = 0; iter < 100 * m + 100; ++iter) {
            std::size_t pick = m;
            double gain_best = 1e-14 * std::max(value, 1e-300);
            for (std::size_t i = 0; i < m; ++i) {
                const double gain = -4.0 * nu[i] * g_nu[i] + 4.0 * gram[i * m + i];
                if (gain > gain_best) {
                    gain_best = gain;
                    pick = i;
                }
            }
            if (pick == m) break;
            const double old = nu[pick];
            nu[pick] = -old;
            for (std::size_t i = 0; i < m; ++i) g_nu[i] -= 2.0 * old * gram[i * m + pick];
            value += gain_best;
        }
        best = std::max(best, value);
    }
    rep.estimate = std::sqrt(std::max(best, 0.0));
    return rep;
}

struct PerturbationScaling {
    std::vector<PerturbationReport> reports;
    double exponent = 0.0;
    double constant = 0.0;  // geometric mean of estimate / (sqrt(m) h^{1-s})
    double min_ratio = 0.0;  // extremes of the per-h constant relative to the fit
    double max_ratio = 0.0;
};

// One network and one set of shift directions across all radii.
inline PerturbationScaling perturbation_scaling(std::size_t m, std::span<const double> radii, double s,
                                                std::size_t restarts, std::uint64_t seed,
                                                std::size_t truncation = 4096) {
    PerturbationScaling out;
    const auto net = network::init(m, seed).net;
    std::vector<double> hs, est;
    double log_c = 0.0;
    for (double h : radii) {
        auto rep = perturbation_sup_estimate(net, h, s, restarts, seed, truncation);
        hs.push_back(h);
        est.push_back(rep.estimate);
        log_c += std::log(rep.estimate / rep.envelope);
        out.reports.push_back(rep);
    }
    out.exponent = log_log_fit(hs, est).slope;
    out.constant = std::exp(log_c / static_cast<double>(radii.size()));
    out.min_ratio = std::numeric_limits<double>::infinity();
    out.max_ratio = 0.0;
    for (auto& rep : out.reports) {
        const double ratio = rep.estimate / (out.constant * rep.envelope);
        out.min_ratio = std::min(out.min_ratio, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
        rep.constant = out.constant;
        rep.envelope *= out.constant;
    }
    return out;
}

// Cells [-1 + 2hi, -1 + 2h(i+1)] extended by h on each side; returns the
// largest fraction of biases in one extended cell.
inline double partition_overlap_max(std::span<const double> theta, double h) {
    if (!(h > 0.0 && h <= 1.0)) throw std::domain_error("partition_overlap_max: requires 0 < h <= 1");
    if (theta.empty()) throw std::invalid_argument("partition_overlap_max: empty bias sequence");
    std::vector<double> sorted(theta.begin(), theta.end());
    std::sort(sorted.begin(), sorted.end());
    const auto cells = static_cast<std::size_t>(std::ceil(1.0 / h - 1e-12));
    std::size_t best = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double lo = -1.0 + 2.0 * h * static_cast<double>(i) - h;
        const double hi = -1.0 + 2.0 * h * static_cast<double>(i + 1) + h;
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
        const auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
        best = std::max(best, static_cast<std::size_t>(last - first));
    }
    return static_cast<double>(best) / static_cast<double>(theta.size());
}

inline std::size_t partition_cell_count(double h) {
    return static_cast<std::size_t>(std::ceil(1.0 / h - 1e-12));
}

// Union-bound probability that every extended cell holds at most a fraction
// 2h + tau of the m uniform biases (Hoeffding per cell).
inline double hoeffding_overlap_frequency(std::size_t m, double h, double tau) {
    const double cells = static_cast<double>(partition_cell_count(h));
    return std::max(0.0, 1.0 - cells * std::exp(-2.0 * static_cast<double>(m) * tau * tau));
}

struct RankOneBench {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::size_t trials = 0;
    double tau = 0.0;
    double threshold = 0.0;
    double bound = 0.0;
    std::size_t exceedances = 0;
    double frequency = 0.0;
    double standard_error = 0.0;
    std::vector<double> deviations;
};

namespace detail {

inline void random_ball_vector(CounterRng& rng, double radius, std::span<double> out) {
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : out) {
            v = rng.normal();
            norm += v * v;
        }
    } while (norm == 0.0);
    const double scale = radius * rng.uniform() / std::sqrt(norm);
    for (double& v : out) v *= scale;
}

}  // namespace detail

// Averages n centered rank-one matrices v u^T, |u| = mu U, |v| = nu U' with
// uniform directions; E[v u^T] = 0, so the deviation is ||(1/n) sum v u^T||_2.
inline RankOneBench rank_one_bernstein_bench(std::size_t n, double mu, double nu, std::size_t dim,
                                             std::size_t trials, double tau, std::uint64_t seed) {
    if (n == 0 || dim == 0 || trials == 0 || !(mu > 0.0) || !(nu > 0.0) || !(tau > 0.0))
        throw std::domain_error("rank_one_bernstein_bench: all parameters must be positive");
    RankOneBench out;
    out.n = n;
    out.dim = dim;
    out.trials = trials;
    out.tau = tau;
    out.threshold = rank_one_threshold(mu, nu, tau, static_cast<double>(n));
    out.bound = bernstein_tail(tau);
    std::vector<double> u(dim), v(dim);
    for (std::size_t t = 0; t < trials; ++t) {
        CounterRng rng(derive_seed(seed, t), streams::bernstein);
        KernelMatrix sum(dim);
        for (std::size_t i = 0; i < n; ++i) {
            detail::random_ball_vector(rng, mu, u);
            detail::random_ball_vector(rng, nu, v);
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t b = 0; b < dim; ++b) sum(a, b) += v[a] * u[b];
        }
        KernelMatrix avg(dim);
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = 0; b < dim; ++b) avg(a, b) = sum(a, b) / static_cast<double>(n);
        const double dev = spectral::weighted_operator_norm(avg, 0.0, 0.0);
        out.deviations.push_back(dev);
        if (dev > out.threshold) ++out.exceedances;
    }
    out.frequency = static_cast<double>(out.exceedances) / static_cast<double>(trials);
    out.standard_error = binomial_standard_error(out.bound, trials);
    return out;
}

}  // namespace ntklab::ntk

#pragma once

// Gradient-flow integration of the infinite-sample loss and Adam training
// on sampled losses, with trajectory recording.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/math.hpp"
#include "ntklab/network.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/spectral.hpp"

namespace ntklab::training {

using network::ShallowNet;
using spectral::GridFunction;

enum class Integrator { euler, rk4 };

inline std::string to_string(Integrator i) { return i == Integrator::euler ? "euler" : "rk4"; }

inline Integrator integrator_from_string(const std::string& s) {
    if (s == "euler") return Integrator::euler;
    if (s == "rk4") return Integrator::rk4;
    throw std::invalid_argument("unknown integrator '" + s + "' (expected euler or rk4)");
}

struct FlowConfig {
    double dt = 0.0;        // 0 selects 0.01 / sqrt(m)
    double horizon = 1.0;
    Integrator integrator = Integrator::rk4;
    std::size_t record_every = 10;
    double s = 0.25;
    std::size_t truncation = 256;
    double descent_tolerance = 1e-8;
    int max_halvings = 20;

    double step_for(std::size_t m) const {
        return dt > 0.0 ? dt : 0.01 / std::sqrt(static_cast<double>(m));
    }
    void validate() const {
        if (!(dt >= 0.0)) throw std::invalid_argument("FlowConfig: dt must be positive");
        if (!(horizon > 0.0)) throw std::invalid_argument("FlowConfig: horizon must be positive");
        if (record_every == 0) throw std::invalid_argument("FlowConfig: record_every must be >= 1");
    }
};

struct AdamConfig {
    double rate = 0.01;
    double decay = 0.5;
    std::size_t decay_period = 10000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t iterations = 50000;
    std::size_t sample_count = 0;  // 0 selects 2m
    bool resample = false;
    std::size_t record_every = 1000;
    std::size_t grid_nodes = 0;  // 0 selects 100m + 1
    double s = 0.25;
    std::size_t truncation = 256;
    // Stop when the best sample loss improves by less than
    // convergence_tolerance (relative) over a window; 0 disables.
    std::size_t convergence_window = 0;
    double convergence_tolerance = 1e-6;

    void validate() const {
        if (!(rate > 0.0)) throw std::invalid_argument("AdamConfig: rate must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
            throw std::invalid_argument("AdamConfig: moment rates must lie in (0, 1)");
        if (!(decay > 0.0)) throw std::invalid_argument("AdamConfig: decay must be positive");
        if (decay_period == 0) throw std::invalid_argument("AdamConfig: decay_period must be >= 1");
        if (record_every == 0) throw std::invalid_argument("AdamConfig: record_every must be >= 1");
        if (grid_nodes != 0 && !GridFunction::valid_node_count(grid_nodes))
            throw std::invalid_argument("AdamConfig: grid_nodes must be odd and >= 3");
    }
};

struct TrajectoryRecord {
    double t = 0.0;  // flow time, or iteration index for Adam
    double loss = 0.0;
    double l2_err = 0.0;  // ||kappa||_0 on the quadrature grid
    double s_norm = 0.0;  // ||kappa||_s at the configured truncation
    double wdist_inf = 0.0;
    double kappa_time_integral = 0.0;
    double grad_inf = 0.0;
    std::uint64_t bias_hash = 0;
};

struct Trajectory {
    std::string run_id;
    std::size_t width = 0;
    double smoothness = 0.0;
    double integrator_slack = 0.0;
    std::vector<TrajectoryRecord> records;
    ShallowNet final_net;
    std::vector<double> initial_biases;
    std::size_t steps = 0;
    bool aborted = false;
    bool converged = false;
    std::string diagnostic;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// ||kappa||_s from exact network coefficients minus projected target.
class ResidualNorm {
public:
    ResidualNorm(const GridFunction& g, std::size_t truncation, double s)
        : target_(spectral::Projector(g.nodes(), truncation).project(g)), s_(s) {}

    double operator()(const ShallowNet& net) const {
        auto c = network::output_coeffs(net, target_.truncation());
        c -= target_;
        return spectral::smoothness_norm(c, s_);
    }

private:
    spectral::SpectralFunction target_;
    double s_;
};

namespace detail {

struct Params {
    std::vector<double> biases;
    std::vector<double> signs;
};

inline void axpy(ShallowNet& net, const ShallowNet& base, double step, const network::LossGradient& d) {
    for (std::size_t r = 0; r < base.width(); ++r) net.biases[r] = base.biases[r] - step * d.biases[r];
    if (base.train_signs)
        for (std::size_t r = 0; r < base.width(); ++r) net.signs[r] = base.signs[r] - step * d.signs[r];
}

}  // namespace detail

// Integrates d theta / dt = -grad L. A step that raises the loss by more than
// descent_tolerance is retried with half the step, at most max_halvings times.
inline Trajectory gradient_flow(const ShallowNet& start, const GridFunction& g, const FlowConfig& cfg) {
    cfg.validate();
    start.validate();
    const std::size_t m = start.width();
    const double dt = cfg.step_for(m);
    const ResidualNorm s_norm(g, cfg.truncation, cfg.s);

    Trajectory traj;
    traj.width = m;
    traj.smoothness = cfg.s;
    traj.initial_biases = start.biases;

    ShallowNet net = start;
    double loss = network::l2_loss(net, g);
    network::LossGradient grad = network::loss_gradient(net, g);
    double max_grad = grad.max_abs();
    double t = 0.0;
    double kappa_integral = 0.0;

    auto record = [&]() {
        TrajectoryRecord rec;
        rec.t = t;
        rec.loss = loss;
        rec.l2_err = std::sqrt(2.0 * loss);
        rec.s_norm = s_norm(net);
        rec.wdist_inf = max_abs_diff(net.biases, traj.initial_biases);
        rec.kappa_time_integral = kappa_integral;
        rec.grad_inf = grad.max_abs();
        rec.bias_hash = hash_doubles(net.biases);
        traj.records.push_back(rec);
    };
    record();

    ShallowNet trial = net, stage = net;
    const double end_tol = 1e-12 * cfg.horizon;
    while (t < cfg.horizon - end_tol) {
        double step = std::min(dt, cfg.horizon - t);
        bool accepted = false;
        double new_loss = loss;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
            if (cfg.integrator == Integrator::euler) {
                detail::axpy(trial, net, step, grad);
            } else {
                detail::axpy(stage, net, 0.5 * step, grad);
                const auto k2 = network::loss_gradient(stage, g);
                detail::axpy(stage, net, 0.5 * step, k2);
                const auto k3 = network::loss_gradient(stage, g);
                detail::axpy(stage, net, step, k3);
                const auto k4 = network::loss_gradient(stage, g);
                max_grad = std::max({max_grad, k2.max_abs(), k3.max_abs(), k4.max_abs()});
                network::LossGradient avg = grad;
                for (std::size_t r = 0; r < m; ++r)
                    avg.biases[r] = (grad.biases[r] + 2.0 * k2.biases[r] + 2.0 * k3.biases[r] + k4.biases[r]) / 6.0;
                for (std::size_t r = 0; r < avg.signs.size(); ++r)
                    avg.signs[r] = (grad.signs[r] + 2.0 * k2.signs[r] + 2.0 * k3.signs[r] + k4.signs[r]) / 6.0;
                detail::axpy(trial, net, step, avg);
            }
            new_loss = network::l2_loss(trial, g);
            if (!std::isfinite(new_loss)) break;
            if (new_loss <= loss + cfg.descent_tolerance) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            traj.aborted = true;
            traj.diagnostic = "gradient_flow: step underflow at t=" + format_double(t) + " (loss " +
                              format_double(loss) + ", rejected " + format_double(new_loss) + ")";
            record();
            break;
        }
        kappa_integral += 0.5 * step * (std::sqrt(2.0 * loss) + std::sqrt(2.0 * new_loss));
        std::swap(net, trial);
        loss = new_loss;
        grad = network::loss_gradient(net, g);
        max_grad = std::max(max_grad, grad.max_abs());
        t += step;
        ++traj.steps;
        const bool last = !(t < cfg.horizon - end_tol);
        if (traj.steps % cfg.record_every == 0 || last) record();
    }
    traj.integrator_slack = 10.0 * dt * max_grad;
    traj.final_net = net;
    return traj;
}

// Minimizes (1/n) sum_i (f(x_i) - g(x_i))^2 over n uniform samples with Adam
// and a step-decay schedule; norms are recorded on the full quadrature grid.
inline Trajectory adam_train(const ShallowNet& start, const std::function<double(double)>& target,
                             const AdamConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    start.validate();
    const std::size_t m = start.width();
    const std::size_t n = cfg.sample_count ? cfg.sample_count : 2 * m;
    const std::size_t nodes = cfg.grid_nodes ? cfg.grid_nodes : 100 * m + 1;
    const GridFunction grid_target = GridFunction::sample(nodes, target);
    const ResidualNorm s_norm(grid_target, cfg.truncation, cfg.s);

    CounterRng sampler(seed, streams::adam_samples);
    std::vector<double> xs(n), gs(n);
    auto draw = [&]() {
        for (double& x : xs) x = sampler.uniform(-1.0, 1.0);
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i < n; ++i) gs[i] = target(xs[i]);
    };
    draw();

    Trajectory traj;
    traj.width = m;
    traj.smoothness = cfg.s;
    traj.initial_biases = start.biases;

    ShallowNet net = start;
    std::vector<double> m1(m, 0.0), v1(m, 0.0), m2, v2;
    if (net.train_signs) {
        m2.assign(m, 0.0);
        v2.assign(m, 0.0);
    }
    std::vector<double> fx(n), kappa(n), gb(m), ga(m);
    double kappa_integral = 0.0;
    double sample_loss = 0.0;
    double best = std::numeric_limits<double>::infinity();
    double best_before_window = best;
    double grad_inf = 0.0;

    auto evaluate = [&]() {
        const network::SortedUnits units(net);
        units.evaluate(xs, fx);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            kappa[i] = fx[i] - gs[i];
            sum += kappa[i] * kappa[i];
        }
        sample_loss = sum / static_cast<double>(n);
        // Sweep units in ascending bias against the suffix of samples.
        const auto order = units.order();
        const auto theta = units.sorted_biases();
        double suffix_k = 0.0, suffix_kx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            suffix_k += kappa[i];
            suffix_kx += kappa[i] * xs[i];
        }
        std::size_t i = 0;
        const double pre = 2.0 * net.scale() / static_cast<double>(n);
        grad_inf = 0.0;
        for (std::size_t u = 0; u < m; ++u) {
            while (i < n && xs[i] <= theta[u]) {
                suffix_k -= kappa[i];
                suffix_kx -= kappa[i] * xs[i];
                ++i;
            }
            const std::size_t r = order[u];
            gb[r] = -net.signs[r] * pre * suffix_k;
            grad_inf = std::max(grad_inf, std::abs(gb[r]));
            if (net.train_signs) {
                ga[r] = pre * (suffix_kx - theta[u] * suffix_k);
                grad_inf = std::max(grad_inf, std::abs(ga[r]));
            }
        }
    };

    std::size_t step = 0;
    auto record = [&]() {
        TrajectoryRecord rec;
        rec.t = static_cast<double>(step);
        rec.loss = sample_loss;
        rec.l2_err = std::sqrt(2.0 * network::l2_loss(net, grid_target));
        rec.s_norm = s_norm(net);
        rec.wdist_inf = max_abs_diff(net.biases, traj.initial_biases);
        rec.kappa_time_integral = kappa_integral;
        rec.grad_inf = grad_inf;
        rec.bias_hash = hash_doubles(net.biases);
        traj.records.push_back(rec);
    };

    evaluate();
    record();
    double b1t = 1.0, b2t = 1.0;
    while (step < cfg.iterations) {
        const double lr = cfg.rate * std::pow(cfg.decay, static_cast<double>(step / cfg.decay_period));
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        auto update = [&](std::vector<double>& param, std::vector<double>& mom, std::vector<double>& var,
                          const std::vector<double>& grad) {
            for (std::size_t r = 0; r < m; ++r) {
                mom[r] = cfg.beta1 * mom[r] + (1.0 - cfg.beta1) * grad[r];
                var[r] = cfg.beta2 * var[r] + (1.0 - cfg.beta2) * grad[r] * grad[r];
                const double mhat = mom[r] / (1.0 - b1t);
                const double vhat = var[r] / (1.0 - b2t);
                param[r] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
            }
        };
        update(net.biases, m1, v1, gb);
        if (net.train_signs) update(net.signs, m2, v2, ga);
        ++step;
        if (cfg.resample) draw();
        evaluate();
        kappa_integral += std::sqrt(2.0 * sample_loss);
        if (!std::isfinite(sample_loss)) {
            traj.aborted = true;
            traj.diagnostic = "adam_train: non-finite loss at step " + std::to_string(step);
            break;
        }
        best = std::min(best, sample_loss);
        if (cfg.convergence_window && step % cfg.convergence_window == 0) {
            if (std::isfinite(best_before_window) &&
                best_before_window - best < cfg.convergence_tolerance * best_before_window) {
                traj.converged = true;
            }
            best_before_window = best;
        }
        if (step % cfg.record_every == 0 || step == cfg.iterations || traj.converged) record();
        if (traj.converged) break;
    }
    if (traj.aborted) {
        traj.records.push_back(traj.records.back());
        traj.records.back().t = static_cast<double>(step);
        traj.records.back().loss = sample_loss;
    }
    traj.steps = step;
    traj.final_net = net;
    return traj;
}

struct WeightDistanceRow {
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

// ||theta(t) - theta(0)||_inf <= sqrt(2/m) int_0^t ||kappa||_0 + slack.
inline std::vector<WeightDistanceRow> weight_distance_check(const Trajectory& traj) {
    std::vector<WeightDistanceRow> rows;
    const double factor = std::sqrt(2.0 / static_cast<double>(traj.width));
    for (const auto& rec : traj.records) {
        WeightDistanceRow row;
        row.t = rec.t;
        row.lhs = rec.wdist_inf;
        row.rhs = factor * rec.kappa_time_integral + traj.integrator_slack;
        row.pass = row.lhs <= row.rhs;
        rows.push_back(row);
    }
    return rows;
}

inline bool weight_distance_holds(const Trajectory& traj) {
    const auto rows = weight_distance_check(traj);
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
}

}  // namespace ntklab::training

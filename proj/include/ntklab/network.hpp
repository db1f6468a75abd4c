#pragma once

// Shallow ReLU network with trainable biases,
//
//   f(x) = m^{-1/2} sum_r a_r max(x - theta_r, 0),
//
// its residual against a target, the infinite-sample loss 1/2 ||f - g||^2
// and exact gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/rng.hpp"
#include "ntklab/spectral.hpp"

namespace ntklab::network {

using spectral::GridFunction;
using spectral::SpectralFunction;

struct ShallowNet {
    std::vector<double> signs;   // a_r; +-1 unless train_signs
    std::vector<double> biases;  // theta_r
    bool train_signs = false;

    ShallowNet() = default;
    ShallowNet(std::vector<double> a, std::vector<double> theta, bool trainable_signs = false)
        : signs(std::move(a)), biases(std::move(theta)), train_signs(trainable_signs) {
        validate();
    }

    std::size_t width() const noexcept { return biases.size(); }
    double scale() const noexcept { return 1.0 / std::sqrt(static_cast<double>(biases.size())); }

    void validate() const {
        if (biases.empty()) throw std::invalid_argument("ShallowNet: width must be >= 1");
        if (signs.size() != biases.size())
            throw std::invalid_argument("ShallowNet: signs and biases differ in length");
        if (!train_signs) {
            for (double a : signs)
                if (std::abs(a) != 1.0)
                    throw std::invalid_argument("ShallowNet: untrained signs must be +-1");
        }
    }

    friend bool operator==(const ShallowNet&, const ShallowNet&) = default;
};

struct InitRecord {
    std::uint64_t seed = 0;
    std::vector<double> biases;
    std::vector<double> signs;
};

struct Initialized {
    ShallowNet net;
    InitRecord record;
};

// theta_r ~ U[-1, 1], a_r = +-1 with probability 1/2, fully determined by seed.
inline Initialized init(std::size_t m, std::uint64_t seed, bool train_signs = false) {
    if (m == 0) throw std::invalid_argument("init: width must be >= 1");
    CounterRng bias_rng(seed, streams::init_biases);
    CounterRng sign_rng(seed, streams::init_signs);
    std::vector<double> theta(m), a(m);
    for (std::size_t r = 0; r < m; ++r) theta[r] = bias_rng.uniform(-1.0, 1.0);
    for (std::size_t r = 0; r < m; ++r) a[r] = sign_rng.sign();
    Initialized out{ShallowNet(a, theta, train_signs), InitRecord{seed, theta, a}};
    return out;
}

inline double forward(const ShallowNet& net, double x) noexcept {
    double sum = 0.0;
    for (std::size_t r = 0; r < net.width(); ++r) sum += net.signs[r] * std::max(x - net.biases[r], 0.0);
    return sum * net.scale();
}

// Unit order by bias with prefix sums of a_r and a_r theta_r, for O(n + m)
// evaluation at sorted points.
class SortedUnits {
public:
    explicit SortedUnits(const ShallowNet& net) : scale_(net.scale()) {
        const std::size_t m = net.width();
        order_.resize(m);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::sort(order_.begin(), order_.end(), [&](std::size_t i, std::size_t j) {
            return net.biases[i] < net.biases[j] || (net.biases[i] == net.biases[j] && i < j);
        });
        theta_.resize(m);
        sum_a_.resize(m + 1, 0.0);
        sum_at_.resize(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t r = order_[i];
            theta_[i] = net.biases[r];
            sum_a_[i + 1] = sum_a_[i] + net.signs[r];
            sum_at_[i + 1] = sum_at_[i] + net.signs[r] * net.biases[r];
        }
    }

    // Evaluates f at ascending points xs.
    void evaluate(std::span<const double> xs, std::span<double> out) const {
        std::size_t active = 0;  // units with theta < x
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            while (active < theta_.size() && theta_[active] < x) ++active;
            out[i] = scale_ * (x * sum_a_[active] - sum_at_[active]);
        }
    }

    std::span<const std::size_t> order() const noexcept { return order_; }
    std::span<const double> sorted_biases() const noexcept { return theta_; }

private:
    double scale_;
    std::vector<std::size_t> order_;
    std::vector<double> theta_;
    std::vector<double> sum_a_;
    std::vector<double> sum_at_;
};

inline GridFunction sample_net(const ShallowNet& net, std::size_t nodes) {
    GridFunction out(nodes);
    std::vector<double> xs(nodes);
    for (std::size_t j = 0; j < nodes; ++j) xs[j] = out.node(j);
    SortedUnits(net).evaluate(xs, out.values());
    return out;
}

inline GridFunction residual(const ShallowNet& net, const GridFunction& g) {
    return sample_net(net, g.nodes()) - g;
}

// 1/2 int (f - g_I)^2 with g_I the piecewise-linear interpolant of the
// samples of g. The residual is linear between consecutive points of
// (grid nodes) U (biases in (-1, 1)), so each piece is integrated exactly.
inline double l2_loss(const ShallowNet& net, const GridFunction& g) {
    const SortedUnits units(net);
    const std::size_t n = g.nodes();
    std::vector<double> xs;
    xs.reserve(n + net.width());
    std::size_t u = 0;
    const auto theta = units.sorted_biases();
    for (std::size_t j = 0; j < n; ++j) {
        const double x = g.node(j);
        while (u < theta.size() && theta[u] < x) {
            if (theta[u] > -1.0) xs.push_back(theta[u]);
            ++u;
        }
        xs.push_back(x);
    }
    std::vector<double> fx(xs.size());
    units.evaluate(xs, fx);
    double sum = 0.0;
    double prev_x = xs[0];
    double prev_k = fx[0] - g.interpolate(prev_x);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double k = fx[i] - g.interpolate(xs[i]);
        const double d = xs[i] - prev_x;
        sum += d / 3.0 * (prev_k * prev_k + prev_k * k + k * k);
        prev_x = xs[i];
        prev_k = k;
    }
    return 0.5 * sum;
}

struct LossGradient {
    std::vector<double> biases;  // dL/dtheta_r
    std::vector<double> signs;   // dL/da_r, empty unless train_signs

    double max_abs() const noexcept {
        double worst = 0.0;
        for (double v : biases) worst = std::max(worst, std::abs(v));
        for (double v : signs) worst = std::max(worst, std::abs(v));
        return worst;
    }
    double squared_norm() const noexcept {
        double s = 0.0;
        for (double v : biases) s += v * v;
        for (double v : signs) s += v * v;
        return s;
    }
};

// Exact gradient of l2_loss up to O(h^2):
//   dL/dtheta_r = -(a_r / sqrt m) int_{theta_r}^1 kappa,
//   dL/da_r     =  (1 / sqrt m)  int_{theta_r}^1 (y - theta_r) kappa(y) dy.
// Full cells use the trapezoid rule on the residual samples; the cell that
// contains theta_r is split at theta_r, where kappa is evaluated exactly.
inline LossGradient loss_gradient(const ShallowNet& net, const GridFunction& g) {
    const std::size_t n = g.nodes();
    const std::size_t m = net.width();
    const double h = g.spacing();
    const GridFunction kappa = residual(net, g);

    // Suffix trapezoid integrals from node j to 1.
    std::vector<double> tail(n, 0.0), tail_y(n, 0.0);
    for (std::size_t j = n - 1; j-- > 0;) {
        tail[j] = tail[j + 1] + 0.5 * h * (kappa[j] + kappa[j + 1]);
        tail_y[j] = tail_y[j + 1] +
                    0.5 * h * (g.node(j) * kappa[j] + g.node(j + 1) * kappa[j + 1]);
    }

    const SortedUnits units(net);
    const auto order = units.order();
    const auto theta_sorted = units.sorted_biases();
    std::vector<double> f_at_theta(m);
    units.evaluate(theta_sorted, f_at_theta);

    LossGradient grad;
    grad.biases.assign(m, 0.0);
    if (net.train_signs) grad.signs.assign(m, 0.0);
    const double scale = net.scale();

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t r = order[i];
        const double t = theta_sorted[i];
        double integral = 0.0;   // int_t^1 kappa
        double moment = 0.0;     // int_t^1 (y - t) kappa
        if (t >= 1.0) {
            integral = 0.0;
            moment = 0.0;
        } else if (t <= -1.0) {
            integral = tail[0];
            moment = tail_y[0] - t * tail[0];
        } else {
            auto j = static_cast<std::size_t>((t + 1.0) / h);
            if (j >= n - 1) j = n - 2;
            while (j + 1 < n - 1 && g.node(j + 1) <= t) ++j;
            while (j > 0 && g.node(j) > t) --j;
            const double right = g.node(j + 1);
            const double d = right - t;
            const double k_t = f_at_theta[i] - g.interpolate(t);
            const double k_r = kappa[j + 1];
            integral = tail[j + 1] + 0.5 * d * (k_t + k_r);
            const double full = tail_y[j + 1] - t * tail[j + 1];
            const double partial = d / 6.0 * (4.0 * 0.5 * d * 0.5 * (k_t + k_r) + d * k_r);
            moment = full + partial;
        }
        grad.biases[r] = -net.signs[r] * scale * integral;
        if (net.train_signs) grad.signs[r] = scale * moment;
    }
    return grad;
}

// Eigenbasis coefficients of (a_r / sqrt m) sigma'(x - theta_r):
//   (a_r / (omega_k sqrt m)) cos(omega_k theta_r - phase_k),
// with theta_r clamped to [-1, 1] (the support is intersected with D).
inline SpectralFunction partial_derivative_coeffs(const ShallowNet& net, std::size_t r,
                                                  std::size_t truncation) {
    if (r >= net.width()) throw std::out_of_range("partial_derivative_coeffs: unit index out of range");
    SpectralFunction c(truncation);
    const double t = std::clamp(net.biases[r], -1.0, 1.0);
    const double pre = net.signs[r] * net.scale();
    for (std::size_t k = 0; k < truncation; ++k) {
        const double w = spectral::eigen_frequency(k);
        c[k] = t >= 1.0 ? 0.0 : pre / w * std::cos(w * t - spectral::eigen_phase(k));
    }
    return c;
}

// Exact eigenbasis coefficients <f, phi_k> of the network output.
inline SpectralFunction output_coeffs(const ShallowNet& net, std::size_t truncation) {
    SpectralFunction c(truncation);
    const double scale = net.scale();
    std::vector<double> w(truncation), ph(truncation), top(truncation);
    for (std::size_t k = 0; k < truncation; ++k) {
        w[k] = spectral::eigen_frequency(k);
        ph[k] = spectral::eigen_phase(k);
        top[k] = std::sin(w[k] - ph[k]) / (w[k] * w[k]);
    }
    for (std::size_t r = 0; r < net.width(); ++r) {
        const double t = net.biases[r];
        if (t >= 1.0) continue;
        const double lo = std::max(t, -1.0);
        const double a = net.signs[r] * scale;
        for (std::size_t k = 0; k < truncation; ++k) {
            const double arg = w[k] * lo - ph[k];
            c[k] += a * (top[k] + (lo - t) * std::cos(arg) / w[k] - std::sin(arg) / (w[k] * w[k]));
        }
    }
    return c;
}

}  // namespace ntklab::network

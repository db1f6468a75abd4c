#pragma once

// Function representations on D = [-1, 1] and the eigen-system of the
// bias-trained shallow ReLU tangent kernel.
//
//   eigenfunctions  phi_k(x) = sin(omega_k x - phase_k)
//   frequencies     omega_k  = pi/4 + (pi/2) k
//   phases          phase_k  = -(-1)^k pi/4
//   eigenvalues     lambda_k = 1 / (2 omega_k^2)
//
// The kernel acts as (Hv)(x) = 1/2 int_{-1}^x V, V(t) = int_t^1 v. The
// smoothness scale is ||v||_s^2 = sum_k omega_k^{2s} v_k^2 over eigenbasis
// coefficients v_k.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntklab/math.hpp"

namespace ntklab::spectral {

inline constexpr double pi = std::numbers::pi;

inline double eigen_frequency(std::size_t k) noexcept {
    return pi / 4.0 + pi / 2.0 * static_cast<double>(k);
}

inline double eigen_phase(std::size_t k) noexcept {
    return (k % 2 == 0) ? -pi / 4.0 : pi / 4.0;
}

inline double eigenfunction_eval(std::size_t k, double x) noexcept {
    return std::sin(eigen_frequency(k) * x - eigen_phase(k));
}

// Eigenvalue of the integral operator on phi_k.
inline double ntk_eigenvalue(std::size_t k) noexcept {
    const double w = eigen_frequency(k);
    return 0.5 / (w * w);
}

// The constant printed in the eigenbasis lemma (2 omega_k^{-2}); kept for
// the eigen-system report only.
inline double stated_eigenvalue(std::size_t k) noexcept {
    const double w = eigen_frequency(k);
    return 2.0 / (w * w);
}

// sum_{k >= first} omega_k^{power}, power < -1, via omega_k = (pi/2)(k + 1/2).
inline double frequency_power_tail(double power, std::size_t first = 0) {
    if (!(power < -1.0))
        throw std::domain_error("frequency_power_tail: series diverges for power >= -1");
    return std::pow(pi / 2.0, power) * hurwitz_zeta(-power, static_cast<double>(first) + 0.5);
}

// ---------------------------------------------------------------------------
// GridFunction

class GridFunction {
public:
    explicit GridFunction(std::size_t nodes) : values_(nodes, 0.0) { validate(); }

    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) { validate(); }

    template <class F>
    static GridFunction sample(std::size_t nodes, F&& f) {
        GridFunction g(nodes);
        for (std::size_t j = 0; j < nodes; ++j) g.values_[j] = f(g.node(j));
        return g;
    }

    static bool valid_node_count(std::size_t nodes) noexcept { return nodes >= 3 && nodes % 2 == 1; }

    std::size_t nodes() const noexcept { return values_.size(); }
    double spacing() const noexcept { return 2.0 / static_cast<double>(values_.size() - 1); }

    double node(std::size_t j) const noexcept {
        // Exact at both endpoints and at the midpoint.
        const auto n = static_cast<double>(values_.size() - 1);
        return (2.0 * static_cast<double>(j) - n) / n;
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    double& operator[](std::size_t j) noexcept { return values_[j]; }

    // Composite trapezoid inner product.
    double inner(const GridFunction& other) const {
        require_compatible(other);
        const std::size_t n = values_.size();
        double sum = 0.5 * (values_[0] * other.values_[0] + values_[n - 1] * other.values_[n - 1]);
        for (std::size_t j = 1; j + 1 < n; ++j) sum += values_[j] * other.values_[j];
        return sum * spacing();
    }

    double norm() const { return std::sqrt(std::max(0.0, inner(*this))); }

    // Linear interpolation of the samples at x in [-1, 1].
    double interpolate(double x) const noexcept {
        const double h = spacing();
        double pos = (x + 1.0) / h;
        if (pos <= 0.0) return values_.front();
        const auto last = static_cast<double>(values_.size() - 1);
        if (pos >= last) return values_.back();
        const auto j = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(j);
        return values_[j] * (1.0 - w) + values_[j + 1] * w;
    }

    GridFunction& operator+=(const GridFunction& o) {
        require_compatible(o);
        for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        require_compatible(o);
        for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
        return *this;
    }
    GridFunction& operator*=(double a) noexcept {
        for (double& v : values_) v *= a;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

    void require_compatible(const GridFunction& other) const {
        if (other.nodes() != nodes())
            throw std::invalid_argument("GridFunction: incompatible grids (" +
                                        std::to_string(nodes()) + " vs " +
                                        std::to_string(other.nodes()) + " nodes)");
    }

private:
    void validate() const {
        if (!valid_node_count(values_.size()))
            throw std::invalid_argument("GridFunction: node count must be odd and >= 3, got " +
                                        std::to_string(values_.size()));
    }

    std::vector<double> values_;
};

inline std::size_t default_nodes(std::size_t width) {
    const std::size_t n = 100 * width + 1;
    return n < 8001 ? 8001 : n;
}

// ---------------------------------------------------------------------------
// SpectralFunction

class SpectralFunction {
public:
    explicit SpectralFunction(std::size_t truncation) : coeffs_(truncation, 0.0) { validate(); }
    explicit SpectralFunction(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { validate(); }

    static SpectralFunction unit(std::size_t k, std::size_t truncation) {
        SpectralFunction v(truncation);
        v.coeffs_.at(k) = 1.0;
        return v;
    }

    std::size_t truncation() const noexcept { return coeffs_.size(); }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> coeffs() noexcept { return coeffs_; }
    double operator[](std::size_t k) const noexcept { return coeffs_[k]; }
    double& operator[](std::size_t k) noexcept { return coeffs_[k]; }

    SpectralFunction& operator-=(const SpectralFunction& o) {
        if (o.truncation() != truncation())
            throw std::invalid_argument("SpectralFunction: truncation mismatch");
        for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
        return *this;
    }
    friend SpectralFunction operator-(SpectralFunction a, const SpectralFunction& b) { return a -= b; }

private:
    void validate() const {
        if (coeffs_.empty()) throw std::invalid_argument("SpectralFunction: truncation must be >= 1");
    }

    std::vector<double> coeffs_;
};

inline double smoothness_norm(std::span<const double> coeffs, double s) {
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        sum += std::pow(eigen_frequency(k), 2.0 * s) * coeffs[k] * coeffs[k];
    return std::sqrt(sum);
}

inline double smoothness_norm(const SpectralFunction& v, double s) {
    return smoothness_norm(v.coeffs(), s);
}

// Eigenfunctions tabulated on a grid; reuse it when projecting many
// functions on the same grid.
class Projector {
public:
    Projector(std::size_t nodes, std::size_t truncation) : nodes_(nodes), truncation_(truncation) {
        if (!GridFunction::valid_node_count(nodes))
            throw std::invalid_argument("Projector: node count must be odd and >= 3");
        if (truncation == 0) throw std::invalid_argument("Projector: truncation must be >= 1");
        const GridFunction grid(nodes);
        const double h = grid.spacing();
        table_.resize(nodes * truncation);
        for (std::size_t k = 0; k < truncation; ++k) {
            for (std::size_t j = 0; j < nodes; ++j) {
                double w = h;
                if (j == 0 || j + 1 == nodes) w *= 0.5;
                table_[k * nodes + j] = w * eigenfunction_eval(k, grid.node(j));
            }
        }
    }

    std::size_t nodes() const noexcept { return nodes_; }
    std::size_t truncation() const noexcept { return truncation_; }

    SpectralFunction project(const GridFunction& f) const {
        if (f.nodes() != nodes_) throw std::invalid_argument("Projector: grid mismatch");
        SpectralFunction v(truncation_);
        const auto vals = f.values();
        for (std::size_t k = 0; k < truncation_; ++k) {
            const double* row = &table_[k * nodes_];
            double sum = 0.0;
            for (std::size_t j = 0; j < nodes_; ++j) sum += row[j] * vals[j];
            v[k] = sum;
        }
        return v;
    }

private:
    std::size_t nodes_;
    std::size_t truncation_;
    std::vector<double> table_;  // trapezoid weight * phi_k(x_j), row per mode
};

inline SpectralFunction project(const GridFunction& f, std::size_t truncation) {
    if (truncation == 0) throw std::invalid_argument("project: truncation must be >= 1");
    SpectralFunction v(truncation);
    const std::size_t n = f.nodes();
    const double h = f.spacing();
    for (std::size_t k = 0; k < truncation; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
            sum += w * f[j] * eigenfunction_eval(k, f.node(j));
        }
        v[k] = sum * h;
    }
    return v;
}

inline GridFunction synthesize(const SpectralFunction& v, std::size_t nodes) {
    GridFunction g(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        const double x = g.node(j);
        double sum = 0.0;
        for (std::size_t k = 0; k < v.truncation(); ++k) sum += v[k] * eigenfunction_eval(k, x);
        g[j] = sum;
    }
    return g;
}

// (Hv)(x) = 1/2 int_{-1}^x V, V(t) = int_t^1 v, both by cumulative trapezoid.
inline GridFunction apply_ntk_integral(const GridFunction& v) {
    const std::size_t n = v.nodes();
    const double h = v.spacing();
    std::vector<double> tail(n, 0.0);
    for (std::size_t j = n - 1; j-- > 0;) tail[j] = tail[j + 1] + 0.5 * h * (v[j] + v[j + 1]);
    GridFunction out(n);
    for (std::size_t j = 1; j < n; ++j) out[j] = out[j - 1] + 0.25 * h * (tail[j - 1] + tail[j]);
    return out;
}

// ---------------------------------------------------------------------------
// Eigen-system summary

struct EigenSystem {
    std::size_t truncation = 0;
    std::vector<double> frequencies;
    std::vector<double> phases;
    std::vector<double> eigenvalues;

    static EigenSystem build(std::size_t truncation) {
        EigenSystem e;
        e.truncation = truncation;
        for (std::size_t k = 0; k < truncation; ++k) {
            e.frequencies.push_back(eigen_frequency(k));
            e.phases.push_back(eigen_phase(k));
            e.eigenvalues.push_back(ntk_eigenvalue(k));
        }
        return e;
    }
};

// ---------------------------------------------------------------------------
// KernelMatrix: operator restricted to the first K eigenfunctions,
// entries <phi_k, A phi_l>.

class KernelMatrix {
public:
    explicit KernelMatrix(std::size_t truncation) : k_(truncation), entries_(truncation * truncation, 0.0) {
        if (truncation == 0) throw std::invalid_argument("KernelMatrix: truncation must be >= 1");
    }

    static KernelMatrix diagonal(std::span<const double> diag) {
        KernelMatrix m(diag.size());
        for (std::size_t k = 0; k < diag.size(); ++k) m(k, k) = diag[k];
        return m;
    }

    std::size_t truncation() const noexcept { return k_; }
    double operator()(std::size_t k, std::size_t l) const noexcept { return entries_[k * k_ + l]; }
    double& operator()(std::size_t k, std::size_t l) noexcept { return entries_[k * k_ + l]; }
    std::span<const double> entries() const noexcept { return entries_; }

    double max_asymmetry() const noexcept {
        double worst = 0.0;
        for (std::size_t k = 0; k < k_; ++k)
            for (std::size_t l = k + 1; l < k_; ++l)
                worst = std::max(worst, std::abs((*this)(k, l) - (*this)(l, k)));
        return worst;
    }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t k = 0; k < k_; ++k) t += (*this)(k, k);
        return t;
    }

    KernelMatrix& operator-=(const KernelMatrix& o) {
        if (o.k_ != k_) throw std::invalid_argument("KernelMatrix: truncation mismatch");
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= o.entries_[i];
        return *this;
    }
    friend KernelMatrix operator-(KernelMatrix a, const KernelMatrix& b) { return a -= b; }

private:
    std::size_t k_;
    std::vector<double> entries_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, double estimate)
        : std::runtime_error(what), residual_(residual), estimate_(estimate) {}
    double residual() const noexcept { return residual_; }
    double estimate() const noexcept { return estimate_; }

private:
    double residual_;
    double estimate_;
};

struct PowerIterationOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10000;
};

// Largest singular value of D_s M D_t with D_r = diag(omega_k^r), i.e. the
// induced norm of M : H^{from_order} -> H^{to_order} where from_order = -t.
// Power iteration on A^T A from the all-ones vector; stops when the Rayleigh
// quotient changes by less than tolerance relative.
inline double weighted_operator_norm(const KernelMatrix& m, double from_order, double to_order,
                                     PowerIterationOptions opts = {}) {
    const std::size_t k = m.truncation();
    std::vector<double> a(k * k);
    bool all_zero = true;
    for (std::size_t i = 0; i < k; ++i) {
        const double left = std::pow(eigen_frequency(i), to_order);
        for (std::size_t j = 0; j < k; ++j) {
            a[i * k + j] = left * m(i, j) * std::pow(eigen_frequency(j), -from_order);
            if (!std::isfinite(a[i * k + j]))
                throw std::domain_error("weighted_operator_norm: non-finite entry");
            if (a[i * k + j] != 0.0) all_zero = false;
        }
    }
    if (all_zero) return 0.0;

    std::vector<double> x(k, 1.0 / std::sqrt(static_cast<double>(k))), y(k), z(k);
    double rho = 0.0;
    double residual = 0.0;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        for (std::size_t i = 0; i < k; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) sum += a[i * k + j] * x[j];
            y[i] = sum;
        }
        for (std::size_t j = 0; j < k; ++j) z[j] = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) z[j] += a[i * k + j] * y[i];
        double xz = 0.0, zz = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            xz += x[j] * z[j];
            zz += z[j] * z[j];
        }
        const double next = xz;  // Rayleigh quotient of A^T A, x unit
        residual = 0.0;
        for (std::size_t j = 0; j < k; ++j) residual += (z[j] - next * x[j]) * (z[j] - next * x[j]);
        residual = std::sqrt(residual) / std::max(next, 1e-300);
        const double norm_z = std::sqrt(zz);
        if (norm_z == 0.0) return 0.0;
        for (std::size_t j = 0; j < k; ++j) x[j] = z[j] / norm_z;
        if (it > 0 && std::abs(next - rho) <= opts.tolerance * std::abs(next))
            return std::sqrt(std::max(next, 0.0));
        rho = next;
    }
    throw ConvergenceError("weighted_operator_norm: no convergence after " +
                               std::to_string(opts.max_iterations) + " iterations (residual " +
                               format_double(residual) + ")",
                           residual, std::sqrt(std::max(rho, 0.0)));
}

}  // namespace ntklab::spectral

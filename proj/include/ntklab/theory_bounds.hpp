#pragma once

// Closed-form evaluators for the convergence bounds and auxiliary lemmas,
// each with an independent numeric oracle where one exists.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ntklab/math.hpp"
#include "ntklab/spectral.hpp"

namespace ntklab::theory {

struct BoundInputs {
    double s = 0.25;
    double m = 1.0;
    double kappa0_norm_0 = 1.0;
    double kappa0_norm_s = 1.0;
    double t = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();  // NaN selects 1 - s
    double c_h = 1.0;
    double c_0 = 1.0;
    double C = 1.0;

    double holder() const { return std::isnan(alpha) ? 1.0 - s : alpha; }

    void validate() const {
        if (!(s > 0.0 && s < 0.5)) throw std::domain_error("BoundInputs: requires 0 < s < 1/2");
        if (!(m >= 1.0)) throw std::domain_error("BoundInputs: requires m >= 1");
        if (!(kappa0_norm_0 >= 0.0) || !(kappa0_norm_s >= 0.0))
            throw std::domain_error("BoundInputs: norms must be non-negative");
        if (kappa0_norm_s < kappa0_norm_0)
            throw std::domain_error("BoundInputs: requires ||kappa0||_s >= ||kappa0||_0");
        if (!(t >= 0.0)) throw std::domain_error("BoundInputs: requires t >= 0");
        if (!(holder() > 0.0)) throw std::domain_error("BoundInputs: requires alpha > 0");
        if (!(c_h > 0.0) || !(c_0 > 0.0) || !(C > 0.0))
            throw std::domain_error("BoundInputs: constants must be positive");
    }
};

struct BoundResult {
    double h = 0.0;
    double tau = 0.0;
    double bound = 0.0;
};

inline BoundResult abstract_bound(const BoundInputs& in) {
    in.validate();
    const double a = in.holder();
    const double s = in.s;
    BoundResult out;
    out.h = std::pow(in.c_h * in.kappa0_norm_0, 1.0 / (1.0 + a)) * std::pow(in.m, -1.0 / (2.0 * (1.0 + a)));
    out.tau = std::pow(in.c_0 * in.kappa0_norm_0, 2.0 * a / (1.0 + a)) * std::pow(in.m, 1.0 / (1.0 + a));
    const double ha = std::pow(out.h, a);
    out.bound = std::pow(ha * std::pow(in.kappa0_norm_s, 2.0 / s) +
                             std::pow(in.kappa0_norm_0, 2.0 / s) * std::exp(-ha * in.t / s),
                         s);
    return out;
}

inline BoundResult theorem_bound_1d(const BoundInputs& in) {
    BoundInputs fixed = in;
    fixed.alpha = 1.0 - in.s;
    auto out = abstract_bound(fixed);
    out.bound *= in.C;
    return out;
}

struct Exponents {
    double error_exponent = 0.0;
    double weight_exponent = 0.0;
};

// Closed on [0, 1/2] so the endpoint limits can be evaluated directly.
inline Exponents approximation_exponents(double s) {
    if (!(s >= 0.0 && s <= 0.5)) throw std::domain_error("approximation_exponents: requires 0 <= s <= 1/2");
    return {s / 4.0 * (1.0 - s) / (2.0 - s), 1.0 / (2.0 * (2.0 - s))};
}

// 1 - G m^{1/(2-s)} e^{-m^{1/(2-s)}} - G m^{1/(4-2s)} e^{-g m^{(1-s)/(2-s)}}, clipped.
inline double tail_probability_1d(const BoundInputs& in, double gamma = 1.0, double Gamma = 1.0) {
    in.validate();
    if (!(gamma > 0.0) || !(Gamma > 0.0)) throw std::domain_error("tail_probability_1d: constants must be positive");
    const double s = in.s;
    const double p1 = std::pow(in.m, 1.0 / (2.0 - s));
    const double p2 = std::pow(in.m, 1.0 / (4.0 - 2.0 * s));
    const double p3 = std::pow(in.m, (1.0 - s) / (2.0 - s));
    const double value = 1.0 - Gamma * p1 * std::exp(-p1) - Gamma * p2 * std::exp(-gamma * p3);
    return std::clamp(value, 0.0, 1.0);
}

// int_0^inf t^alpha min(x, t)^beta dt
inline void check_min_int_domain(double alpha, double beta, double x) {
    if (!(alpha < -1.0) || !(alpha + beta > -1.0) || !(x > 0.0))
        throw std::domain_error("min_int: requires alpha < -1, alpha + beta > -1, x > 0");
}

inline double min_int(double alpha, double beta, double x) {
    check_min_int_domain(alpha, beta, x);
    const double p = alpha + beta + 1.0;
    return -beta * std::pow(x, p) / (p * (alpha + 1.0));
}

// Constant as printed alongside the lemma; kept for the discrepancy report.
inline double min_int_printed(double alpha, double beta, double x) {
    check_min_int_domain(alpha, beta, x);
    return -beta / (alpha * (alpha + beta)) * std::pow(x, alpha + beta + 1.0);
}

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    double tail_tolerance = 1e-11;  // relative, for each truncated end
};

struct OracleValue {
    double value = 0.0;
    double tail_bound = 0.0;  // integral mass dropped at both truncated ends
};

// Adaptive Simpson in u = log t on [log x - L, log x + U], split at log x.
// The dropped ends are x^p e^{-pL}/p and x^p e^{(alpha+1)U}/|alpha+1|.
inline OracleValue min_int_oracle(double alpha, double beta, double x, QuadratureSpec spec = {}) {
    check_min_int_domain(alpha, beta, x);
    const double p = alpha + beta + 1.0;
    const double q = -(alpha + 1.0);
    const double lx = std::log(x);
    const double lower_len = std::log(1.0 / spec.tail_tolerance) / p;
    const double upper_len = std::log(1.0 / spec.tail_tolerance) / q;
    const double xb = std::pow(x, beta);
    auto lower = [&](double u) { return std::exp(p * u); };
    auto upper = [&](double u) { return xb * std::exp((alpha + 1.0) * u); };
    const double scale = std::pow(x, p);
    OracleValue out;
    out.value = adaptive_simpson(lower, lx - lower_len, lx, spec.relative_tolerance * scale / p) +
                adaptive_simpson(upper, lx, lx + upper_len, spec.relative_tolerance * scale / q);
    out.tail_bound = scale * (std::exp(-p * lower_len) / p + std::exp(-q * upper_len) / q);
    return out;
}

struct MinSum {
    double direct_sum = 0.0;
    double envelope = 0.0;
    bool pass = false;
};

inline double min_sum_constant(double alpha) {
    return -4.0 * std::pow(std::numbers::pi / 2.0, 2.0 * alpha + 2.0) / ((2.0 * alpha + 3.0) * (2.0 * alpha + 1.0));
}

// sum_k omega_k^{2 alpha} min(omega_k x, 1)^2 against C(alpha) x^{-2 alpha - 1}.
// Terms with omega_k x < 1 are summed explicitly, the capped remainder is
// the exact series tail sum_{k >= k*} omega_k^{2 alpha}.
inline MinSum min_sum_bound(double alpha, double x) {
    if (!(alpha > -1.5 && alpha < -0.5) || !(x > 0.0))
        throw std::domain_error("min_sum_bound: requires -3/2 < alpha < -1/2, x > 0");
    MinSum out;
    std::size_t k = 0;
    double sum = 0.0;
    for (;; ++k) {
        const double w = spectral::eigen_frequency(k);
        if (w * x >= 1.0) break;
        sum += std::pow(w, 2.0 * alpha + 2.0) * x * x;
    }
    sum += spectral::frequency_power_tail(2.0 * alpha, k);
    out.direct_sum = sum;
    out.envelope = min_sum_constant(alpha) * std::pow(x, -2.0 * alpha - 1.0);
    out.pass = out.direct_sum <= out.envelope;
    return out;
}

// ||v||_s^{(t-r)/(t-s)} ||v||_t^{(r-s)/(t-s)} - ||v||_r
inline double interpolation_gap(const spectral::SpectralFunction& v, double s, double r, double t) {
    if (!(s <= r && r <= t)) throw std::domain_error("interpolation_gap: requires s <= r <= t");
    const double nr = spectral::smoothness_norm(v, r);
    if (t == s) return 0.0;
    const double ns = spectral::smoothness_norm(v, s);
    const double nt = spectral::smoothness_norm(v, t);
    return std::pow(ns, (t - r) / (t - s)) * std::pow(nt, (r - s) / (t - s)) - nr;
}

struct OdeParams {
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;
    double rho = 1.0;
    double x0 = 1.0;
    double y0 = 1.0;

    void validate() const {
        if (!(a > 0.0) || !(b > 0.0) || !(c >= 0.0) || !(rho > 0.0) || !(x0 > 0.0) || !(y0 > 0.0))
            throw std::domain_error("ode_bound: requires a, b, rho, x0, y0 > 0 and c >= 0");
    }
};

struct OdeBound {
    double x_bound = 0.0;
    double gamma = 0.0;  // bound on y
    double window = 0.0;  // largest admissible t; negative when empty
    bool empty_window = false;
};

inline double ode_gamma(const OdeParams& p) {
    const double inner = std::sqrt(p.y0) + std::pow(2.0, 1.0 / (2.0 * p.rho)) * (p.c / p.b) * std::sqrt(p.x0);
    return 2.0 * inner * inner;
}

inline OdeBound ode_bound(const OdeParams& p, double t) {
    p.validate();
    OdeBound out;
    out.gamma = ode_gamma(p);
    const double floor = p.b / p.a * std::pow(out.gamma, p.rho);
    const double x0r = std::pow(p.x0, p.rho);
    out.x_bound = std::pow(floor + x0r * std::exp(-p.b * p.rho * t), 1.0 / p.rho);
    out.window = std::log(x0r / floor) / (p.b * p.rho);
    out.empty_window = floor > x0r;
    return out;
}

struct OdeState {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

// RK4 on x' = -a x^{1+rho} y^{-rho} + b x, y' = c sqrt(x y); one state per step.
inline std::vector<OdeState> ode_oracle(const OdeParams& p, double horizon, double dt) {
    p.validate();
    if (!(dt > 0.0) || !(horizon >= 0.0)) throw std::domain_error("ode_oracle: requires dt > 0, horizon >= 0");
    auto rhs = [&](double x, double y, double& dx, double& dy) {
        x = std::max(x, 0.0);
        dx = -p.a * std::pow(x, 1.0 + p.rho) * std::pow(y, -p.rho) + p.b * x;
        dy = p.c * std::sqrt(x * y);
    };
    std::vector<OdeState> path{{0.0, p.x0, p.y0}};
    OdeState s = path.front();
    while (s.t < horizon) {
        const double h = std::min(dt, horizon - s.t);
        double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
        rhs(s.x, s.y, k1x, k1y);
        rhs(s.x + 0.5 * h * k1x, s.y + 0.5 * h * k1y, k2x, k2y);
        rhs(s.x + 0.5 * h * k2x, s.y + 0.5 * h * k2y, k3x, k3y);
        rhs(s.x + h * k3x, s.y + h * k3y, k4x, k4y);
        s.x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        s.y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        s.t += h;
        if (horizon - s.t < 1e-12 * std::max(1.0, horizon)) s.t = horizon;
        path.push_back(s);
    }
    return path;
}

struct OdeCheck {
    double window = 0.0;
    double min_x_margin = 0.0;  // min over the window of x_bound - x
    double min_y_margin = 0.0;  // min over the window of gamma - y
    bool pass = false;
};

inline OdeCheck ode_check(const OdeParams& p, double dt) {
    const auto head = ode_bound(p, 0.0);
    OdeCheck out;
    out.window = head.window;
    if (head.empty_window) return out;
    const auto path = ode_oracle(p, head.window, dt);
    out.min_x_margin = std::numeric_limits<double>::infinity();
    out.min_y_margin = std::numeric_limits<double>::infinity();
    for (const auto& st : path) {
        const auto b = ode_bound(p, st.t);
        out.min_x_margin = std::min(out.min_x_margin, b.x_bound - st.x);
        out.min_y_margin = std::min(out.min_y_margin, b.gamma - st.y);
    }
    out.pass = out.min_x_margin >= 0.0 && out.min_y_margin >= 0.0;
    return out;
}

}  // namespace ntklab::theory

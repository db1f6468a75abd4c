#pragma once

// Small numerical helpers shared by the modules: series tails, adaptive
// quadrature, order statistics, power-law fits and round-trip number
// formatting.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntklab {

// Hurwitz zeta ζ(s, q) = Σ_{n≥0} (q+n)^{-s} for s > 1, q > 0, by
// Euler-Maclaurin with 32 explicit terms and Bernoulli corrections to B_14.
inline double hurwitz_zeta(double s, double q) {
    if (!(s > 1.0) || !(q > 0.0))
        throw std::domain_error("hurwitz_zeta: requires s > 1 and q > 0");
    constexpr int explicit_terms = 32;
    double sum = 0.0;
    for (int n = 0; n < explicit_terms; ++n) sum += std::pow(q + n, -s);
    const double a = q + explicit_terms;
    sum += std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s);

    // B_{2j} / (2j)!
    constexpr std::array<double, 7> coef = {
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40320.0,
        5.0 / 66.0 / 3628800.0,
        -691.0 / 2730.0 / 479001600.0,
        7.0 / 6.0 / 87178291200.0,
    };
    double rising = s;  // s (s+1) ... (s+2j-2)
    double power = std::pow(a, -s - 1.0);
    for (std::size_t j = 0; j < coef.size(); ++j) {
        sum += coef[j] * rising * power;
        rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
        power /= a * a;
    }
    return sum;
}

// Adaptive Simpson quadrature on [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 60) {
    struct Local {
        static double step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
                return left + right + delta / 15.0;
            return step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Local::step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Quantile with linear interpolation between order statistics (R type 7).
inline double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line through (log x, log y).
inline LineFit log_log_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log_log_fit: need at least two paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::domain_error("log_log_fit: non-positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

// Shortest decimal string that parses back to the same double.
inline std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::invalid_argument("parse_double: malformed number '" + text + "'");
    return value;
}

// FNV-1a over the bytes of a double sequence.
inline std::uint64_t hash_doubles(std::span<const double> values) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace ntklab

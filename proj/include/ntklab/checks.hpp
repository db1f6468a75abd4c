#pragma once

// Verification routines shared by the command line tool and the acceptance
// suite. Each returns a named pass/fail result with a one-line detail.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ntklab/harness.hpp"
#include "ntklab/math.hpp"
#include "ntklab/network.hpp"
#include "ntklab/ntk_analysis.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/spectral.hpp"
#include "ntklab/theory_bounds.hpp"
#include "ntklab/training.hpp"

namespace ntklab::checks {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

using spectral::GridFunction;

inline GridFunction eigen_grid(std::size_t k, std::size_t nodes) {
    return GridFunction::sample(nodes, [k](double x) { return spectral::eigenfunction_eval(k, x); });
}

struct EigenReport {
    double orthonormality_error = 0.0;
    double relation_error = 0.0;  // max_k ||H phi_k - lambda_k phi_k|| / lambda_k
    std::vector<double> rayleigh;  // <phi_k, H phi_k> / <phi_k, phi_k>
    double boundary_error = 0.0;  // max |phi_k(-1)|, |phi_k'(1)|
};

inline EigenReport eigen_report(std::size_t modes, std::size_t nodes) {
    EigenReport rep;
    std::vector<GridFunction> phi;
    for (std::size_t k = 0; k < modes; ++k) phi.push_back(eigen_grid(k, nodes));
    for (std::size_t j = 0; j < modes; ++j)
        for (std::size_t k = j; k < modes; ++k)
            rep.orthonormality_error =
                std::max(rep.orthonormality_error, std::abs(phi[j].inner(phi[k]) - (j == k ? 1.0 : 0.0)));
    for (std::size_t k = 0; k < modes; ++k) {
        const auto hphi = spectral::apply_ntk_integral(phi[k]);
        const double lambda = spectral::ntk_eigenvalue(k);
        rep.rayleigh.push_back(phi[k].inner(hphi) / phi[k].inner(phi[k]));
        rep.relation_error = std::max(rep.relation_error, (hphi - lambda * phi[k]).norm() / lambda);
        const double w = spectral::eigen_frequency(k), ph = spectral::eigen_phase(k);
        rep.boundary_error = std::max({rep.boundary_error, std::abs(std::sin(-w - ph)), std::abs(w * std::cos(w - ph))});
    }
    return rep;
}

inline CheckResult eigen_system_check(std::size_t modes = 33, std::size_t nodes = 20001) {
    const auto rep = eigen_report(modes, nodes);
    CheckResult r{"eigen-system", rep.orthonormality_error <= 1e-6 && rep.relation_error <= 1e-4, ""};
    r.detail = "k<=" + std::to_string(modes - 1) + ": max|<phi_j,phi_k>-delta|=" + fmt(rep.orthonormality_error) +
               " (<=1e-6), max||H phi-lambda phi||/lambda=" + fmt(rep.relation_error) +
               " (<=1e-4), lambda=1/(2 omega^2), printed factor 2/omega^2 is 4x larger";
    return r;
}

// Random trigonometric polynomial sum_j c_j sin(f_j x + p_j).
struct TrigPoly {
    std::vector<double> amp, freq, phase;
    double operator()(double x) const {
        double v = 0.0;
        for (std::size_t j = 0; j < amp.size(); ++j) v += amp[j] * std::sin(freq[j] * x + phase[j]);
        return v;
    }
};

inline TrigPoly random_trig(CounterRng& rng, std::size_t terms = 4) {
    TrigPoly p;
    for (std::size_t j = 0; j < terms; ++j) {
        p.amp.push_back(rng.uniform(-1.0, 1.0));
        p.freq.push_back(rng.uniform(0.5, 8.0));
        p.phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    }
    return p;
}

struct BvpReport {
    double max_relative_error = 0.0;  // || -(Hv)'' - v/2 || / ||v/2|| on interior nodes
    double max_left_value = 0.0;      // |(Hv)(-1)|
    double max_right_slope = 0.0;     // |(Hv)'(1)|
};

inline BvpReport bvp_report(std::size_t count, std::size_t nodes, std::uint64_t seed) {
    BvpReport rep;
    CounterRng rng(seed, streams::theory);
    for (std::size_t i = 0; i < count; ++i) {
        const auto poly = random_trig(rng);
        const auto v = GridFunction::sample(nodes, poly);
        const auto w = spectral::apply_ntk_integral(v);
        const double h = w.spacing();
        double num = 0.0, den = 0.0;
        for (std::size_t j = 1; j + 1 < nodes; ++j) {
            const double second = (w[j - 1] - 2.0 * w[j] + w[j + 1]) / (h * h);
            const double d = -second - 0.5 * v[j];
            num += d * d;
            den += 0.25 * v[j] * v[j];
        }
        rep.max_relative_error = std::max(rep.max_relative_error, std::sqrt(num / den));
        rep.max_left_value = std::max(rep.max_left_value, std::abs(w[0]));
        const std::size_t n = nodes - 1;
        const double slope = (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * h);
        rep.max_right_slope = std::max(rep.max_right_slope, std::abs(slope));
    }
    return rep;
}

inline CheckResult bvp_check(std::size_t count = 20, std::size_t nodes = 20001, std::uint64_t seed = 2) {
    const auto rep = bvp_report(count, nodes, seed);
    CheckResult r{"boundary-value problem",
                  rep.max_relative_error <= 1e-3 && rep.max_left_value == 0.0 && rep.max_right_slope <= 1e-6, ""};
    r.detail = std::to_string(count) + " random v: rel||-(Hv)''-v/2||=" + fmt(rep.max_relative_error) +
               " (<=1e-3), |(Hv)(-1)|=" + fmt(rep.max_left_value) + " (==0), |(Hv)'(1)|=" +
               fmt(rep.max_right_slope) + " (<=1e-6)";
    return r;
}

// Random net and target; returns max |analytic - central difference|.
inline double gradient_case_deviation(std::uint64_t seed, std::size_t max_width = 32, std::size_t nodes = 8001) {
    CounterRng rng(seed, streams::theory);
    const auto m = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_width));
    const bool train_signs = rng.sign() > 0.0;
    auto net = network::init(std::min(m, max_width), seed, train_signs).net;
    if (train_signs)
        for (double& a : net.signs) a *= rng.uniform(0.2, 2.0);
    const auto kind = static_cast<std::size_t>(rng.uniform() * 4.0);
    GridFunction g(nodes);
    if (kind < 3) {
        const harness::TargetSpec t{static_cast<harness::TargetKind>(kind)};
        g = GridFunction::sample(nodes, t);
    } else {
        g = GridFunction::sample(nodes, random_trig(rng));
    }
    const auto grad = network::loss_gradient(net, g);
    const double eps = 1e-6;
    double worst = 0.0;
    for (std::size_t r = 0; r < net.width(); ++r) {
        auto plus = net, minus = net;
        plus.biases[r] += eps;
        minus.biases[r] -= eps;
        const double fd = (network::l2_loss(plus, g) - network::l2_loss(minus, g)) / (2.0 * eps);
        worst = std::max(worst, std::abs(fd - grad.biases[r]));
        if (train_signs) {
            plus = net;
            minus = net;
            plus.signs[r] += eps;
            minus.signs[r] -= eps;
            const double fda = (network::l2_loss(plus, g) - network::l2_loss(minus, g)) / (2.0 * eps);
            worst = std::max(worst, std::abs(fda - grad.signs[r]));
        }
    }
    return worst;
}

inline CheckResult gradient_check(std::size_t cases = 100, std::uint64_t seed = 3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) worst = std::max(worst, gradient_case_deviation(derive_seed(seed, i)));
    return {"gradient exactness", worst <= 1e-5,
            std::to_string(cases) + " cases, m<=32: max|grad - central FD|=" + fmt(worst) + " (<=1e-5)"};
}

struct FlowScenario {
    harness::TargetKind target;
    std::size_t m;
    std::uint64_t seed;
    double horizon;
};

inline std::vector<FlowScenario> default_flow_scenarios() {
    return {{harness::TargetKind::gaussian, 200, 1, 3.0},
            {harness::TargetKind::cusp, 64, 2, 2.0},
            {harness::TargetKind::step, 32, 3, 2.0},
            {harness::TargetKind::gaussian, 1, 4, 1.0}};
}

struct FlowCheck {
    bool weight_distance = true;
    bool descent = true;
    bool increasing_time = true;
    double min_margin = 0.0;  // min over records of rhs - lhs
    std::vector<training::Trajectory> trajectories;
};

inline FlowCheck flow_runs(const std::vector<FlowScenario>& scenarios) {
    FlowCheck out;
    out.min_margin = std::numeric_limits<double>::infinity();
    for (const auto& sc : scenarios) {
        const harness::TargetSpec t{sc.target};
        const auto net = network::init(sc.m, sc.seed).net;
        const auto g = GridFunction::sample(spectral::default_nodes(sc.m), t);
        training::FlowConfig cfg;
        cfg.horizon = sc.horizon;
        cfg.record_every = 50;
        auto traj = training::gradient_flow(net, g, cfg);
        traj.run_id = harness::to_string(sc.target) + "_m" + std::to_string(sc.m) + "_s" + std::to_string(sc.seed) + "_flow";
        for (const auto& row : training::weight_distance_check(traj)) {
            out.min_margin = std::min(out.min_margin, row.rhs - row.lhs);
            if (!row.pass) out.weight_distance = false;
        }
        for (std::size_t i = 1; i < traj.records.size(); ++i) {
            if (traj.records[i].loss > traj.records[i - 1].loss + 1e-8) out.descent = false;
            if (!(traj.records[i].t > traj.records[i - 1].t)) out.increasing_time = false;
        }
        if (traj.aborted) out.descent = false;
        out.trajectories.push_back(std::move(traj));
    }
    return out;
}

inline CheckResult weight_distance_check(const FlowCheck& f) {
    return {"weight-distance inequality", f.weight_distance && f.descent && f.increasing_time,
            std::to_string(f.trajectories.size()) +
                " flow runs: ||theta(t)-theta(0)||_inf <= sqrt(2/m) int||kappa||_0 + 10 dt max|grad| at every record"
                " (min margin " + fmt(f.min_margin) + "), descent " + (f.descent ? "ok" : "VIOLATED") +
                ", time stamps " + (f.increasing_time ? "increasing" : "NOT increasing")};
}

struct ConcentrationCheck {
    std::vector<ntk::ConcentrationReport> reports;  // grouped by s
    std::vector<double> slopes;
    bool pass = true;
    std::string detail;
};

inline ConcentrationCheck concentration_check(const std::vector<std::size_t>& widths, std::size_t trials,
                                              std::size_t truncation, const std::vector<double>& smoothness,
                                              double tau, std::uint64_t seed) {
    ConcentrationCheck out;
    std::ostringstream d;
    const std::vector<double> taus{tau};
    for (double s : smoothness) {
        auto reps = ntk::concentration_experiment(widths, trials, truncation, s, taus, seed);
        const double slope = ntk::concentration_slope(reps);
        out.slopes.push_back(slope);
        const bool slope_ok = slope >= -0.65 && slope <= -0.35;
        bool tail_ok = true;
        double worst = 0.0;
        for (const auto& r : reps) {
            const auto& t = r.taus.front();
            const double limit = t.bound + 3.0 * ntk::binomial_standard_error(t.bound, r.trials);
            worst = std::max(worst, t.frequency);
            if (t.frequency > limit) tail_ok = false;
        }
        out.pass = out.pass && slope_ok && tail_ok;
        d << "s=" << s << ": slope " << fmt(slope) << " in [-0.65,-0.35] " << (slope_ok ? "ok" : "FAIL")
          << ", max exceedance " << fmt(worst) << " <= " << fmt(ntk::bernstein_tail(tau)) << "+3se "
          << (tail_ok ? "ok" : "FAIL") << "; ";
        out.reports.insert(out.reports.end(), reps.begin(), reps.end());
    }
    out.detail = d.str();
    return out;
}

struct PerturbationCheck {
    ntk::PerturbationScaling scaling;
    bool pass = false;
    std::string detail;
};

inline PerturbationCheck perturbation_check(std::size_t m, const std::vector<double>& radii, double s,
                                            std::size_t restarts, std::uint64_t seed,
                                            std::size_t truncation = 4096) {
    PerturbationCheck out;
    out.scaling = ntk::perturbation_scaling(m, radii, s, restarts, seed, truncation);
    const auto& sc = out.scaling;
    const bool exponent_ok = sc.exponent >= (1.0 - s) - 0.15;
    const bool stable = sc.min_ratio >= 0.5 && sc.max_ratio <= 1.5;
    bool capped = true;
    for (const auto& r : sc.reports) capped = capped && r.estimate <= r.triangle_cap;
    out.pass = exponent_ok && stable && capped;
    out.detail = "m=" + std::to_string(m) + ", s=" + fmt(s) + ": fitted exponent " + fmt(sc.exponent) +
                 " >= " + fmt(1.0 - s - 0.15) + (exponent_ok ? " ok" : " FAIL") + ", C=" + fmt(sc.constant) +
                 " with estimate/(C sqrt(m) h^(1-s)) in [" + fmt(sc.min_ratio) + ", " + fmt(sc.max_ratio) +
                 "] (within +-50% " + (stable ? "ok" : "FAIL") + ")" + (capped ? "" : ", triangle cap VIOLATED");
    return out;
}

inline CheckResult rank_one_check(const ntk::RankOneBench& b) {
    const double limit = b.bound + 3.0 * b.standard_error;
    return {"rank-one Bernstein bench", b.frequency <= limit,
            "n=" + std::to_string(b.n) + ", dim=" + std::to_string(b.dim) + ", " + std::to_string(b.trials) +
                " trials: exceedance " + fmt(b.frequency) + " of threshold " + fmt(b.threshold) + " <= " +
                fmt(b.bound) + " + 3se = " + fmt(limit)};
}

// ---------------------------------------------------------------------------
// Lemma oracles

inline CheckResult min_int_check(std::size_t draws = 100, std::uint64_t seed = 5) {
    CounterRng rng(seed, streams::theory);
    double worst = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double alpha = rng.uniform(-3.0, -1.02);
        const double p = rng.uniform(0.02, 2.0);  // alpha + beta + 1
        const double x = std::exp(rng.uniform(-3.0, 3.0));
        const double beta = p - 1.0 - alpha;
        const double closed = theory::min_int(alpha, beta, x);
        const double oracle = theory::min_int_oracle(alpha, beta, x).value;
        worst = std::max(worst, std::abs(closed - oracle) / std::abs(oracle));
    }
    return {"min_int closed form vs quadrature", worst <= 1e-6,
            std::to_string(draws) + " triples: max rel err " + fmt(worst) + " (<=1e-6)"};
}

// Informational: the printed constant against the oracle at alpha=-1.25, beta=0.5, x=1.
inline CheckResult min_int_printed_report() {
    const double oracle = theory::min_int_oracle(-1.25, 0.5, 1.0).value;
    const double printed = theory::min_int_printed(-1.25, 0.5, 1.0);
    const bool agrees = std::abs(printed - oracle) <= 1e-6 * std::abs(oracle);
    return {"min_int printed constant (logged)", !agrees,
            "alpha=-1.25, beta=0.5, x=1: oracle " + fmt(oracle) + " vs printed " + fmt(printed) +
                (agrees ? " (unexpected agreement)" : " (printed constant fails, corrected constant used)")};
}

inline CheckResult min_sum_check(std::size_t draws = 100, std::uint64_t seed = 6) {
    CounterRng rng(seed, streams::theory);
    double ratio = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (std::size_t i = 0; i < draws; ++i) {
        const double alpha = rng.uniform(-1.4999, -0.5001);
        const double x = std::exp(rng.uniform(-6.0, 3.0));
        const auto r = theory::min_sum_bound(alpha, x);
        pass = pass && r.pass;
        ratio = std::min(ratio, r.envelope / r.direct_sum);
    }
    return {"min_sum direct sum <= envelope", pass,
            std::to_string(draws) + " draws: min envelope/direct " + fmt(ratio) + " (>=1)"};
}

inline CheckResult interpolation_check(std::size_t draws = 1000, std::uint64_t seed = 7) {
    CounterRng rng(seed, streams::theory);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < draws; ++i) {
        const auto k = 1 + static_cast<std::size_t>(rng.uniform() * 40.0);
        spectral::SpectralFunction v(k);
        for (std::size_t j = 0; j < k; ++j) v[j] = rng.uniform(-1.0, 1.0);
        double e[3] = {rng.uniform(-1.0, 3.0), rng.uniform(-1.0, 3.0), rng.uniform(-1.0, 3.0)};
        std::sort(e, e + 3);
        worst = std::min(worst, theory::interpolation_gap(v, e[0], e[1], e[2]));
    }
    double single = 0.0;
    for (std::size_t k = 0; k < 20; ++k) {
        const auto v = spectral::SpectralFunction::unit(k, 20);
        single = std::max(single, std::abs(theory::interpolation_gap(v, 0.0, 0.7, 2.0)));
    }
    // Relative rounding in the powers is ~1e-16 of the norms involved.
    return {"interpolation inequality", worst >= -1e-12 && single <= 1e-12,
            std::to_string(draws) + " vectors: min gap " + fmt(worst) + " (>=0), single-mode |gap| " + fmt(single) +
                " (<=1e-12)"};
}

inline CheckResult ode_check(std::size_t draws = 100, std::uint64_t seed = 8) {
    CounterRng rng(seed, streams::theory);
    std::size_t tried = 0, empty = 0, passed = 0;
    double margin = std::numeric_limits<double>::infinity();
    while (tried < draws) {
        theory::OdeParams p;
        p.a = std::exp(rng.uniform(-1.0, 3.0));
        p.b = std::exp(rng.uniform(-2.0, 1.0));
        p.c = std::exp(rng.uniform(-3.0, 0.0));
        p.rho = std::exp(rng.uniform(-1.0, 1.5));
        p.x0 = std::exp(rng.uniform(0.0, 3.0));
        p.y0 = std::exp(rng.uniform(-2.0, 1.0));
        const auto head = theory::ode_bound(p, 0.0);
        if (head.empty_window) {
            ++empty;
            continue;
        }
        ++tried;
        const auto c = theory::ode_check(p, std::min(1e-3, head.window / 2000.0));
        if (c.pass) ++passed;
        margin = std::min({margin, c.min_x_margin, c.min_y_margin});
    }
    return {"ODE bound vs rk4 oracle", passed == tried,
            std::to_string(passed) + "/" + std::to_string(tried) + " draws dominated on the window (min margin " +
                fmt(margin) + ", " + std::to_string(empty) + " draws with empty window redrawn)"};
}

inline CheckResult exponents_check() {
    const auto e = theory::approximation_exponents(0.5);
    const bool pass = std::abs(e.error_exponent - 1.0 / 24.0) <= 1e-15 && std::abs(e.weight_exponent - 1.0 / 3.0) <= 1e-15;
    return {"approximation exponents", pass,
            "s=1/2: error exponent " + fmt(e.error_exponent) + " (1/24), weight exponent " + fmt(e.weight_exponent) +
                " (1/3)"};
}

inline CheckResult bound_consistency_check(std::size_t draws = 200, std::uint64_t seed = 9) {
    CounterRng rng(seed, streams::theory);
    double worst = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < draws; ++i) {
        theory::BoundInputs in;
        in.s = rng.uniform(0.01, 0.49);
        in.m = std::exp(rng.uniform(0.0, 12.0));
        in.kappa0_norm_0 = rng.uniform(0.01, 3.0);
        in.kappa0_norm_s = in.kappa0_norm_0 * rng.uniform(1.0, 4.0);
        in.t = rng.uniform(0.0, 50.0);
        const auto a = theory::abstract_bound([&] { auto c = in; c.alpha = 1.0 - in.s; return c; }());
        const auto b = theory::theorem_bound_1d(in);
        worst = std::max({worst, std::abs(a.h - b.h) / b.h, std::abs(a.tau - b.tau) / b.tau,
                          std::abs(a.bound - b.bound) / b.bound});
        double prev = std::numeric_limits<double>::infinity();
        for (double t = 0.0; t <= 100.0; t += 5.0) {
            auto c = in;
            c.t = t;
            const double v = theory::theorem_bound_1d(c).bound;
            if (v > prev) monotone = false;
            prev = v;
        }
    }
    return {"bound evaluators", worst <= 1e-12 && monotone,
            "abstract(alpha=1-s) vs 1d bound max rel diff " + fmt(worst) + " (<=1e-12), non-increasing in t " +
                (monotone ? "ok" : "FAIL")};
}

}  // namespace ntklab::checks

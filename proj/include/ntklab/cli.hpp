#pragma once

// Command line front end: spectrum, train, sweep, ntk-check, theory-check,
// report and replay. Everything lives here so tests can drive run_cli
// in-process; tools/ntklab.cpp only forwards main().

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ntklab/checks.hpp"
#include "ntklab/harness.hpp"
#include "ntklab/io.hpp"
#include "ntklab/ntk_analysis.hpp"
#include "ntklab/report.hpp"
#include "ntklab/spectral.hpp"
#include "ntklab/theory_bounds.hpp"
#include "ntklab/training.hpp"

namespace ntklab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* version = "0.1.0";

struct Config {
    std::vector<std::string> targets{"gaussian"};
    harness::SweepConfig sweep;
    std::string output_dir = "ntklab_out";
};

inline Config preset(const std::string& name) {
    Config c;
    if (name == "ci") {
        c.targets = {"gaussian", "cusp", "step"};
        c.sweep.widths = {18, 32, 56, 100, 178};
        c.sweep.seeds = 5;
    } else if (name == "paper") {
        c.targets = {"gaussian", "cusp", "step"};
        c.sweep.widths = {18, 32, 56, 100, 178, 316, 562, 1000};
        c.sweep.seeds = 100;
    } else if (name == "default") {
        c.targets = {"gaussian", "cusp", "step"};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected ci, default or paper)");
    }
    return c;
}

inline json config_to_json(const Config& c) {
    const auto& s = c.sweep;
    const auto& f = s.flow;
    const auto& a = s.adam;
    return json{
        {"target", c.targets},
        {"widths", s.widths},
        {"seeds", {{"count", s.seeds}, {"base", s.base_seed}}},
        {"optimizer", {{"kind", harness::to_string(s.optimizer)}, {"train_signs", s.train_signs}}},
        {"flow",
         {{"dt", f.dt},
          {"horizon", f.horizon},
          {"integrator", training::to_string(f.integrator)},
          {"record_every", f.record_every},
          {"s", f.s},
          {"truncation", f.truncation}}},
        {"adam",
         {{"rate", a.rate},
          {"decay", a.decay},
          {"decay_period", a.decay_period},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"epsilon", a.epsilon},
          {"iterations", a.iterations},
          {"sample_count", a.sample_count},
          {"resample", a.resample},
          {"record_every", a.record_every},
          {"grid_nodes", a.grid_nodes},
          {"s", a.s},
          {"truncation", a.truncation},
          {"convergence_window", a.convergence_window},
          {"convergence_tolerance", a.convergence_tolerance}}},
        {"output", {{"dir", c.output_dir}, {"workers", s.workers}}},
    };
}

namespace detail {

inline void require_known(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw std::invalid_argument("config: unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

// Reads a config document (or a manifest, whose "config" member is used)
// on top of base. Unknown keys are rejected.
inline Config config_from_json(const json& doc, Config base = {}) {
    const json& j = doc.contains("config") && doc.contains("command") ? doc.at("config") : doc;
    detail::require_known(j, "", {"target", "widths", "seeds", "optimizer", "flow", "adam", "output"});
    Config c = std::move(base);
    try {
        if (j.contains("target")) {
            const auto& t = j.at("target");
            c.targets = t.is_array() ? t.get<std::vector<std::string>>() : std::vector<std::string>{t.get<std::string>()};
            for (const auto& name : c.targets) harness::target_from_string(name);
        }
        detail::read(j, "widths", c.sweep.widths);
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            if (s.is_number_integer()) {
                c.sweep.seeds = s.get<std::size_t>();
            } else {
                detail::require_known(s, "seeds", {"count", "base"});
                detail::read(s, "count", c.sweep.seeds);
                detail::read(s, "base", c.sweep.base_seed);
            }
        }
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            detail::require_known(o, "optimizer", {"kind", "train_signs"});
            if (o.contains("kind")) c.sweep.optimizer = harness::optimizer_from_string(o.at("kind").get<std::string>());
            detail::read(o, "train_signs", c.sweep.train_signs);
        }
        if (j.contains("flow")) {
            const auto& f = j.at("flow");
            detail::require_known(f, "flow", {"dt", "horizon", "integrator", "record_every", "s", "truncation"});
            auto& fc = c.sweep.flow;
            detail::read(f, "dt", fc.dt);
            detail::read(f, "horizon", fc.horizon);
            if (f.contains("integrator")) fc.integrator = training::integrator_from_string(f.at("integrator").get<std::string>());
            detail::read(f, "record_every", fc.record_every);
            detail::read(f, "s", fc.s);
            detail::read(f, "truncation", fc.truncation);
        }
        if (j.contains("adam")) {
            const auto& a = j.at("adam");
            detail::require_known(a, "adam",
                                  {"rate", "decay", "decay_period", "beta1", "beta2", "epsilon", "iterations",
                                   "sample_count", "resample", "record_every", "grid_nodes", "s", "truncation",
                                   "convergence_window", "convergence_tolerance"});
            auto& ac = c.sweep.adam;
            detail::read(a, "rate", ac.rate);
            detail::read(a, "decay", ac.decay);
            detail::read(a, "decay_period", ac.decay_period);
            detail::read(a, "beta1", ac.beta1);
            detail::read(a, "beta2", ac.beta2);
            detail::read(a, "epsilon", ac.epsilon);
            detail::read(a, "iterations", ac.iterations);
            detail::read(a, "sample_count", ac.sample_count);
            detail::read(a, "resample", ac.resample);
            detail::read(a, "record_every", ac.record_every);
            detail::read(a, "grid_nodes", ac.grid_nodes);
            detail::read(a, "s", ac.s);
            detail::read(a, "truncation", ac.truncation);
            detail::read(a, "convergence_window", ac.convergence_window);
            detail::read(a, "convergence_tolerance", ac.convergence_tolerance);
        }
        if (j.contains("output")) {
            const auto& o = j.at("output");
            detail::require_known(o, "output", {"dir", "workers"});
            detail::read(o, "dir", c.output_dir);
            detail::read(o, "workers", c.sweep.workers);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.sweep.validate();
    return c;
}

inline Config load_config(const fs::path& path, Config base = {}) {
    json doc;
    try {
        doc = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return config_from_json(doc, std::move(base));
}

// --out flag, then NTKLAB_OUT, then the config's output.dir.
inline std::string resolve_output(const std::string& flag, const Config& c) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("NTKLAB_OUT"); env && *env) return env;
    return c.output_dir;
}

inline json manifest(const std::string& command, const Config& c) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < c.sweep.seeds; ++i) seeds.push_back(c.sweep.base_seed + i);
    return json{{"command", command},
                {"config", config_to_json(c)},
                {"seeds", seeds},
                {"version", version},
                {"compiler", __VERSION__},
                {"cxx_standard", __cplusplus}};
}

struct SweepOutputs {
    std::vector<harness::RunRecord> records;
    std::vector<training::Trajectory> trajectories;
    std::vector<harness::RateRow> rates;
};

// Runs every target of the config and writes runs.csv, timings.csv,
// traj/, ckpt/, rates.csv (when at least two widths) and manifest.json.
inline SweepOutputs execute(const std::string& command, const Config& c, const fs::path& out_dir, std::ostream& log) {
    SweepOutputs res;
    for (const auto& name : c.targets) {
        auto part = harness::width_sweep(harness::target_from_string(name), c.sweep);
        for (std::size_t i = 0; i < part.records.size(); ++i) {
            const auto& r = part.records[i];
            log << r.run_id << ": l2 " << checks::fmt(r.final_l2_error) << ", wdist " << checks::fmt(r.final_wdist_inf)
                << ", steps " << r.steps << ", " << r.status << '\n';
            res.records.push_back(std::move(part.records[i]));
            res.trajectories.push_back(std::move(part.trajectories[i]));
        }
    }
    io::write_text(out_dir / "runs.csv", io::runs_csv(res.records));
    io::write_text(out_dir / "timings.csv", io::timings_csv(res.records));
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const auto& r = res.records[i];
        if (!res.trajectories[i].records.empty())
            io::write_text(out_dir / "traj" / (r.run_id + ".csv"), io::trajectory_csv(res.trajectories[i]));
        if (r.final_net.width() > 0)
            io::write_text(out_dir / "ckpt" / (r.run_id + ".csv"), io::checkpoint_csv(r.final_net, r.seed));
    }
    if (c.sweep.widths.size() >= 2) {
        res.rates = harness::estimate_rates(res.records);
        const auto w = harness::weight_distance_rates(res.records);
        res.rates.insert(res.rates.end(), w.begin(), w.end());
        io::write_text(out_dir / "rates.csv", io::rates_csv(res.rates));
    }
    io::write_text(out_dir / "manifest.json", manifest(command, c).dump(2) + "\n");
    return res;
}

inline void print_check(std::ostream& out, const checks::CheckResult& r) {
    out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": " << r.detail << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_spectrum(std::size_t modes, std::size_t nodes, const fs::path& out_dir, std::ostream& out) {
    const auto rep = checks::eigen_report(modes, nodes);
    io::CsvWriter csv({"k", "omega_k", "phase_k", "lambda_oracle", "lambda_paper_stated"});
    for (std::size_t k = 0; k < modes; ++k)
        csv.row({io::num(k), io::num(spectral::eigen_frequency(k)), io::num(spectral::eigen_phase(k)),
                 io::num(rep.rayleigh[k]), io::num(spectral::stated_eigenvalue(k))});
    io::write_text(out_dir / "eigen.csv", csv.str());
    const auto eig = checks::eigen_system_check(modes, nodes);
    const auto bvp = checks::bvp_check(20, nodes);
    print_check(out, eig);
    print_check(out, bvp);
    out << "INFO  boundary conditions: max(|phi_k(-1)|, |phi_k'(1)|) = " << checks::fmt(rep.boundary_error) << '\n';
    out << "wrote " << (out_dir / "eigen.csv").string() << '\n';
    return eig.pass && bvp.pass ? 0 : 1;
}

struct NtkCheckOptions {
    bool quick = false;
    std::uint64_t seed = 1;
};

inline int cmd_ntk_check(const NtkCheckOptions& opt, const fs::path& out_dir, std::ostream& out) {
    const std::vector<std::size_t> widths = opt.quick ? std::vector<std::size_t>{50, 100, 200, 400}
                                                      : std::vector<std::size_t>{100, 400, 1600, 6400};
    const std::size_t trials = opt.quick ? 20 : 50;
    const double tau = 8.0;
    bool ok = true;

    const auto conc = checks::concentration_check(widths, trials, 64, {0.0, 0.25}, tau, opt.seed);
    for (double s : {0.0, 0.25}) {
        io::CsvWriter csv({"m", "trial", "norm_0s", "threshold_tau", "bound_tau"});
        for (const auto& r : conc.reports) {
            if (r.s != s) continue;
            for (std::size_t i = 0; i < r.norms.size(); ++i)
                csv.row({io::num(r.width), io::num(i), io::num(r.norms[i]), io::num(r.taus[0].threshold),
                         io::num(r.taus[0].bound)});
        }
        io::write_text(out_dir / ("concentration_s" + io::num(s) + "_tau" + io::num(tau) + ".csv"), csv.str());
    }
    print_check(out, {"NTK concentration", conc.pass, conc.detail});
    ok = ok && conc.pass;

    const std::vector<double> radii{0.002, 0.005, 0.01, 0.02, 0.05};
    const auto pert = checks::perturbation_check(1000, radii, 0.25, opt.quick ? 10 : 50, opt.seed,
                                                 opt.quick ? 1024 : 4096);
    io::CsvWriter pcsv({"m", "h", "s", "estimate", "envelope", "restarts"});
    for (const auto& r : pert.scaling.reports)
        pcsv.row({io::num(r.width), io::num(r.h), io::num(r.s), io::num(r.estimate), io::num(r.envelope),
                  io::num(r.restarts)});
    io::write_text(out_dir / "perturbation.csv", pcsv.str());
    print_check(out, {"perturbation scaling", pert.pass, pert.detail});
    ok = ok && pert.pass;

    const auto bench = ntk::rank_one_bernstein_bench(10000, 1.0, 1.0, 16, opt.quick ? 200 : 2000, 6.0, opt.seed);
    io::CsvWriter bcsv({"trial", "deviation", "threshold", "bound"});
    for (std::size_t i = 0; i < bench.deviations.size(); ++i)
        bcsv.row({io::num(i), io::num(bench.deviations[i]), io::num(bench.threshold), io::num(bench.bound)});
    io::write_text(out_dir / "rank_one.csv", bcsv.str());
    const auto bres = checks::rank_one_check(bench);
    print_check(out, bres);
    ok = ok && bres.pass;

    // Partition overlap: m = 10^4, h = tau = 0.01; the fraction in an extended
    // cell has mean 2h and the check uses 2h + tau.
    const std::size_t m = 10000, seeds = opt.quick ? 20 : 100;
    const double h = 0.01;
    io::CsvWriter ocsv({"seed", "max_fraction", "limit"});
    std::size_t within = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
        const auto net = network::init(m, derive_seed(opt.seed, i)).net;
        const double frac = ntk::partition_overlap_max(net.biases, h);
        if (frac <= 3.0 * h) ++within;
        ocsv.row({io::num(i), io::num(frac), io::num(3.0 * h)});
    }
    io::write_text(out_dir / "partition.csv", ocsv.str());
    const double freq = static_cast<double>(within) / static_cast<double>(seeds);
    const double hoeff = ntk::hoeffding_overlap_frequency(m, h, h);
    const bool part_ok = freq >= hoeff;
    print_check(out, {"partition overlap", part_ok,
                      "m=10^4, h=0.01: max fraction <= 2h+tau in " + checks::fmt(freq) + " of " +
                          std::to_string(seeds) + " seeds (Hoeffding union bound " + checks::fmt(hoeff) + ")"});
    ok = ok && part_ok;
    out << "wrote " << out_dir.string() << "/{concentration_*,perturbation,rank_one,partition}.csv\n";
    return ok ? 0 : 1;
}

inline int cmd_theory_check(const fs::path& out_dir, std::ostream& out) {
    std::vector<checks::CheckResult> results{checks::min_int_check(), checks::min_sum_check(),
                                             checks::interpolation_check(), checks::ode_check(),
                                             checks::exponents_check(), checks::bound_consistency_check()};
    // Tail probability: tends to one and increases beyond its dip.
    {
        theory::BoundInputs in;
        in.s = 0.25;
        double prev = -1.0;
        bool monotone = true;
        for (double m = 20.0; m <= 1e5; m *= 1.5) {
            in.m = m;
            const double p = theory::tail_probability_1d(in);
            if (p < prev - 1e-15) monotone = false;
            prev = p;
        }
        in.m = 1.0;
        const double small = theory::tail_probability_1d(in, 1.0, 100.0);
        results.push_back({"tail probability", monotone && prev > 0.999999 && small == 0.0,
                           "non-decreasing for m>=20, value at m=1e5 " + checks::fmt(prev) +
                               ", clipped to " + checks::fmt(small) + " for large Gamma"});
    }
    bool ok = true;
    for (const auto& r : results) {
        print_check(out, r);
        ok = ok && r.pass;
    }
    const auto printed = checks::min_int_printed_report();
    out << "INFO  " << printed.name << ": " << printed.detail << '\n';

    // Bound against a measured flow: gaussian, m = 100, unit constants.
    const std::size_t m = 100;
    const auto net = network::init(m, 1).net;
    const auto g = spectral::GridFunction::sample(spectral::default_nodes(m), harness::TargetSpec{});
    training::FlowConfig fc;
    fc.horizon = 2.0;
    fc.record_every = 100;
    const auto traj = training::gradient_flow(net, g, fc);
    theory::BoundInputs in;
    in.s = fc.s;
    in.m = static_cast<double>(m);
    in.kappa0_norm_0 = traj.records.front().l2_err;
    in.kappa0_norm_s = std::max(traj.records.front().s_norm, in.kappa0_norm_0);
    io::CsvWriter csv({"scenario_id", "t", "measured_loss_sq", "bound_value", "window_flag"});
    for (const auto& rec : traj.records) {
        in.t = rec.t;
        const auto b = theory::theorem_bound_1d(in);
        csv.row({"gaussian_m100_flow", io::num(rec.t), io::num(rec.l2_err * rec.l2_err), io::num(b.bound),
                 rec.wdist_inf <= b.h ? "1" : "0"});
    }
    io::write_text(out_dir / "bounds.csv", csv.str());
    out << "wrote " << (out_dir / "bounds.csv").string() << '\n';
    return ok ? 0 : 1;
}

inline int cmd_report(const fs::path& in_dir, const fs::path& out_dir, std::size_t bins, std::ostream& out,
                      std::ostream& err) {
    auto records = io::parse_runs(io::read_text(in_dir / "runs.csv"));
    std::vector<training::Trajectory> trajectories;
    for (auto& r : records) {
        const auto tp = in_dir / "traj" / (r.run_id + ".csv");
        if (fs::exists(tp)) {
            auto t = io::parse_trajectory(io::read_text(tp));
            t.width = r.m;
            trajectories.push_back(std::move(t));
        }
        const auto cp = in_dir / "ckpt" / (r.run_id + ".csv");
        if (fs::exists(cp)) r.final_net = io::parse_checkpoint(io::read_text(cp)).net;
    }
    const auto summary = report::render_report(records, trajectories, out_dir, bins);
    for (const auto& w : summary.warnings) err << "warning: " << w << '\n';
    for (const auto& f : summary.files) out << "wrote " << (out_dir / f).string() << '\n';
    return 0;
}

inline void print_rates(std::ostream& out, const std::vector<harness::RateRow>& rates) {
    for (const auto& r : rates)
        out << r.rate_kind << ' ' << r.target << " m=" << r.m << ": "
            << (r.defined ? checks::fmt(r.rate) : std::string("undefined")) << '\n';
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"ntklab: shallow ReLU networks in the NTK regime"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    std::string out_flag;

    auto* spectrum = app.add_subcommand("spectrum", "eigen-system report and eigen-relation checks");
    std::size_t modes = 33, nodes = 20001;
    spectrum->add_option("--modes", modes, "number of modes (k < modes)")->check(CLI::Range(1, 100000));
    spectrum->add_option("--nodes", nodes, "odd quadrature node count")->check(CLI::Range(3, 100000001));
    spectrum->add_option("--out", out_flag, "output directory");

    // train and sweep share the run options.
    std::string config_path, target = "gaussian", optimizer = "adam", preset_name, integrator;
    std::size_t width = 100, seeds = 0, workers = 0, iterations = 0, record_every = 0;
    std::uint64_t seed = 0;
    double horizon = 0.0, dt = 0.0, rate = 0.0;
    bool train_signs = false, paper_scale = false;

    auto* train = app.add_subcommand("train", "single training run");
    train->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    train->add_option("--target", target, "gaussian, cusp or step")->check(CLI::IsMember({"gaussian", "cusp", "step"}));
    train->add_option("--m", width, "network width")->check(CLI::PositiveNumber);
    train->add_option("--seed", seed, "initialization seed");
    train->add_option("--optimizer", optimizer, "flow or adam")->check(CLI::IsMember({"flow", "adam"}));
    train->add_flag("--train-signs", train_signs, "also train the output weights a_r");
    train->add_option("--horizon", horizon, "flow horizon T");
    train->add_option("--dt", dt, "flow step (default 0.01/sqrt(m))");
    train->add_option("--integrator", integrator, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}));
    train->add_option("--iterations", iterations, "Adam iteration cap");
    train->add_option("--rate", rate, "Adam learning rate");
    train->add_option("--record-every", record_every, "record interval in steps");
    train->add_option("--out", out_flag, "output directory");

    auto* sweep = app.add_subcommand("sweep", "width sweep with rate tables");
    sweep->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sweep->add_option("--preset", preset_name, "ci, default or paper")->check(CLI::IsMember({"ci", "default", "paper"}));
    sweep->add_flag("--paper-scale", paper_scale, "widths to 1000 with 100 seeds");
    sweep->add_option("--seeds", seeds, "seeds per width");
    sweep->add_option("--workers", workers, "concurrent runs");
    sweep->add_option("--out", out_flag, "output directory");

    auto* ntkc = app.add_subcommand("ntk-check", "concentration, perturbation and Bernstein experiments");
    NtkCheckOptions ntk_opt;
    ntkc->add_flag("--quick", ntk_opt.quick, "reduced sizes (smoke run)");
    ntkc->add_option("--seed", ntk_opt.seed, "experiment seed");
    ntkc->add_option("--out", out_flag, "output directory");

    auto* theory = app.add_subcommand("theory-check", "lemma evaluators against their oracles");
    theory->add_option("--out", out_flag, "output directory");

    auto* rep = app.add_subcommand("report", "render SVG and CSV figures from a run directory");
    std::string in_dir;
    std::size_t bins = 20;
    rep->add_option("--in", in_dir, "run directory with runs.csv")->required();
    rep->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
    rep->add_option("--out", out_flag, "output directory (default <in>/report)");

    auto* replay = app.add_subcommand("replay", "re-run a train or sweep manifest");
    std::string manifest_path;
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", out_flag, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*spectrum) {
            if (nodes % 2 == 0) throw std::invalid_argument("--nodes must be odd");
            return cmd_spectrum(modes, nodes, resolve_output(out_flag, Config{}), out);
        }
        if (*train || *sweep) {
            Config c;
            if (*sweep) {
                if (!preset_name.empty()) c = preset(preset_name);
                if (paper_scale) c = preset("paper");
            }
            if (!config_path.empty()) c = load_config(config_path, c);
            if (*train) {
                if (config_path.empty() || train->count("--target")) c.targets = {target};
                if (config_path.empty() || train->count("--m")) c.sweep.widths = {width};
                if (config_path.empty() || train->count("--optimizer"))
                    c.sweep.optimizer = harness::optimizer_from_string(optimizer);
                if (train_signs) c.sweep.train_signs = true;
                c.sweep.seeds = 1;
                c.sweep.base_seed = seed;
                if (horizon > 0.0) c.sweep.flow.horizon = horizon;
                if (dt > 0.0) c.sweep.flow.dt = dt;
                if (!integrator.empty()) c.sweep.flow.integrator = training::integrator_from_string(integrator);
                if (iterations > 0) c.sweep.adam.iterations = iterations;
                if (rate > 0.0) c.sweep.adam.rate = rate;
                if (record_every > 0) c.sweep.flow.record_every = c.sweep.adam.record_every = record_every;
            } else {
                if (seeds > 0) c.sweep.seeds = seeds;
                if (workers > 0) c.sweep.workers = workers;
            }
            c.sweep.validate();
            const fs::path dir = resolve_output(out_flag, c);
            c.output_dir = dir.string();
            const auto res = execute(*train ? "train" : "sweep", c, dir, out);
            print_rates(out, res.rates);
            bool failed = false;
            for (const auto& r : res.records) failed = failed || r.status != "ok";
            out << "wrote " << dir.string() << "/{runs.csv,rates.csv,traj/,ckpt/,manifest.json}\n";
            return failed ? 1 : 0;
        }
        if (*ntkc) return cmd_ntk_check(ntk_opt, resolve_output(out_flag, Config{}), out);
        if (*theory) return cmd_theory_check(resolve_output(out_flag, Config{}), out);
        if (*rep) {
            const fs::path dir = out_flag.empty() ? fs::path(in_dir) / "report" : fs::path(out_flag);
            return cmd_report(in_dir, dir, bins, out, err);
        }
        if (*replay) {
            const json doc = json::parse(io::read_text(manifest_path));
            const auto command = doc.at("command").get<std::string>();
            if (command != "train" && command != "sweep")
                throw std::invalid_argument("replay: unsupported command '" + command + "'");
            const Config c = config_from_json(doc);
            const auto res = execute(command, c, out_flag, out);
            print_rates(out, res.rates);
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    return 0;
}

}  // namespace ntklab::cli

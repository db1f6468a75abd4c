// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ntklab/checks.hpp"
#include "ntklab/cli.hpp"

using namespace ntklab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome from(const std::vector<checks::CheckResult>& parts) {
    Outcome o;
    for (const auto& r : parts) {
        o.pass = o.pass && r.pass;
        o.detail += (o.detail.empty() ? "" : " | ") + std::string(r.pass ? "" : "[FAIL] ") + r.name + ": " + r.detail;
    }
    return o;
}

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
    std::vector<const char*> argv{"ntklab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), log, err);
    log << err.str();
    return code;
}

// Every *.csv under a, relative to a, with its bytes compared against b.
// timings.csv holds wall-clock times and is excluded by design.
Outcome compare_csv_trees(const fs::path& a, const fs::path& b) {
    Outcome o;
    std::size_t files = 0, differ = 0;
    std::string first;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().extension() != ".csv" || e.path().filename() == "timings.csv") continue;
        const auto rel = fs::relative(e.path(), a);
        ++files;
        if (!fs::exists(b / rel) || io::read_text(e.path()) != io::read_text(b / rel)) {
            ++differ;
            if (first.empty()) first = rel.string();
        }
    }
    o.pass = files > 0 && differ == 0;
    o.detail = std::to_string(files) + " CSV files compared byte for byte, " + std::to_string(differ) + " differ" +
               (first.empty() ? "" : " (first: " + first + ")");
    return o;
}

Outcome reproduction(const fs::path& dir, std::ostream& log) {
    const auto c = cli::preset("ci");
    const auto res = cli::execute("sweep", c, dir, log);
    const auto& recs = res.records;
    Outcome o;
    std::ostringstream d;

    bool decreasing = true;
    for (const auto& t : c.targets) {
        d << t << " medians";
        double prev = 0.0;
        for (std::size_t i = 0; i < c.sweep.widths.size(); ++i) {
            const double e = harness::median_of(recs, t, c.sweep.widths[i]);
            d << ' ' << checks::fmt(e);
            if (i > 0 && !(e < prev)) decreasing = false;
            prev = e;
        }
        d << "; ";
    }
    d << "decreasing in m " << (decreasing ? "ok" : "FAIL") << "; ";

    const std::size_t top = c.sweep.widths.back();
    const double g = harness::median_of(recs, "gaussian", top), cu = harness::median_of(recs, "cusp", top),
                 st = harness::median_of(recs, "step", top);
    const bool ordered = g < cu && cu < st;
    d << "m=" << top << " ordering gaussian < cusp < step " << (ordered ? "ok" : "FAIL") << "; ";

    bool step_ok = true;
    d << "step rates";
    for (const auto& r : harness::estimate_rates(recs)) {
        if (r.target != "step") continue;
        d << ' ' << checks::fmt(r.rate);
        if (!(r.defined && r.rate > 0.0 && r.rate < 0.35)) step_ok = false;
    }
    d << " in (0, 0.35) " << (step_ok ? "ok" : "FAIL") << "; ";

    bool wd_ok = true;
    std::string wd_bad;
    for (const auto& r : harness::weight_distance_rates(recs)) {
        if (!(r.defined && r.rate > 0.0 && r.rate < 1.0)) {
            wd_ok = false;
            wd_bad += " " + r.target + "@m=" + std::to_string(r.m) + ":" + checks::fmt(r.rate);
        }
    }
    d << "weight-distance rates in (0, 1) " << (wd_ok ? "ok" : "FAIL, outside:" + wd_bad);

    o.pass = decreasing && ordered && step_ok && wd_ok;
    o.detail = d.str();
    return o;
}

Outcome determinism(const fs::path& sweep_dir, const fs::path& replay_dir, std::ostream& log) {
    if (run_cli({"replay", "--manifest", (sweep_dir / "manifest.json").string(), "--out", replay_dir.string()}, log) != 0)
        return {false, "replay exited non-zero"};
    return compare_csv_trees(sweep_dir, replay_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ntklab acceptance suite"};
    std::string out = "acceptance_out";
    bool verbose = false;
    app.add_option("--out", out, "scratch directory for run artifacts");
    app.add_flag("--verbose", verbose, "echo run logs");
    CLI11_PARSE(app, argc, argv);

    const fs::path root(out);
    fs::remove_all(root);
    fs::create_directories(root);
    std::ostringstream sink;
    std::ostream& log = verbose ? std::cerr : static_cast<std::ostream&>(sink);

    const std::vector<std::size_t> widths{100, 400, 1600, 6400};
    const std::vector<double> radii{0.002, 0.005, 0.01, 0.02, 0.05};

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 eigen-system", [] { return from({checks::eigen_system_check(33, 20001)}); }},
        {"AC2 boundary value problem", [] { return from({checks::bvp_check(20, 20001)}); }},
        {"AC3 gradient exactness", [] { return from({checks::gradient_check(100)}); }},
        {"AC4 weight-distance inequality",
         [] { return from({checks::weight_distance_check(checks::flow_runs(checks::default_flow_scenarios()))}); }},
        {"AC5 NTK concentration",
         [&] {
             const auto c = checks::concentration_check(widths, 50, 64, {0.0, 0.25}, 8.0, 1);
             return Outcome{c.pass, c.detail};
         }},
        {"AC6 perturbation scaling",
         [&] {
             const auto p = checks::perturbation_check(1000, radii, 0.25, 50, 1, 4096);
             return Outcome{p.pass, p.detail};
         }},
        {"AC7 rank-one Bernstein bench",
         [] { return from({checks::rank_one_check(ntk::rank_one_bernstein_bench(10000, 1.0, 1.0, 16, 2000, 6.0, 1))}); }},
        {"AC8 lemma oracles",
         [] {
             return from({checks::min_int_check(100), checks::min_int_printed_report(), checks::min_sum_check(100),
                          checks::interpolation_check(1000), checks::ode_check(100)});
         }},
        {"AC9 exponent identities", [] { return from({checks::exponents_check()}); }},
        {"AC10 width-sweep reproduction", [&] { return reproduction(root / "sweep_ci", log); }},
        {"AC11 replay determinism", [&] { return determinism(root / "sweep_ci", root / "replay_ci", log); }},
    };

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << " (" << checks::fmt(secs) << " s) " << o.detail
                  << std::endl;
        if (!o.pass) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}

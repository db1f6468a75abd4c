#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ntklab/cli.hpp"
#include "ntklab/harness.hpp"
#include "ntklab/io.hpp"
#include "ntklab/report.hpp"

using namespace ntklab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ntklab_test_" + name);
    fs::remove_all(p);
    return p;
}

// Minimal XML well-formedness check: balanced tags, quoted attributes,
// no raw '<' or '&' in text.
bool well_formed_xml(const std::string& s, std::string& why) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    if (s.rfind("<?xml", 0) == 0) i = s.find("?>") + 2;
    bool root_seen = false;
    while (i < s.size()) {
        if (s[i] == '<') {
            const auto close = s.find('>', i);
            if (close == std::string::npos) return why = "unterminated tag", false;
            std::string tag = s.substr(i + 1, close - i - 1);
            if (tag.rfind("!--", 0) == 0) {
                const auto end = s.find("-->", i);
                if (end == std::string::npos) return why = "unterminated comment", false;
                i = end + 3;
                continue;
            }
            if (tag.empty()) return why = "empty tag", false;
            if (tag[0] == '/') {
                if (stack.empty() || stack.back() != tag.substr(1)) return why = "mismatched </" + tag.substr(1) + ">", false;
                stack.pop_back();
            } else {
                const bool self = tag.back() == '/';
                if (self) tag.pop_back();
                const auto name = tag.substr(0, tag.find_first_of(" \t\n"));
                std::size_t quotes = 0;
                for (char c : tag) quotes += c == '"';
                if (quotes % 2) return why = "unbalanced quotes in <" + name + ">", false;
                if (stack.empty() && root_seen) return why = "second root element", false;
                root_seen = true;
                if (!self) stack.push_back(name);
            }
            i = close + 1;
        } else {
            if (s[i] == '&') {
                const auto semi = s.find(';', i);
                const auto ent = s.substr(i, semi - i + 1);
                if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;")
                    return why = "bad entity " + ent, false;
            }
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(s[i]))) return why = "text outside root", false;
            ++i;
        }
    }
    if (!stack.empty()) return why = "unclosed <" + stack.back() + ">", false;
    return root_seen || (why = "no root", false);
}

harness::RunRecord record(const std::string& target, std::size_t m, std::uint64_t seed, double err, double wd) {
    harness::RunRecord r;
    r.target = target;
    r.m = m;
    r.seed = seed;
    r.optimizer = "adam";
    r.run_id = harness::make_run_id(target, m, seed, harness::Optimizer::adam);
    r.final_l2_error = err;
    r.final_wdist_inf = wd;
    return r;
}

int invoke(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
    args.insert(args.begin(), "ntklab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return rc;
}

}  // namespace

TEST(Targets, Examples) {
    using harness::TargetKind;
    EXPECT_NEAR(harness::TargetSpec{TargetKind::gaussian}(0.0), 0.4986779, 1e-7);
    EXPECT_DOUBLE_EQ(harness::TargetSpec{TargetKind::cusp}(0.0), 1.0);
    EXPECT_DOUBLE_EQ(harness::TargetSpec{TargetKind::cusp}(1.0), 0.0);
    EXPECT_DOUBLE_EQ(harness::TargetSpec{TargetKind::step}(0.0), 0.0);
    EXPECT_DOUBLE_EQ(harness::TargetSpec{TargetKind::step}(1e-12), 1.0);
    EXPECT_THROW(harness::target_from_string("sine"), std::invalid_argument);
    EXPECT_EQ(harness::to_string(harness::target_from_string("cusp").kind), "cusp");
}

TEST(SweepConfig, Validation) {
    harness::SweepConfig cfg;
    cfg.widths = {32, 18};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.widths = {};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.widths = {4};
    cfg.seeds = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Sweep, DegenerateSingleRunObeysTriangleInequality) {
    harness::SweepConfig cfg;
    cfg.widths = {1};
    cfg.seeds = 1;
    cfg.adam.iterations = 2000;
    const harness::TargetSpec g{harness::TargetKind::gaussian};
    const auto res = harness::width_sweep(g, cfg);
    ASSERT_EQ(res.records.size(), 1u);
    const auto nodes = spectral::default_nodes(1);
    const double gn = spectral::GridFunction::sample(nodes, g).norm();
    const double fn = network::sample_net(network::init(1, 0).net, nodes).norm();
    EXPECT_LE(res.records[0].final_l2_error, gn + fn);
    EXPECT_EQ(res.records[0].status, "ok");
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
    harness::SweepConfig cfg;
    cfg.widths = {4, 8};
    cfg.seeds = 3;
    cfg.adam.iterations = 1500;
    const harness::TargetSpec g{harness::TargetKind::cusp};
    const auto serial = harness::width_sweep(g, cfg);
    cfg.workers = 3;
    const auto parallel = harness::width_sweep(g, cfg);
    EXPECT_EQ(io::runs_csv(serial.records), io::runs_csv(parallel.records));
}

TEST(Sweep, FlowRunsRecordWeightDistance) {
    harness::SweepConfig cfg;
    cfg.widths = {16};
    cfg.seeds = 1;
    cfg.optimizer = harness::Optimizer::flow;
    cfg.flow.horizon = 0.2;
    const auto res = harness::width_sweep(harness::TargetSpec{}, cfg);
    EXPECT_TRUE(res.records[0].weight_distance_pass);
    EXPECT_EQ(res.records[0].run_id, "gaussian_m16_s0_flow");
}

TEST(Rates, PowerLaws) {
    std::vector<harness::RunRecord> recs;
    for (std::size_t m : {10u, 20u, 40u, 80u}) {
        const double md = static_cast<double>(m);
        recs.push_back(record("step", m, 0, 1.0 / md, std::pow(md, -1.0 / 3.0)));
        recs.push_back(record("cusp", m, 0, 0.3, 0.3));
    }
    for (const auto& r : harness::estimate_rates(recs)) {
        ASSERT_TRUE(r.defined);
        EXPECT_NEAR(r.rate, r.target == "step" ? 1.0 : 0.0, 1e-12);
    }
    for (const auto& r : harness::weight_distance_rates(recs))
        if (r.target == "step") {
            EXPECT_NEAR(r.rate, 1.0 / 3.0, 1e-12);
        }
    EXPECT_EQ(harness::estimate_rates(recs).size(), 6u);
}

TEST(Rates, MediansAndUndefined) {
    std::vector<harness::RunRecord> recs{record("step", 10, 0, 4.0, 1), record("step", 10, 1, 1.0, 1),
                                         record("step", 10, 2, 2.0, 1), record("step", 20, 0, 0.0, 1)};
    const auto rates = harness::estimate_rates(recs);
    ASSERT_EQ(rates.size(), 1u);
    EXPECT_FALSE(rates[0].defined);
    EXPECT_DOUBLE_EQ(harness::median_of(recs, "step", 10), 2.0);
    EXPECT_THROW(harness::estimate_rates({record("step", 10, 0, 1, 1)}), std::invalid_argument);
}

TEST(Histogram, UniformAndPointMass) {
    const auto net = network::init(100000, 3).net;
    const auto h = harness::breakpoint_histogram(net, 20);
    EXPECT_EQ(h.total(), 100000u);
    const double p = 0.05, sd = std::sqrt(100000 * p * (1 - p));
    for (auto c : h.counts) EXPECT_NEAR(static_cast<double>(c), 5000.0, 5 * sd);
    std::vector<double> same(50, 0.5);
    const auto hp = harness::breakpoint_histogram(same, 20);
    EXPECT_EQ(*std::max_element(hp.counts.begin(), hp.counts.end()), 50u);
    const auto out = harness::breakpoint_histogram(std::vector<double>{-2.0, 1.5, 1.0}, 4);
    EXPECT_EQ(out.below, 1u);
    EXPECT_EQ(out.above, 1u);
    EXPECT_EQ(out.counts[3], 1u);
    EXPECT_THROW(harness::breakpoint_histogram(same, 0), std::invalid_argument);
}

TEST(Io, CheckpointRoundTrip) {
    const auto net = network::init(33, 12, true).net;
    const auto text = io::checkpoint_csv(net, 12);
    const auto ck = io::parse_checkpoint(text);
    EXPECT_EQ(ck.net, net);
    EXPECT_EQ(ck.seed, 12u);
    EXPECT_EQ(io::checkpoint_csv(ck.net, ck.seed), text);
    EXPECT_THROW(io::parse_checkpoint("r,a_r,theta_r\n"), std::invalid_argument);
}

TEST(Io, TrajectoryAndRunsRoundTrip) {
    training::Trajectory t;
    t.run_id = "x";
    for (int i = 0; i < 4; ++i) {
        training::TrajectoryRecord r;
        r.t = i * 0.1;
        r.loss = 1.0 / (i + 3);
        r.l2_err = std::sqrt(2 * r.loss);
        r.s_norm = 1.1 * r.l2_err;
        r.wdist_inf = 0.01 * i;
        r.kappa_time_integral = 0.3 * i;
        t.records.push_back(r);
    }
    const auto text = io::trajectory_csv(t);
    EXPECT_EQ(io::trajectory_csv(io::parse_trajectory(text)), text);

    std::vector<harness::RunRecord> recs{record("cusp", 8, 1, 0.123456789012345, 0.5), record("step", 16, 2, 1e-300, 0)};
    const auto runs = io::runs_csv(recs);
    EXPECT_EQ(io::runs_csv(io::parse_runs(runs)), runs);
    EXPECT_THROW(io::parse_runs("a,b\n"), std::invalid_argument);
}

TEST(Io, RatesRoundTrip) {
    std::vector<harness::RateRow> rows(2);
    rows[0] = {32, "step", 0.25, "l2_error", true, 0.1};
    rows[1] = {56, "step", 0.0, "l2_error", false, 0.1};
    const auto text = io::rates_csv(rows);
    EXPECT_NE(text.find("undefined"), std::string::npos);
    EXPECT_EQ(io::rates_csv(io::parse_rates(text)), text);
}

TEST(Report, SvgIsWellFormedAndEscaped) {
    report::SvgPlot plot("a < b & \"c\"", "x", "y", true, true);
    plot.polyline({1, 10, 100}, {1, 0.1, 0.01}, report::palette(0));
    plot.polyline({1, 10}, {0.0, -1.0}, report::palette(1));  // not representable on log axes
    plot.rect(2, 0.2, 3, 0.3, report::palette(2));
    plot.legend("m<10", report::palette(0));
    plot.note("dashed & dotted");
    const auto svg = plot.render();
    std::string why;
    EXPECT_TRUE(well_formed_xml(svg, why)) << why;
    EXPECT_EQ(svg.find("a < b"), std::string::npos);
    EXPECT_TRUE(well_formed_xml(report::SvgPlot("empty", "x", "y", false, false).render(), why)) << why;
}

TEST(Report, WellFormedBundleAndPartialInput) {
    harness::SweepConfig cfg;
    cfg.widths = {4, 8};
    cfg.seeds = 2;
    cfg.adam.iterations = 1000;
    cfg.adam.record_every = 250;
    const auto res = harness::width_sweep(harness::TargetSpec{harness::TargetKind::step}, cfg);
    const auto dir = scratch("report");
    const auto full = report::render_report(res.records, res.trajectories, dir);
    EXPECT_EQ(full.files.size(), 8u);
    EXPECT_TRUE(full.warnings.empty());
    for (const auto& f : full.files) {
        if (!f.ends_with(".svg")) continue;
        std::string why;
        EXPECT_TRUE(well_formed_xml(io::read_text(dir / f), why)) << f << ": " << why;
    }
    const auto partial = report::render_report(res.records, {}, scratch("report_partial"));
    EXPECT_EQ(partial.files.size(), 4u);
    EXPECT_EQ(partial.warnings.size(), 1u);
    EXPECT_THROW(report::render_report({}, {}, scratch("report_empty")), std::invalid_argument);
}

TEST(Config, ParsesSectionsAndRejectsUnknownKeys) {
    const auto c = cli::config_from_json(nlohmann::json::parse(R"({
        "target": "cusp", "widths": [4, 8], "seeds": {"count": 2, "base": 5},
        "optimizer": {"kind": "flow"}, "flow": {"horizon": 0.5}, "output": {"workers": 2}})"));
    EXPECT_EQ(c.targets, std::vector<std::string>{"cusp"});
    EXPECT_EQ(c.sweep.seeds, 2u);
    EXPECT_EQ(c.sweep.base_seed, 5u);
    EXPECT_EQ(c.sweep.optimizer, harness::Optimizer::flow);
    EXPECT_DOUBLE_EQ(c.sweep.flow.horizon, 0.5);
    EXPECT_EQ(c.sweep.workers, 2u);
    EXPECT_THROW(cli::config_from_json(nlohmann::json::parse(R"({"widths": [4], "bogus": 1})")), std::invalid_argument);
    EXPECT_THROW(cli::config_from_json(nlohmann::json::parse(R"({"adam": {"lr": 0.1}})")), std::invalid_argument);
    EXPECT_THROW(cli::config_from_json(nlohmann::json::parse(R"({"widths": [8, 4]})")), std::invalid_argument);
    EXPECT_THROW(cli::config_from_json(nlohmann::json::parse(R"({"target": "sine"})")), std::invalid_argument);
    EXPECT_THROW(cli::config_from_json(nlohmann::json::parse(R"({"widths": "many"})")), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndManifest) {
    auto c = cli::preset("ci");
    c.sweep.adam.rate = 0.005;
    const auto back = cli::config_from_json(cli::config_to_json(c));
    EXPECT_EQ(cli::config_to_json(back), cli::config_to_json(c));
    const auto man = cli::manifest("sweep", c);
    EXPECT_EQ(man["seeds"].size(), 5u);
    EXPECT_EQ(man["version"], "0.1.0");
    EXPECT_EQ(cli::config_to_json(cli::config_from_json(man)), cli::config_to_json(c));
    EXPECT_THROW(cli::preset("huge"), std::invalid_argument);
}

TEST(Config, OutputPrecedence) {
    cli::Config c;
    c.output_dir = "from_config";
    ::unsetenv("NTKLAB_OUT");
    EXPECT_EQ(cli::resolve_output("", c), "from_config");
    ::setenv("NTKLAB_OUT", "from_env", 1);
    EXPECT_EQ(cli::resolve_output("", c), "from_env");
    EXPECT_EQ(cli::resolve_output("from_flag", c), "from_flag");
    ::unsetenv("NTKLAB_OUT");
}

TEST(Cli, TrainTwiceGivesIdenticalFiles) {
    const auto a = scratch("train_a"), b = scratch("train_b");
    ASSERT_EQ(invoke({"train", "--m", "1", "--seed", "7", "--out", a.string()}), 0);
    ASSERT_EQ(invoke({"train", "--m", "1", "--seed", "7", "--out", b.string()}), 0);
    for (const char* f : {"ckpt/gaussian_m1_s7_adam.csv", "traj/gaussian_m1_s7_adam.csv", "runs.csv"})
        EXPECT_EQ(io::read_text(a / f), io::read_text(b / f)) << f;
    // Manifests differ only in the recorded output directory.
    auto ma = nlohmann::json::parse(io::read_text(a / "manifest.json"));
    auto mb = nlohmann::json::parse(io::read_text(b / "manifest.json"));
    ma["config"]["output"].erase("dir");
    mb["config"]["output"].erase("dir");
    EXPECT_EQ(ma, mb);
    const auto ck = io::parse_checkpoint(io::read_text(a / "ckpt/gaussian_m1_s7_adam.csv"));
    EXPECT_EQ(ck.seed, 7u);
    EXPECT_EQ(ck.net.width(), 1u);
}

TEST(Cli, FlowTrainReplayAndReport) {
    const auto a = scratch("flow_a"), b = scratch("flow_b");
    ASSERT_EQ(invoke({"train", "--m", "8", "--seed", "3", "--optimizer", "flow", "--horizon", "0.1", "--out", a.string()}), 0);
    ASSERT_EQ(invoke({"replay", "--manifest", (a / "manifest.json").string(), "--out", b.string()}), 0);
    EXPECT_EQ(io::read_text(a / "runs.csv"), io::read_text(b / "runs.csv"));
    EXPECT_EQ(io::read_text(a / "traj/gaussian_m8_s3_flow.csv"), io::read_text(b / "traj/gaussian_m8_s3_flow.csv"));
    std::string out;
    ASSERT_EQ(invoke({"report", "--in", a.string()}, &out), 0);
    std::string why;
    EXPECT_TRUE(well_formed_xml(io::read_text(a / "report/weight_distance.svg"), why)) << why;
    const auto rows = io::parse_csv(io::read_text(a / "report/weight_distance.csv"));
    ASSERT_GT(rows.size(), 1u);
    EXPECT_FALSE(rows.back()[3].empty());  // flow runs carry the envelope
}

TEST(Cli, BadInputsExitNonZero) {
    std::string out, err;
    EXPECT_NE(invoke({"train", "--bogus"}, &out, &err), 0);
    EXPECT_NE(invoke({"train", "--target", "sine"}, &out, &err), 0);
    EXPECT_NE(invoke({}, &out, &err), 0);
    const auto dir = scratch("badcfg");
    fs::create_directories(dir);
    io::write_text(dir / "bad.json", R"({"widths": [1], "unknown": true})");
    EXPECT_EQ(invoke({"sweep", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()}, &out, &err), 2);
    EXPECT_NE(err.find("unknown key 'unknown'"), std::string::npos);
    EXPECT_NE(err.find("Usage"), std::string::npos);
    io::write_text(dir / "broken.json", "{");
    EXPECT_EQ(invoke({"sweep", "--config", (dir / "broken.json").string()}, &out, &err), 2);
    EXPECT_EQ(invoke({"--help"}, &out, &err), 0);
    EXPECT_NE(out.find("ntk-check"), std::string::npos);
}

TEST(Cli, TheoryCheckPassesWithOneLinePerLemma) {
    const auto dir = scratch("theory");
    std::string out;
    EXPECT_EQ(invoke({"theory-check", "--out", dir.string()}, &out), 0);
    std::size_t lines = 0;
    for (std::size_t p = out.find("PASS"); p != std::string::npos; p = out.find("PASS", p + 1)) ++lines;
    EXPECT_GE(lines, 6u);
    EXPECT_EQ(out.find("FAIL"), std::string::npos);
    const auto rows = io::parse_csv(io::read_text(dir / "bounds.csv"));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"scenario_id", "t", "measured_loss_sq", "bound_value", "window_flag"}));
    EXPECT_GT(rows.size(), 2u);
}

TEST(Cli, SpectrumWritesEigenTable) {
    const auto dir = scratch("spectrum");
    EXPECT_EQ(invoke({"spectrum", "--modes", "8", "--nodes", "4001", "--out", dir.string()}), 0);
    const auto rows = io::parse_csv(io::read_text(dir / "eigen.csv"));
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_NEAR(parse_double(rows[1][3]), 0.8105695, 1e-6);
    EXPECT_NEAR(parse_double(rows[1][4]) / parse_double(rows[1][3]), 4.0, 1e-5);
    EXPECT_NE(invoke({"spectrum", "--nodes", "4000", "--out", dir.string()}), 0);
}

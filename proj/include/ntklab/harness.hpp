#pragma once

// Target functions, width sweeps, rate tables and breakpoint histograms.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ntklab/math.hpp"
#include "ntklab/network.hpp"
#include "ntklab/spectral.hpp"
#include "ntklab/training.hpp"

namespace ntklab::harness {

enum class TargetKind { gaussian, cusp, step };

struct TargetSpec {
    TargetKind kind = TargetKind::gaussian;

    double operator()(double x) const noexcept {
        switch (kind) {
            case TargetKind::gaussian:
                return 5.0 / (4.0 * std::sqrt(2.0 * std::numbers::pi)) * std::exp(-12.5 * x * x);
            case TargetKind::cusp:
                return 1.0 - std::sqrt(std::abs(x));
            case TargetKind::step:
                return x <= 0.0 ? 0.0 : 1.0;
        }
        return 0.0;
    }
};

inline double target_eval(const TargetSpec& spec, double x) { return spec(x); }

inline std::string to_string(TargetKind k) {
    switch (k) {
        case TargetKind::gaussian: return "gaussian";
        case TargetKind::cusp: return "cusp";
        case TargetKind::step: return "step";
    }
    return "?";
}

inline TargetSpec target_from_string(const std::string& name) {
    if (name == "gaussian") return {TargetKind::gaussian};
    if (name == "cusp") return {TargetKind::cusp};
    if (name == "step") return {TargetKind::step};
    throw std::invalid_argument("unknown target '" + name + "' (expected gaussian, cusp or step)");
}

enum class Optimizer { flow, adam };

inline std::string to_string(Optimizer o) { return o == Optimizer::flow ? "flow" : "adam"; }

inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "flow") return Optimizer::flow;
    if (s == "adam") return Optimizer::adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected flow or adam)");
}

struct SweepConfig {
    std::vector<std::size_t> widths{18, 32, 56, 100, 178, 316, 562, 1000};
    std::size_t seeds = 20;
    std::uint64_t base_seed = 0;
    Optimizer optimizer = Optimizer::adam;
    bool train_signs = false;
    training::FlowConfig flow;
    training::AdamConfig adam;
    std::size_t workers = 1;

    SweepConfig() {
        adam.iterations = 200000;
        adam.convergence_window = 1000;
        adam.convergence_tolerance = 1e-6;
    }

    void validate() const {
        if (widths.empty()) throw std::invalid_argument("SweepConfig: widths must be non-empty");
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (widths[i] == 0) throw std::invalid_argument("SweepConfig: widths must be >= 1");
            if (i > 0 && widths[i] <= widths[i - 1])
                throw std::invalid_argument("SweepConfig: widths must be strictly increasing");
        }
        if (seeds == 0) throw std::invalid_argument("SweepConfig: seeds must be >= 1");
        if (workers == 0) throw std::invalid_argument("SweepConfig: workers must be >= 1");
        flow.validate();
        adam.validate();
    }
};

struct RunRecord {
    std::string run_id;
    std::string target;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::string optimizer;
    bool train_signs = false;
    double final_l2_error = 0.0;
    double final_wdist_inf = 0.0;
    std::size_t steps = 0;
    double wall_time = 0.0;
    std::string status = "ok";
    bool weight_distance_pass = true;
    // In-memory only; checkpoints persist the network.
    network::ShallowNet final_net;
};

inline std::string make_run_id(const std::string& target, std::size_t m, std::uint64_t seed, Optimizer opt) {
    return target + "_m" + std::to_string(m) + "_s" + std::to_string(seed) + "_" + to_string(opt);
}

struct RunOutput {
    RunRecord record;
    training::Trajectory trajectory;
};

// One (target, m, seed) training run. Norms are measured on 100m + 1 nodes
// (at least 8001 for the flow, whose loss lives on that grid).
inline RunOutput single_run(const TargetSpec& target, std::size_t m, std::uint64_t seed, const SweepConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    RunOutput out;
    RunRecord& rec = out.record;
    rec.target = to_string(target.kind);
    rec.m = m;
    rec.seed = seed;
    rec.optimizer = to_string(cfg.optimizer);
    rec.train_signs = cfg.train_signs;
    rec.run_id = make_run_id(rec.target, m, seed, cfg.optimizer);
    try {
        const auto net = network::init(m, seed, cfg.train_signs).net;
        if (cfg.optimizer == Optimizer::flow) {
            const auto g = spectral::GridFunction::sample(spectral::default_nodes(m), target);
            out.trajectory = training::gradient_flow(net, g, cfg.flow);
            rec.weight_distance_pass = training::weight_distance_holds(out.trajectory);
        } else {
            out.trajectory = training::adam_train(net, target, cfg.adam, seed);
        }
        out.trajectory.run_id = rec.run_id;
        const auto& last = out.trajectory.records.back();
        rec.final_l2_error = last.l2_err;
        rec.final_wdist_inf = last.wdist_inf;
        rec.steps = out.trajectory.steps;
        rec.final_net = out.trajectory.final_net;
        if (out.trajectory.aborted) rec.status = "aborted";
    } catch (const std::exception& e) {
        rec.status = std::string("error: ") + e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

struct SweepResult {
    std::vector<RunRecord> records;
    std::vector<training::Trajectory> trajectories;
};

// Runs every (m, seed) pair; up to cfg.workers runs at a time. Results are
// stored by job index, so the output order never depends on scheduling.
inline SweepResult width_sweep(const TargetSpec& target, const SweepConfig& cfg) {
    cfg.validate();
    struct Job {
        std::size_t m;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t m : cfg.widths)
        for (std::size_t i = 0; i < cfg.seeds; ++i) jobs.push_back({m, cfg.base_seed + i});
    std::vector<RunOutput> outputs(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t j = next++; j < jobs.size(); j = next++)
            outputs[j] = single_run(target, jobs[j].m, jobs[j].seed, cfg);
    };
    const std::size_t threads = std::min(cfg.workers, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    SweepResult result;
    for (auto& o : outputs) {
        result.records.push_back(std::move(o.record));
        result.trajectories.push_back(std::move(o.trajectory));
    }
    return result;
}

struct RateRow {
    std::size_t m = 0;
    std::string target;
    double rate = 0.0;
    std::string rate_kind;
    bool defined = true;
    double median = 0.0;  // median at m
};

// Consecutive-pair slopes log(e_{i-1}/e_i) / log(m_i/m_{i-1}) of per-width
// medians, one table per target.
template <class Value>
std::vector<RateRow> rates_by(const std::vector<RunRecord>& records, Value value, const std::string& kind) {
    std::map<std::string, std::map<std::size_t, std::vector<double>>> groups;
    for (const auto& r : records)
        if (r.status == "ok") groups[r.target][r.m].push_back(value(r));
    std::vector<RateRow> rows;
    for (const auto& [target, by_m] : groups) {
        if (by_m.size() < 2) throw std::invalid_argument("estimate_rates: need at least two widths");
        bool first = true;
        std::size_t prev_m = 0;
        double prev_e = 0.0;
        for (const auto& [m, vals] : by_m) {
            const double e = median(vals);
            if (!first) {
                RateRow row;
                row.m = m;
                row.target = target;
                row.rate_kind = kind;
                row.median = e;
                if (e > 0.0 && prev_e > 0.0) {
                    row.rate = std::log(prev_e / e) / std::log(static_cast<double>(m) / static_cast<double>(prev_m));
                } else {
                    row.defined = false;
                    row.rate = std::numeric_limits<double>::quiet_NaN();
                }
                rows.push_back(row);
            }
            first = false;
            prev_m = m;
            prev_e = e;
        }
    }
    return rows;
}

inline std::vector<RateRow> estimate_rates(const std::vector<RunRecord>& records) {
    return rates_by(records, [](const RunRecord& r) { return r.final_l2_error; }, "l2_error");
}

inline std::vector<RateRow> weight_distance_rates(const std::vector<RunRecord>& records) {
    return rates_by(records, [](const RunRecord& r) { return r.final_wdist_inf; }, "weight_distance");
}

// Median of a per-record quantity for one (target, m).
inline double median_of(const std::vector<RunRecord>& records, const std::string& target, std::size_t m,
                        bool weight_distance = false) {
    std::vector<double> v;
    for (const auto& r : records)
        if (r.status == "ok" && r.target == target && r.m == m)
            v.push_back(weight_distance ? r.final_wdist_inf : r.final_l2_error);
    if (v.empty()) throw std::invalid_argument("median_of: no runs for " + target + " m=" + std::to_string(m));
    return median(v);
}

struct Histogram {
    std::vector<std::size_t> counts;
    std::size_t below = 0;  // theta < -1
    std::size_t above = 0;  // theta > 1

    std::size_t total() const {
        std::size_t t = below + above;
        for (auto c : counts) t += c;
        return t;
    }
};

inline Histogram breakpoint_histogram(std::span<const double> biases, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("breakpoint_histogram: bins must be >= 1");
    Histogram h;
    h.counts.assign(bins, 0);
    for (double t : biases) {
        if (t < -1.0) {
            ++h.below;
        } else if (t > 1.0) {
            ++h.above;
        } else {
            auto b = static_cast<std::size_t>((t + 1.0) / 2.0 * static_cast<double>(bins));
            h.counts[std::min(b, bins - 1)]++;
        }
    }
    return h;
}

inline Histogram breakpoint_histogram(const network::ShallowNet& net, std::size_t bins) {
    return breakpoint_histogram(net.biases, bins);
}

}  // namespace ntklab::harness

#pragma once

// CSV persistence: checkpoints, trajectories, run tables and rate tables.
// Numbers use the shortest round-trip form, so files are byte-stable.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/harness.hpp"
#include "ntklab/math.hpp"
#include "ntklab/network.hpp"
#include "ntklab/training.hpp"

namespace ntklab::io {

namespace fs = std::filesystem;

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

    CsvWriter& row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw std::invalid_argument("CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        return *this;
    }

    void comment(const std::string& line) { out_ << "# " << line << '\n'; }
    std::string str() const { return out_.str(); }

private:
    std::size_t columns_;
    std::ostringstream out_;
};

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// Rows of a CSV file without comment lines; first row is the header.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(split(line));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Checkpoint: "# m=<m> seed=<seed> train_signs=<0|1>" then r,a_r,theta_r.

inline std::string checkpoint_csv(const network::ShallowNet& net, std::uint64_t seed) {
    CsvWriter w({"r", "a_r", "theta_r"});
    std::string text = "# m=" + std::to_string(net.width()) + " seed=" + std::to_string(seed) +
                       " train_signs=" + (net.train_signs ? "1" : "0") + "\n";
    for (std::size_t r = 0; r < net.width(); ++r)
        w.row({std::to_string(r + 1), num(net.signs[r]), num(net.biases[r])});
    return text + w.str();
}

struct Checkpoint {
    network::ShallowNet net;
    std::uint64_t seed = 0;
};

inline Checkpoint parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string meta;
    std::getline(in, meta);
    if (meta.rfind("# ", 0) != 0) throw std::invalid_argument("checkpoint: missing metadata line");
    std::size_t m = 0;
    Checkpoint ck;
    bool train_signs = false;
    for (const auto& field : split(meta.substr(2), ' ')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const auto key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "m") m = std::stoul(value);
        else if (key == "seed") ck.seed = std::stoull(value);
        else if (key == "train_signs") train_signs = value == "1";
    }
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"r", "a_r", "theta_r"})
        throw std::invalid_argument("checkpoint: bad header");
    if (rows.size() != m + 1) throw std::invalid_argument("checkpoint: row count does not match m");
    std::vector<double> a(m), theta(m);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw std::invalid_argument("checkpoint: malformed row");
        const auto r = std::stoul(rows[i][0]);
        if (r < 1 || r > m) throw std::invalid_argument("checkpoint: unit index out of range");
        a[r - 1] = parse_double(rows[i][1]);
        theta[r - 1] = parse_double(rows[i][2]);
    }
    ck.net = network::ShallowNet(a, theta, train_signs);
    return ck;
}

// ---------------------------------------------------------------------------
// Trajectories

inline const std::vector<std::string>& trajectory_header() {
    static const std::vector<std::string> h{"run_id", "t_or_step", "loss", "l2_err", "s_norm", "wdist_inf",
                                            "kappa_time_integral"};
    return h;
}

inline std::string trajectory_csv(const training::Trajectory& traj) {
    CsvWriter w(trajectory_header());
    for (const auto& r : traj.records)
        w.row({traj.run_id, num(r.t), num(r.loss), num(r.l2_err), num(r.s_norm), num(r.wdist_inf),
               num(r.kappa_time_integral)});
    return w.str();
}

inline training::Trajectory parse_trajectory(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != trajectory_header()) throw std::invalid_argument("trajectory: bad header");
    training::Trajectory traj;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& c = rows[i];
        if (c.size() != 7) throw std::invalid_argument("trajectory: malformed row");
        traj.run_id = c[0];
        training::TrajectoryRecord r;
        r.t = parse_double(c[1]);
        r.loss = parse_double(c[2]);
        r.l2_err = parse_double(c[3]);
        r.s_norm = parse_double(c[4]);
        r.wdist_inf = parse_double(c[5]);
        r.kappa_time_integral = parse_double(c[6]);
        traj.records.push_back(r);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Run table (wall time lives in a separate timings file so that runs.csv is
// reproducible byte for byte).

inline const std::vector<std::string>& runs_header() {
    static const std::vector<std::string> h{"run_id",         "target",          "m",     "seed",  "optimizer",
                                            "train_signs",    "final_l2_error",  "final_wdist_inf", "steps",
                                            "status"};
    return h;
}

inline std::string runs_csv(const std::vector<harness::RunRecord>& records) {
    CsvWriter w(runs_header());
    for (const auto& r : records)
        w.row({r.run_id, r.target, num(r.m), std::to_string(r.seed), r.optimizer, r.train_signs ? "1" : "0",
               num(r.final_l2_error), num(r.final_wdist_inf), num(r.steps), r.status});
    return w.str();
}

inline std::string timings_csv(const std::vector<harness::RunRecord>& records) {
    CsvWriter w({"run_id", "wall_time"});
    for (const auto& r : records) w.row({r.run_id, num(r.wall_time)});
    return w.str();
}

inline std::vector<harness::RunRecord> parse_runs(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != runs_header()) throw std::invalid_argument("runs: bad header");
    std::vector<harness::RunRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& c = rows[i];
        if (c.size() != runs_header().size()) throw std::invalid_argument("runs: malformed row");
        harness::RunRecord r;
        r.run_id = c[0];
        r.target = c[1];
        r.m = std::stoul(c[2]);
        r.seed = std::stoull(c[3]);
        r.optimizer = c[4];
        r.train_signs = c[5] == "1";
        r.final_l2_error = parse_double(c[6]);
        r.final_wdist_inf = parse_double(c[7]);
        r.steps = std::stoul(c[8]);
        r.status = c[9];
        out.push_back(r);
    }
    return out;
}

inline std::string rates_csv(const std::vector<harness::RateRow>& rows) {
    CsvWriter w({"m", "target", "rate", "rate_kind"});
    for (const auto& r : rows) w.row({num(r.m), r.target, r.defined ? num(r.rate) : "undefined", r.rate_kind});
    return w.str();
}

inline std::vector<harness::RateRow> parse_rates(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"m", "target", "rate", "rate_kind"})
        throw std::invalid_argument("rates: bad header");
    std::vector<harness::RateRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        harness::RateRow r;
        r.m = std::stoul(rows[i][0]);
        r.target = rows[i][1];
        r.defined = rows[i][2] != "undefined";
        r.rate = r.defined ? parse_double(rows[i][2]) : 0.0;
        r.rate_kind = rows[i][3];
        out.push_back(r);
    }
    return out;
}

}  // namespace ntklab::io

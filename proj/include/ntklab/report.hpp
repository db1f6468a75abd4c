#pragma once

// Static SVG figures plus the CSV tables behind them: error-vs-width box
// plots, learning curves, weight distances and breakpoint histograms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ntklab/harness.hpp"
#include "ntklab/io.hpp"
#include "ntklab/math.hpp"
#include "ntklab/training.hpp"

namespace ntklab::report {

namespace fs = std::filesystem;

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

// Minimal 2d chart on a fixed canvas with optional log axes.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool logx, bool logy)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), logx_(logx), logy_(logy) {}

    void include(double x, double y) {
        if (!usable(x, y)) return;
        const double tx = tx_(x), ty = ty_(y);
        xmin_ = std::min(xmin_, tx);
        xmax_ = std::max(xmax_, tx);
        ymin_ = std::min(ymin_, ty);
        ymax_ = std::max(ymax_, ty);
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                  bool dashed = false) {
        Item it{Item::line, color, dashed, xs, ys, {}};
        for (std::size_t i = 0; i < xs.size(); ++i) include(xs[i], ys[i]);
        items_.push_back(std::move(it));
    }

    // Axis-aligned rectangle in data coordinates.
    void rect(double x0, double y0, double x1, double y1, const std::string& color) {
        include(x0, y0);
        include(x1, y1);
        items_.push_back({Item::box, color, false, {x0, x1}, {y0, y1}, {}});
    }

    void legend(const std::string& label, const std::string& color) { legend_.emplace_back(label, color); }

    void note(const std::string& text) { notes_.push_back(text); }

    std::string render() const {
        double x0 = xmin_, x1 = xmax_, y0 = ymin_, y1 = ymax_;
        if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
        if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
        if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
        if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
        const double padx = 0.04 * (x1 - x0), pady = 0.06 * (y1 - y0);
        x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
        auto px = [&](double v) { return left + (tx_(v) - x0) / (x1 - x0) * plot_w; };
        auto py = [&](double v) { return top + plot_h - (ty_(v) - y0) / (y1 - y0) * plot_h; };

        std::ostringstream s;
        s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
          << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
        s << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
        s << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">"
          << xml_escape(title_) << "</text>\n";
        s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
          << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
            const double gx = left + plot_w * i / 4.0, gy = top + plot_h - plot_h * i / 4.0;
            s << "<text x=\"" << fmt(gx) << "\" y=\"" << top + plot_h + 16
              << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << tick(fx, logx_) << "</text>\n";
            s << "<text x=\"" << left - 6 << "\" y=\"" << fmt(gy + 4)
              << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << tick(fy, logy_) << "</text>\n";
        }
        s << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
          << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << xml_escape(xlabel_) << "</text>\n";
        s << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
          << "font-family=\"sans-serif\" transform=\"rotate(-90 16 " << top + plot_h / 2 << ")\">"
          << xml_escape(ylabel_) << "</text>\n";

        for (const auto& it : items_) {
            if (it.kind == Item::line) {
                std::ostringstream pts;
                std::size_t n = 0;
                for (std::size_t i = 0; i < it.xs.size(); ++i) {
                    if (!usable(it.xs[i], it.ys[i])) continue;
                    pts << (n++ ? " " : "") << fmt(px(it.xs[i])) << ',' << fmt(py(it.ys[i]));
                }
                if (n == 0) continue;
                s << "<polyline fill=\"none\" stroke=\"" << it.color << "\" stroke-width=\"1.3\""
                  << (it.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << pts.str() << "\"/>\n";
            } else {
                if (!usable(it.xs[0], it.ys[0]) || !usable(it.xs[1], it.ys[1])) continue;
                const double ax = px(it.xs[0]), bx = px(it.xs[1]);
                const double ay = py(it.ys[0]), by = py(it.ys[1]);
                s << "<rect x=\"" << fmt(std::min(ax, bx)) << "\" y=\"" << fmt(std::min(ay, by)) << "\" width=\""
                  << fmt(std::abs(bx - ax)) << "\" height=\"" << fmt(std::abs(by - ay)) << "\" fill=\"" << it.color
                  << "\" fill-opacity=\"0.35\" stroke=\"" << it.color << "\"/>\n";
            }
        }
        double ly = top + 14;
        for (const auto& [label, color] : legend_) {
            s << "<rect x=\"" << left + plot_w + 12 << "\" y=\"" << fmt(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
              << color << "\"/>\n";
            s << "<text x=\"" << left + plot_w + 26 << "\" y=\"" << fmt(ly) << "\" font-size=\"11\" font-family=\"sans-serif\">"
              << xml_escape(label) << "</text>\n";
            ly += 16;
        }
        for (const auto& n : notes_) {
            s << "<text x=\"" << left + plot_w + 12 << "\" y=\"" << fmt(ly) << "\" font-size=\"10\" font-family=\"sans-serif\">"
              << xml_escape(n) << "</text>\n";
            ly += 14;
        }
        s << "</svg>\n";
        return s.str();
    }

    static constexpr int width = 760;
    static constexpr int height = 460;
    static constexpr int left = 70;
    static constexpr int top = 40;
    static constexpr int plot_w = 520;
    static constexpr int plot_h = 360;

private:
    struct Item {
        enum Kind { line, box } kind;
        std::string color;
        bool dashed;
        std::vector<double> xs, ys;
        std::string label;
    };

    bool usable(double x, double y) const {
        return std::isfinite(x) && std::isfinite(y) && (!logx_ || x > 0.0) && (!logy_ || y > 0.0);
    }
    double tx_(double x) const { return logx_ ? std::log10(x) : x; }
    double ty_(double y) const { return logy_ ? std::log10(y) : y; }
    static std::string fmt(double v) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << v;
        return s.str();
    }
    static std::string tick(double v, bool log) {
        std::ostringstream s;
        s.precision(3);
        s << (log ? std::pow(10.0, v) : v);
        return s.str();
    }

    std::string title_, xlabel_, ylabel_;
    bool logx_, logy_;
    double xmin_ = std::numeric_limits<double>::infinity(), xmax_ = -std::numeric_limits<double>::infinity();
    double ymin_ = std::numeric_limits<double>::infinity(), ymax_ = -std::numeric_limits<double>::infinity();
    std::vector<Item> items_;
    std::vector<std::pair<std::string, std::string>> legend_;
    std::vector<std::string> notes_;
};

struct ReportSummary {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

inline std::vector<std::string> targets_of(const std::vector<harness::RunRecord>& records) {
    std::set<std::string> t;
    for (const auto& r : records) t.insert(r.target);
    return {t.begin(), t.end()};
}

inline void emit(const fs::path& dir, const std::string& name, const std::string& text, ReportSummary& summary) {
    io::write_text(dir / name, text);
    summary.files.push_back(name);
}

// Writes the figure bundle into out_dir. Trajectories may be empty, in which
// case only the box plots and histograms are produced.
inline ReportSummary render_report(const std::vector<harness::RunRecord>& records,
                                   const std::vector<training::Trajectory>& trajectories, const fs::path& out_dir,
                                   std::size_t bins = 20) {
    if (records.empty()) throw std::invalid_argument("render_report: no run records");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw std::runtime_error("render_report: cannot create output directory " + out_dir.string());
    ReportSummary summary;
    const auto targets = targets_of(records);

    // (i) final error against width
    {
        SvgPlot plot("Final L2 error against width", "m", "||f - g||_2", true, true);
        io::CsvWriter csv({"target", "m", "min", "q1", "median", "q3", "max"});
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            std::map<std::size_t, std::vector<double>> by_m;
            for (const auto& r : records)
                if (r.target == targets[ti] && r.status == "ok") by_m[r.m].push_back(r.final_l2_error);
            std::vector<double> ms, meds;
            for (const auto& [m, v] : by_m) {
                const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
                const double q1 = quantile(v, 0.25), q3 = quantile(v, 0.75), med = median(v);
                csv.row({targets[ti], io::num(m), io::num(lo), io::num(q1), io::num(med), io::num(q3), io::num(hi)});
                const double mm = static_cast<double>(m);
                const double spread = std::pow(10.0, 0.02 * (static_cast<double>(ti) - 1.0));
                plot.rect(mm * spread * 0.97, q1, mm * spread * 1.03, q3, palette(ti));
                plot.polyline({mm * spread, mm * spread}, {lo, hi}, palette(ti));
                ms.push_back(mm * spread);
                meds.push_back(med);
            }
            plot.polyline(ms, meds, palette(ti));
            plot.legend(targets[ti], palette(ti));
        }
        emit(out_dir, "error_vs_m.csv", csv.str(), summary);
        emit(out_dir, "error_vs_m.svg", plot.render(), summary);
    }

    std::map<std::string, const harness::RunRecord*> by_id;
    for (const auto& r : records) by_id[r.run_id] = &r;

    if (trajectories.empty()) {
        summary.warnings.push_back("no trajectories: learning-curve and weight-distance plots skipped");
    } else {
        // (ii) learning curves
        SvgPlot curves("Learning curves", "t or step", "||kappa||_0", false, true);
        io::CsvWriter curve_csv({"run_id", "t_or_step", "l2_err"});
        // (iii) weight distance with the flow envelope sqrt(2/m) int ||kappa||_0
        SvgPlot wd("Weight distance", "t or step", "||theta(t) - theta(0)||_inf", false, false);
        io::CsvWriter wd_csv({"run_id", "t_or_step", "wdist_inf", "envelope"});
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto& tr = trajectories[i];
            const auto it = by_id.find(tr.run_id);
            const bool flow = it != by_id.end() ? it->second->optimizer == "flow"
                                                : tr.run_id.size() > 5 && tr.run_id.ends_with("_flow");
            const std::size_t m = it != by_id.end() ? it->second->m : tr.width;
            std::vector<double> ts, errs, dists, env;
            for (const auto& rec : tr.records) {
                ts.push_back(rec.t);
                errs.push_back(rec.l2_err);
                dists.push_back(rec.wdist_inf);
                curve_csv.row({tr.run_id, io::num(rec.t), io::num(rec.l2_err)});
                std::string e;
                if (flow && m > 0) {
                    env.push_back(std::sqrt(2.0 / static_cast<double>(m)) * rec.kappa_time_integral +
                                  tr.integrator_slack);
                    e = io::num(env.back());
                }
                wd_csv.row({tr.run_id, io::num(rec.t), io::num(rec.wdist_inf), e});
            }
            curves.polyline(ts, errs, palette(i));
            wd.polyline(ts, dists, palette(i));
            if (!env.empty()) wd.polyline(ts, env, palette(i), true);
        }
        wd.note("dashed: flow envelope");
        emit(out_dir, "learning_curves.csv", curve_csv.str(), summary);
        emit(out_dir, "learning_curves.svg", curves.render(), summary);
        emit(out_dir, "weight_distance.csv", wd_csv.str(), summary);
        emit(out_dir, "weight_distance.svg", wd.render(), summary);
    }

    // (iv) breakpoints of the widest runs per target
    {
        SvgPlot plot("Final breakpoint histograms (largest width)", "theta", "count", false, false);
        io::CsvWriter csv({"target", "m", "bin_lo", "bin_hi", "count"});
        bool any = false;
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            std::size_t widest = 0;
            for (const auto& r : records)
                if (r.target == targets[ti] && r.final_net.width() > 0) widest = std::max(widest, r.m);
            if (widest == 0) continue;
            std::vector<double> biases;
            for (const auto& r : records)
                if (r.target == targets[ti] && r.m == widest && r.final_net.width() > 0)
                    biases.insert(biases.end(), r.final_net.biases.begin(), r.final_net.biases.end());
            const auto h = harness::breakpoint_histogram(biases, bins);
            std::vector<double> xs, ys;
            csv.row({targets[ti], io::num(widest), "-inf", "-1", io::num(h.below)});
            for (std::size_t b = 0; b < bins; ++b) {
                const double lo = -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(bins);
                const double hi = -1.0 + 2.0 * static_cast<double>(b + 1) / static_cast<double>(bins);
                csv.row({targets[ti], io::num(widest), io::num(lo), io::num(hi), io::num(h.counts[b])});
                xs.insert(xs.end(), {lo, hi});
                const auto c = static_cast<double>(h.counts[b]);
                ys.insert(ys.end(), {c, c});
            }
            csv.row({targets[ti], io::num(widest), "1", "inf", io::num(h.above)});
            plot.polyline(xs, ys, palette(ti));
            plot.legend(targets[ti] + " m=" + std::to_string(widest), palette(ti));
            any = true;
        }
        if (!any) summary.warnings.push_back("no final networks: breakpoint histograms are empty");
        emit(out_dir, "breakpoints.csv", csv.str(), summary);
        emit(out_dir, "breakpoints.svg", plot.render(), summary);
    }
    return summary;
}

}  // namespace ntklab::report

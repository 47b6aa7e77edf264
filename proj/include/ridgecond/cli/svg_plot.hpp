#pragma once

// Standalone SVG 1.1 rendering of a condition number path. Output depends
// only on the path and the config, so identical inputs give identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ridgecond/condpath.hpp"

namespace ridgecond::cli {

struct VerticalMark {
    double lambda;
    std::string color;
    std::string label;
};

struct PlotConfig {
    std::string title = "Spectral condition number plot";
    int width = 900;
    int height = 600;
    std::vector<VerticalMark> vertical_marks;
    bool show_aids = false;
    std::optional<double> y_clip;
};

// Colours for vertical marks: penalties proposed elsewhere (usage check) in
// green, the cross-validated choice in red, the knee in blue.
inline constexpr const char* kMarkColor = "#2ca02c";
inline constexpr const char* kSelectedColor = "#d62728";
inline constexpr const char* kKneeColor = "#1f77b4";

namespace svg_detail {

inline std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string label(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(x) < 1e-12 ? 0.0 : x);
    return buf;
}

inline std::string escape(const std::string& s)
{
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

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6)
{
    if (!(hi > lo)) {
        return {lo};
    }
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
}

struct Panel {
    double x0, y0, w, h; // plot area
    double xmin, xmax, ymin, ymax;

    double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
    double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

inline void widen(double& lo, double& hi)
{
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo) * 0.05);
        lo -= pad;
        hi += pad;
    } else {
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
}

inline void axes(std::ostringstream& o, const Panel& p, const std::string& title, const std::string& ylabel)
{
    o << "<g class=\"panel\">\n";
    o << "<rect x=\"" << num(p.x0) << "\" y=\"" << num(p.y0) << "\" width=\"" << num(p.w) << "\" height=\""
      << num(p.h) << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    for (double t : nice_ticks(p.xmin, p.xmax)) {
        const double x = p.px(t);
        o << "<line x1=\"" << num(x) << "\" y1=\"" << num(p.y0 + p.h) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(p.y0 + p.h + 5) << "\" stroke=\"#000000\"/>\n";
        o << "<text x=\"" << num(x) << "\" y=\"" << num(p.y0 + p.h + 18)
          << "\" font-size=\"11\" text-anchor=\"middle\">" << label(t) << "</text>\n";
    }
    for (double t : nice_ticks(p.ymin, p.ymax)) {
        const double y = p.py(t);
        o << "<line x1=\"" << num(p.x0 - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(p.x0) << "\" y2=\""
          << num(y) << "\" stroke=\"#000000\"/>\n";
        o << "<text x=\"" << num(p.x0 - 8) << "\" y=\"" << num(y + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << label(t) << "</text>\n";
    }
    o << "<text x=\"" << num(p.x0 + p.w / 2) << "\" y=\"" << num(p.y0 + p.h + 36)
      << "\" font-size=\"12\" text-anchor=\"middle\">ln(penalty)</text>\n";
    o << "<text x=\"" << num(p.x0 - 48) << "\" y=\"" << num(p.y0 + p.h / 2) << "\" font-size=\"12\""
      << " text-anchor=\"middle\" transform=\"rotate(-90 " << num(p.x0 - 48) << " " << num(p.y0 + p.h / 2) << ")\">"
      << escape(ylabel) << "</text>\n";
    o << "<text x=\"" << num(p.x0 + p.w / 2) << "\" y=\"" << num(p.y0 - 10)
      << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
    o << "</g>\n";
}

inline void polyline(std::ostringstream& o, const Panel& p, const std::string& id,
                     const std::vector<std::pair<double, double>>& pts, const char* color)
{
    o << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) o << ' ';
        o << num(p.px(pts[i].first)) << ',' << num(p.py(pts[i].second));
    }
    o << "\"/>\n";
}

inline void vline(std::ostringstream& o, const Panel& p, double x, const std::string& color, bool dashed,
                  const std::string& cls)
{
    if (x < p.xmin || x > p.xmax) return;
    o << "<line class=\"" << cls << "\" x1=\"" << num(p.px(x)) << "\" y1=\"" << num(p.y0) << "\" x2=\""
      << num(p.px(x)) << "\" y2=\"" << num(p.y0 + p.h) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
}

} // namespace svg_detail

inline std::string render_condition_plot(const ConditionPath& path, const PlotConfig& cfg)
{
    using namespace svg_detail;
    if (cfg.width <= 0 || cfg.height <= 0) throw Error(ErrorKind::InvalidInput, "plot size must be positive");
    for (const auto& m : cfg.vertical_marks) {
        if (m.lambda < path.grid.lambda_min() || m.lambda > path.grid.lambda_max()) {
            throw Error(ErrorKind::InvalidInput,
                        "vertical mark " + label(m.lambda) + " lies outside the penalty domain");
        }
    }
    const bool aids = cfg.show_aids;
    if (aids && (path.digits_lost.size() != path.cond.size() || path.acceleration.empty())) {
        throw Error(ErrorKind::InvalidInput, "aid panels requested but the path has no aids attached");
    }

    const auto& lam = path.grid.values();
    const double xmin = std::log(lam.front()), xmax = std::log(lam.back());
    const int panels = aids ? 3 : 1;
    const double pw = static_cast<double>(cfg.width) / panels;

    auto make_panel = [&](int k, double ymin, double ymax) {
        widen(ymin, ymax);
        return Panel{k * pw + 70.0, 50.0, pw - 95.0, cfg.height - 110.0, xmin, xmax, ymin, ymax};
    };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << cfg.width << "\" height=\""
      << cfg.height << "\" viewBox=\"0 0 " << cfg.width << " " << cfg.height << "\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << cfg.width << "\" height=\"" << cfg.height << "\" fill=\"#ffffff\"/>\n";

    // Condition number panel.
    double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
    bool any_inf = false;
    for (double c : path.cond) {
        if (std::isfinite(c)) {
            cmax = std::max(cmax, c);
            cmin = std::min(cmin, c);
        } else {
            any_inf = true;
        }
    }
    if (!std::isfinite(cmin)) cmin = cmax = 1.0;
    const double clip = cfg.y_clip.value_or(10.0 * cmax);
    const double ytop = any_inf ? std::max(clip, cmax) : (cfg.y_clip ? std::min(cmax, clip) : cmax);
    const Panel main = make_panel(0, cmin, ytop);
    const char* ylabel = path.norm == ConditionNorm::Spectral ? "spectral condition number" : "l1 condition number";
    axes(o, main, cfg.title, ylabel);
    std::vector<std::pair<double, double>> pts;
    std::vector<double> clipped;
    for (std::size_t s = 0; s < lam.size(); ++s) {
        if (std::isfinite(path.cond[s])) pts.emplace_back(std::log(lam[s]), std::min(path.cond[s], ytop));
        else clipped.push_back(std::log(lam[s]));
    }
    polyline(o, main, "cond-path", pts, "#000000");
    for (double x : clipped) {
        o << "<circle class=\"clipped\" cx=\"" << num(main.px(x)) << "\" cy=\"" << num(main.py(ytop))
          << "\" r=\"3\" fill=\"" << kSelectedColor << "\"/>\n";
    }

    std::vector<Panel> all{main};
    if (aids) {
        std::vector<std::pair<double, double>> dpts;
        double dmax = 0.0;
        for (std::size_t s = 0; s < lam.size(); ++s) {
            if (path.digits_lost[s] == kInfiniteDigitLoss) continue;
            dpts.emplace_back(std::log(lam[s]), path.digits_lost[s]);
            dmax = std::max(dmax, static_cast<double>(path.digits_lost[s]));
        }
        const Panel dig = make_panel(1, 0.0, dmax);
        axes(o, dig, "Approximate loss in digits of accuracy", "floor(log10(condition number))");
        polyline(o, dig, "digits-path", dpts, "#000000");

        std::vector<std::pair<double, double>> apts;
        double amin = 0.0, amax = 0.0;
        for (std::size_t i = 0; i < path.acceleration.size(); ++i) {
            if (!path.acceleration[i]) continue;
            const double v = *path.acceleration[i];
            apts.emplace_back(std::log(lam[i + 1]), v);
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        const Panel acc = make_panel(2, amin, amax);
        axes(o, acc, "Approximation to acceleration", "second derivative in ln(penalty)");
        o << "<line x1=\"" << num(acc.x0) << "\" y1=\"" << num(acc.py(0.0)) << "\" x2=\"" << num(acc.x0 + acc.w)
          << "\" y2=\"" << num(acc.py(0.0)) << "\" stroke=\"#999999\" stroke-dasharray=\"2,2\"/>\n";
        polyline(o, acc, "acceleration-path", apts, "#000000");
        all.push_back(dig);
        all.push_back(acc);
    }

    for (const Panel& p : all) {
        if (path.knee) vline(o, p, std::log(path.knee->lambda), kKneeColor, true, "knee");
        for (const auto& m : cfg.vertical_marks) vline(o, p, std::log(m.lambda), m.color, false, "mark");
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace ridgecond::cli

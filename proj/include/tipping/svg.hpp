#pragma once

// Minimal static SVG rendering: line plots with reference lines and bands,
// and a heatmap for spatio-temporal fields. Output is deterministic.

#include "tipping/core.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace tipping::svg {

struct Line {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false;
};

struct HLine {
    double y = 0.0;
    std::string label;
    std::string color = "#444444";
};

struct VLine {
    double x = 0.0;
    std::string label;
    std::string color = "#d62728";
};

struct Band {
    double lo = 0.0, hi = 0.0;
    std::string color = "#ffbb78";
};

struct Plot {
    std::string title, xlabel, ylabel;
    std::vector<Line> lines;
    std::vector<HLine> hlines;
    std::vector<VLine> vlines;
    std::vector<Band> bands;
    int width = 860;
    int height = 460;
};

inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

namespace detail {

[[nodiscard]] inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

[[nodiscard]] inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

[[nodiscard]] inline std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!(hi >= lo)) lo = 0.0, hi = 1.0;
        if (hi == lo) lo -= 0.5, hi += 0.5;
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

}  // namespace detail

/// Lines longer than `max_points` are decimated by a fixed stride.
[[nodiscard]] inline std::string render(const Plot& p, std::size_t max_points = 4000) {
    constexpr double ml = 70, mr = 20, mt = 36, mb = 48;
    const double W = p.width, H = p.height;
    const double pw = W - ml - mr, ph = H - mt - mb;

    detail::Range xr, yr;
    for (const auto& l : p.lines) {
        for (const double v : l.x) xr.add(v);
        for (const double v : l.y) yr.add(v);
    }
    for (const auto& h : p.hlines) yr.add(h.y);
    for (const auto& v : p.vlines) xr.add(v.x);
    for (const auto& b : p.bands) yr.add(b.lo), yr.add(b.hi);
    xr.finish();
    yr.finish();
    const auto X = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto Y = [&](double y) { return mt + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(p.width) + "\" height=\"" +
                    std::to_string(p.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape(p.title) + "</text>\n";

    for (const auto& b : p.bands) {
        const double y0 = Y(std::max(b.lo, yr.lo)), y1 = Y(std::min(b.hi, yr.hi));
        s += "<rect x=\"" + detail::num(ml) + "\" y=\"" + detail::num(y1) + "\" width=\"" + detail::num(pw) +
             "\" height=\"" + detail::num(std::max(0.0, y0 - y1)) + "\" fill=\"" + b.color + "\" opacity=\"0.35\"/>\n";
    }

    // Axes and ticks.
    s += "<rect x=\"" + detail::num(ml) + "\" y=\"" + detail::num(mt) + "\" width=\"" + detail::num(pw) +
         "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        s += "<text x=\"" + detail::num(X(xv)) + "\" y=\"" + detail::num(mt + ph + 16) + "\" text-anchor=\"middle\">" +
             detail::tick(xv) + "</text>\n";
        s += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(Y(yv) + 4) + "\" text-anchor=\"end\">" +
             detail::tick(yv) + "</text>\n";
    }
    s += "<text x=\"" + detail::num(ml + pw / 2) + "\" y=\"" + detail::num(H - 8) + "\" text-anchor=\"middle\">" +
         detail::escape(p.xlabel) + "</text>\n";
    s += "<text transform=\"translate(16," + detail::num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(p.ylabel) + "</text>\n";

    for (const auto& h : p.hlines) {
        s += "<line x1=\"" + detail::num(ml) + "\" x2=\"" + detail::num(ml + pw) + "\" y1=\"" + detail::num(Y(h.y)) +
             "\" y2=\"" + detail::num(Y(h.y)) + "\" stroke=\"" + h.color + "\" stroke-dasharray=\"2,3\"/>\n";
        if (!h.label.empty())
            s += "<text x=\"" + detail::num(ml + pw - 4) + "\" y=\"" + detail::num(Y(h.y) - 4) +
                 "\" text-anchor=\"end\" fill=\"" + h.color + "\">" + detail::escape(h.label) + "</text>\n";
    }
    for (const auto& v : p.vlines) {
        s += "<line x1=\"" + detail::num(X(v.x)) + "\" x2=\"" + detail::num(X(v.x)) + "\" y1=\"" + detail::num(mt) +
             "\" y2=\"" + detail::num(mt + ph) + "\" stroke=\"" + v.color + "\" stroke-dasharray=\"5,3\"/>\n";
        if (!v.label.empty())
            s += "<text x=\"" + detail::num(X(v.x) + 4) + "\" y=\"" + detail::num(mt + 14) + "\" fill=\"" + v.color +
                 "\">" + detail::escape(v.label) + "</text>\n";
    }

    int legend = 0;
    for (const auto& l : p.lines) {
        const std::size_t n = std::min(l.x.size(), l.y.size());
        const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < n; i += stride) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) {
                pen = false;
                continue;
            }
            path += (pen ? " L" : " M") + detail::num(X(l.x[i])) + "," + detail::num(Y(l.y[i]));
            pen = true;
        }
        if (!path.empty())
            s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + l.color + "\" stroke-width=\"1.3\"" +
                 (l.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
        if (l.markers)
            for (std::size_t i = 0; i < n; i += stride)
                if (std::isfinite(l.x[i]) && std::isfinite(l.y[i]))
                    s += "<circle cx=\"" + detail::num(X(l.x[i])) + "\" cy=\"" + detail::num(Y(l.y[i])) +
                         "\" r=\"2.2\" fill=\"" + l.color + "\"/>\n";
        if (!l.label.empty()) {
            const double ly = mt + 14 + 16 * legend++;
            s += "<line x1=\"" + detail::num(ml + 10) + "\" x2=\"" + detail::num(ml + 30) + "\" y1=\"" +
                 detail::num(ly - 4) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + l.color + "\"" +
                 (l.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
            s += "<text x=\"" + detail::num(ml + 36) + "\" y=\"" + detail::num(ly) + "\">" + detail::escape(l.label) +
                 "</text>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

/// Space-time heatmap: rows of `values` are time samples, columns are grid
/// points. At most `max_rows` time rows are drawn.
[[nodiscard]] inline std::string heatmap(const Matrix& values, double t0, double dt, const std::string& title,
                                         std::size_t max_rows = 400) {
    constexpr int W = 860, H = 460;
    constexpr double ml = 70, mr = 20, mt = 36, mb = 48;
    const double pw = W - ml - mr, ph = H - mt - mb;
    const auto rows = static_cast<std::size_t>(values.rows());
    const auto cols = static_cast<std::size_t>(values.cols());
    const std::size_t stride = std::max<std::size_t>(1, (rows + max_rows - 1) / std::max<std::size_t>(1, max_rows));
    const double lo = values.size() ? values.minCoeff() : 0.0;
    const double hi = values.size() ? values.maxCoeff() : 1.0;
    const double span = hi > lo ? hi - lo : 1.0;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) + "\" height=\"" +
                    std::to_string(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::num(W / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape(title) + "</text>\n";
    const std::size_t drawn = rows == 0 ? 0 : (rows + stride - 1) / stride;
    const double cw = cols ? pw / static_cast<double>(drawn) : 0.0;
    const double ch = cols ? ph / static_cast<double>(cols) : 0.0;
    for (std::size_t r = 0, col = 0; r < rows; r += stride, ++col) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double u = (values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - lo) / span;
            // Blue-white-red diverging scale.
            const int red = static_cast<int>(255 * std::min(1.0, 2.0 * u));
            const int blue = static_cast<int>(255 * std::min(1.0, 2.0 * (1.0 - u)));
            const int green = std::min(red, blue);
            char color[8];
            std::snprintf(color, sizeof color, "#%02x%02x%02x", red, green, blue);
            s += "<rect x=\"" + detail::num(ml + static_cast<double>(col) * cw) + "\" y=\"" +
                 detail::num(mt + static_cast<double>(c) * ch) + "\" width=\"" + detail::num(cw + 0.5) +
                 "\" height=\"" + detail::num(ch + 0.5) + "\" fill=\"" + color + "\"/>\n";
        }
    }
    s += "<text x=\"" + detail::num(ml) + "\" y=\"" + detail::num(H - 8) + "\">t = " + detail::tick(t0) + "</text>\n";
    s += "<text x=\"" + detail::num(ml + pw) + "\" y=\"" + detail::num(H - 8) + "\" text-anchor=\"end\">t = " +
         detail::tick(t0 + dt * static_cast<double>(rows ? rows - 1 : 0)) + "</text>\n";
    s += "<text transform=\"translate(16," + detail::num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">x</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace tipping::svg

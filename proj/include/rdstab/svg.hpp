#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rdstab/sim.hpp"

namespace rdstab::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += ch;
        }
    }
    return out;
}

/// Blue -> white -> red diverging colormap, v in [-1, 1].
inline std::string diverging(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r, g, b;
    if (v < 0) {
        r = g = static_cast<int>(255 * (1.0 + v));
        b = 255;
    } else {
        r = 255;
        g = b = static_cast<int>(255 * (1.0 - v));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

constexpr double kWidth = 720, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

}  // namespace detail

/// Line plot; with log_y, non-positive values are dropped.
inline std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                             const std::string& ylabel, bool log_y = false) {
    using namespace detail;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && !(s.y[i] > 0.0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - (v - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n"
       << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0;
        const double yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 18)
           << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(xv) << "</text>\n";
        os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << tick(log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(xlabel) << "</text>\n"
       << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << kTop + ph / 2 << ")\">" << escape(ylabel) << "</text>\n";
    int legend = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && !(s.y[i] > 0.0)) continue;
            os << num(px(s.x[i])) << ',' << num(py(ty(s.y[i]))) << ' ';
        }
        os << "\"/>\n";
        const double ly = kTop + 14 + 16 * legend++;
        os << "<line x1=\"" << kLeft + pw - 110 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw - 90 << "\" y2=\"" << ly
           << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << kLeft + pw - 85 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Heatmap of y(t, x): time on the horizontal axis, x vertical.
inline std::string heatmap(const FieldSamples& field, const std::string& title) {
    using namespace detail;
    const std::size_t nt = field.times.size(), nx = field.xs.size();
    double vmax = 0.0;
    for (double v : field.values) vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0) vmax = 1.0;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double cw = nt ? pw / static_cast<double>(nt) : pw;
    const double ch = nx ? ph / static_cast<double>(nx) : ph;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << " (|y| max " << tick(vmax) << ")</text>\n";
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nx; ++j) {
            os << "<rect x=\"" << num(kLeft + cw * i) << "\" y=\"" << num(kTop + ph - ch * (j + 1)) << "\" width=\""
               << num(cw + 0.5) << "\" height=\"" << num(ch + 0.5) << "\" fill=\""
               << diverging(field.values[i * nx + j] / vmax) << "\"/>\n";
        }
    }
    if (nt > 0) {
        for (int k = 0; k <= 4; ++k) {
            const std::size_t i = std::min(nt - 1, static_cast<std::size_t>(k * (nt - 1) / 4));
            os << "<text x=\"" << num(kLeft + cw * (i + 0.5)) << "\" y=\"" << num(kTop + ph + 18)
               << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(field.times[i]) << "</text>\n";
        }
    }
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + ph << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n"
       << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\" font-size=\"11\">1</text>\n"
       << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
       << "\" text-anchor=\"middle\" font-size=\"12\">t (s)</text>\n"
       << "<text x=\"30\" y=\"" << kTop + ph / 2 << "\" font-size=\"12\">x</text>\n"
       << "</svg>\n";
    return os.str();
}

}  // namespace rdstab::svg

#pragma once

// Minimal deterministic SVG line plots; no plotting dependency. Output bytes
// are a pure function of the input series and spec.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace neckflow::svg {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logx = false;
    bool logy = false;
    int width = 720;
    int height = 480;
    std::string comment;  // e.g. the config hash
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f6fb4", "#d1495b", "#3a7d44", "#8c5383",
                                   "#c77b21", "#4b707e", "#756bb1", "#636363"};
    return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace detail

inline std::string render(const PlotSpec& spec, const std::vector<Series>& series) {
    const double ml = 70, mr = 20, mt = 36, mb = 48;
    const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
    auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (spec.logx && !(x > 0)) continue;
            if (spec.logy && !(y > 0)) continue;
            xmin = std::min(xmin, tx(x));
            xmax = std::max(xmax, tx(x));
            ymin = std::min(ymin, ty(y));
            ymax = std::max(ymax, ty(y));
        }
    }
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymax > ymin)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.04 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;
    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
           "\" height=\"" + std::to_string(spec.height) + "\">\n";
    if (!spec.comment.empty()) out += "<!-- " + spec.comment + " -->\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + detail::fmt("%.1f", ml + pw / 2) +
           "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           spec.title + "</text>\n";

    // axes box and ticks
    out += "<rect x=\"" + detail::fmt("%.1f", ml) + "\" y=\"" + detail::fmt("%.1f", mt) +
           "\" width=\"" + detail::fmt("%.1f", pw) + "\" height=\"" + detail::fmt("%.1f", ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / nticks;
        const double fy = ymin + (ymax - ymin) * i / nticks;
        const double gx = ml + pw * i / nticks;
        const double gy = mt + ph - ph * i / nticks;
        const double vx = spec.logx ? std::pow(10.0, fx) : fx;
        const double vy = spec.logy ? std::pow(10.0, fy) : fy;
        out += "<line x1=\"" + detail::fmt("%.1f", gx) + "\" y1=\"" +
               detail::fmt("%.1f", mt + ph) + "\" x2=\"" + detail::fmt("%.1f", gx) +
               "\" y2=\"" + detail::fmt("%.1f", mt + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fmt("%.1f", gx) + "\" y=\"" +
               detail::fmt("%.1f", mt + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::fmt("%.3g", vx) + "</text>\n";
        out += "<line x1=\"" + detail::fmt("%.1f", ml - 5) + "\" y1=\"" +
               detail::fmt("%.1f", gy) + "\" x2=\"" + detail::fmt("%.1f", ml) + "\" y2=\"" +
               detail::fmt("%.1f", gy) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fmt("%.1f", ml - 8) + "\" y=\"" +
               detail::fmt("%.1f", gy + 3) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::fmt("%.3g", vy) + "</text>\n";
    }
    out += "<text x=\"" + detail::fmt("%.1f", ml + pw / 2) + "\" y=\"" +
           detail::fmt("%.1f", mt + ph + 36) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           spec.xlabel + "</text>\n";
    out += "<text x=\"16\" y=\"" + detail::fmt("%.1f", mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\""
           "rotate(-90 16 " +
           detail::fmt("%.1f", mt + ph / 2) + ")\">" + spec.ylabel + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (spec.logx && !(x > 0)) continue;
            if (spec.logy && !(y > 0)) continue;
            pts += detail::fmt("%.2f", px(x)) + "," + detail::fmt("%.2f", py(y)) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(si)) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        out += "<text x=\"" + detail::fmt("%.1f", ml + pw - 6) + "\" y=\"" +
               detail::fmt("%.1f", mt + 16 + 14.0 * si) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
               detail::palette(si) + "\">" + s.name + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace neckflow::svg

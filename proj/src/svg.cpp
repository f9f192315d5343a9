// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace raycal {

namespace {

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
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

// Piecewise-linear dark blue -> teal -> yellow ramp.
std::string ramp(double t)
{
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                  static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                  static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return buf;
}

std::string header(int w, int h)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start")
{
    return "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", y) + "\" text-anchor=\"" + anchor + "\">" +
           escape(s) + "</text>\n";
}

std::string line(double x0, double y0, double x1, double y1, const char* color, double width = 1.0)
{
    return "<line x1=\"" + fmt("%.2f", x0) + "\" y1=\"" + fmt("%.2f", y0) + "\" x2=\"" + fmt("%.2f", x1) +
           "\" y2=\"" + fmt("%.2f", y1) + "\" stroke=\"" + color + "\" stroke-width=\"" + fmt("%.2f", width) +
           "\"/>\n";
}

struct Frame {
    double left = 70, top = 40, width = 560, height = 300;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    double px(double x) const { return left + (x - xmin) / (xmax - xmin) * width; }
    double py(double y) const { return top + height - (y - ymin) / (ymax - ymin) * height; }

    std::string axes(const std::string& xlabel, const std::string& ylabel) const
    {
        std::string s = line(left, top + height, left + width, top + height, "black") +
                        line(left, top, left, top + height, "black");
        for (int k = 0; k <= 4; ++k) {
            const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
            s += text(px(xv), top + height + 16, fmt("%.4g", xv), "middle");
            s += text(left - 6, py(yv) + 4, fmt("%.4g", yv), "end");
        }
        s += text(left + width / 2, top + height + 34, xlabel, "middle");
        s += "<text x=\"16\" y=\"" + fmt("%.1f", top + height / 2) + "\" transform=\"rotate(-90 16 " +
             fmt("%.1f", top + height / 2) + ")\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
        return s;
    }
};

double to_db(const std::complex<double>& c) { return 20.0 * std::log10(std::max(std::abs(c), 1e-30)); }

} // namespace

std::string svg_heatmap(const HeatmapGrid& g, const std::string& title, const std::string& unit)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : g.values)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo <= hi)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi == lo)
        hi = lo + 1.0;
    const double cell = std::max(2.0, std::min(600.0 / std::max<std::size_t>(1, g.nx), 400.0 / std::max<std::size_t>(1, g.ny)));
    const double w = cell * g.nx, h = cell * g.ny;
    const double left = 20, top = 40;
    std::string s = header(static_cast<int>(left + w + 120), static_cast<int>(top + h + 50));
    s += text(left, 24, title);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double v = g.values[j * g.nx + i];
            const std::string color = std::isfinite(v) ? ramp((v - lo) / (hi - lo)) : "#dddddd";
            // Row 0 is the lowest y, drawn at the bottom.
            s += "<rect x=\"" + fmt("%.2f", left + i * cell) + "\" y=\"" + fmt("%.2f", top + (g.ny - 1 - j) * cell) +
                 "\" width=\"" + fmt("%.2f", cell) + "\" height=\"" + fmt("%.2f", cell) + "\" fill=\"" + color +
                 "\"/>\n";
        }
    for (int k = 0; k <= 10; ++k) {
        const double t = k / 10.0;
        s += "<rect x=\"" + fmt("%.1f", left + w + 20) + "\" y=\"" + fmt("%.1f", top + (1 - t) * (h - h / 11)) +
             "\" width=\"16\" height=\"" + fmt("%.2f", h / 11) + "\" fill=\"" + ramp(t) + "\"/>\n";
    }
    s += text(left + w + 40, top + 10, fmt("%.1f", hi) + " " + unit);
    s += text(left + w + 40, top + h, fmt("%.1f", lo) + " " + unit);
    s += text(left, top + h + 20,
              "x " + fmt("%.2f", g.x0) + ".." + fmt("%.2f", g.x1) + " m, y " + fmt("%.2f", g.y0) + ".." +
                  fmt("%.2f", g.y1) + " m");
    s += "</svg>\n";
    return s;
}

std::string svg_cir_stem(std::span<const std::complex<double>> measured,
                         std::span<const std::complex<double>> predicted, const std::string& title)
{
    const std::size_t n = std::max(measured.size(), predicted.size());
    Frame f;
    f.xmin = -static_cast<double>(n / 2);
    f.xmax = static_cast<double>(n) - static_cast<double>(n / 2) - 1.0;
    double peak = -300.0;
    for (const auto& c : measured)
        peak = std::max(peak, to_db(c));
    for (const auto& c : predicted)
        peak = std::max(peak, to_db(c));
    f.ymax = std::ceil(peak / 10.0) * 10.0;
    f.ymin = f.ymax - 60.0;
    std::string s = header(680, 400);
    s += text(f.left, 24, title);
    s += f.axes("tap index", "|h| (dB)");
    auto stems = [&](std::span<const std::complex<double>> h, const char* color, double offset) {
        std::string out;
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double x = tap_index(k, h.size()) + offset;
            const double y = std::max(f.ymin, to_db(h[k]));
            out += line(f.px(x), f.py(f.ymin), f.px(x), f.py(y), color);
            out += "<circle cx=\"" + fmt("%.2f", f.px(x)) + "\" cy=\"" + fmt("%.2f", f.py(y)) + "\" r=\"1.8\" fill=\"" +
                   color + "\"/>\n";
        }
        return out;
    };
    s += stems(measured, "#1f77b4", -0.15);
    s += stems(predicted, "#d62728", 0.15);
    s += text(f.left + f.width - 150, f.top + 12, "measured", "start");
    s += line(f.left + f.width - 170, f.top + 8, f.left + f.width - 155, f.top + 8, "#1f77b4", 2);
    s += text(f.left + f.width - 150, f.top + 28, "predicted", "start");
    s += line(f.left + f.width - 170, f.top + 24, f.left + f.width - 155, f.top + 24, "#d62728", 2);
    s += "</svg>\n";
    return s;
}

std::string svg_loss_curve(std::span<const LogRow> history)
{
    Frame f;
    f.xmin = 0.0;
    f.xmax = history.empty() ? 1.0 : static_cast<double>(history.back().iteration);
    f.ymin = 0.0;
    double top = 0.0;
    for (const auto& r : history)
        top = std::max({top, r.loss, r.validation});
    f.ymax = top > 0.0 ? top * 1.05 : 1.0;
    std::string s = header(680, 400);
    s += text(f.left, 24, "training loss");
    s += f.axes("iteration", "loss");
    std::string train = "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" points=\"";
    std::string val = "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    bool any_val = false;
    for (const auto& r : history) {
        train += fmt("%.2f", f.px(static_cast<double>(r.iteration))) + "," + fmt("%.2f", f.py(r.loss)) + " ";
        if (r.validation >= 0.0) {
            val += fmt("%.2f", f.px(static_cast<double>(r.iteration))) + "," + fmt("%.2f", f.py(r.validation)) + " ";
            any_val = true;
        }
    }
    s += train + "\"/>\n";
    if (any_val)
        s += val + "\"/>\n";
    s += "</svg>\n";
    return s;
}

} // namespace raycal

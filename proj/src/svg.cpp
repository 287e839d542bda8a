#include "sketchlab/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "sketchlab/csvio.hpp"
#include "sketchlab/errors.hpp"

namespace sketchlab {

namespace {

constexpr double kWidth = 880.0, kHeight = 560.0;
constexpr double kLeft = 70.0, kRight = 690.0, kTop = 46.0, kBottom = 505.0;

const char* const kPalette[] = {"#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
                                "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

std::string num(double v) {  // short fixed-ish form for coordinates and ticks
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
    return {buf, res.ptr};
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    if (norm <= 1.0) return mag;
    if (norm <= 2.0) return 2.0 * mag;
    if (norm <= 5.0) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgChart::add_series(const std::string& name, std::vector<double> xs,
                          std::vector<double> ys) {
    if (xs.size() != ys.size()) throw ConfigError("series x and y lengths must match");
    series_.push_back(Series{name, std::move(xs), std::move(ys), false});
}

void SvgChart::add_hline(double y, const std::string& name) {
    series_.push_back(Series{name, {}, {y}, true});
}

std::string SvgChart::render() const {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_) {
        for (const double x : s.xs) {
            if (!std::isfinite(x)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        for (const double y : s.ys) {
            if (!std::isfinite(y)) continue;
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin < xmax)) {
        xmin = std::isfinite(xmin) ? xmin - 1.0 : 0.0;
        xmax = xmin + 2.0;
    }
    if (!(ymin < ymax)) {
        ymin = std::isfinite(ymin) ? ymin - 1.0 : 0.0;
        ymax = ymin + 2.0;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const auto px = [&](double x) {
        return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft);
    };
    const auto py = [&](double y) {
        return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
           "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
           num(kHeight) + "\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num((kLeft + kRight) / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + escape(title_) +
           "</text>\n";

    // Grid and ticks.
    const double xstep = nice_step(xmax - xmin);
    const double ystep = nice_step(ymax - ymin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
        const double x = px(t);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(kBottom) + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 18) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
        const double y = py(t);
        svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kRight) +
               "\" y2=\"" + num(y) + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kHeight - 14) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + escape(x_label_) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + num((kTop + kBottom) / 2) +
           "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " +
           num((kTop + kBottom) / 2) + ")\">" + escape(y_label_) + "</text>\n";

    // Series and legend.
    std::size_t color = 0;
    double legend_y = kTop + 10;
    for (const auto& s : series_) {
        const std::string stroke = kPalette[color % kPaletteSize];
        ++color;
        if (s.hline) {
            const double y = py(s.ys[0]);
            svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" +
                   num(kRight) + "\" y2=\"" + num(y) + "\" stroke=\"" + stroke +
                   "\" stroke-dasharray=\"6 4\"/>\n";
        } else {
            std::string points;
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
                if (!points.empty()) points += ' ';
                points += num(px(s.xs[i])) + "," + num(py(s.ys[i]));
            }
            svg += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"" +
                   points + "\"/>\n";
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
                svg += "<circle cx=\"" + num(px(s.xs[i])) + "\" cy=\"" + num(py(s.ys[i])) +
                       "\" r=\"2.2\" fill=\"" + stroke + "\"/>\n";
            }
        }
        svg += "<line x1=\"" + num(kRight + 14) + "\" y1=\"" + num(legend_y) + "\" x2=\"" +
               num(kRight + 34) + "\" y2=\"" + num(legend_y) + "\" stroke=\"" + stroke +
               (s.hline ? "\" stroke-dasharray=\"6 4\"/>\n" : "\"/>\n");
        svg += "<text x=\"" + num(kRight + 40) + "\" y=\"" + num(legend_y + 4) +
               "\" font-size=\"11\">" + escape(s.name) + "</text>\n";
        legend_y += 18;
    }
    svg += "</svg>\n";
    return svg;
}

void SvgChart::save(const std::string& path) const { write_text_file(path, render()); }

}  // namespace sketchlab

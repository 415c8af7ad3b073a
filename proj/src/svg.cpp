#include "cwf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cwf {

namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

void header(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";
}

void y_axis(std::ostringstream& out, const Range& r) {
    const double plot_h = kHeight - kTop - kBottom;
    for (int i = 0; i <= 5; ++i) {
        const double v = r.lo + (r.hi - r.lo) * i / 5.0;
        const double y = kTop + plot_h * (1.0 - i / 5.0);
        out << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << fixed(y) << "\" y2=\""
            << fixed(y) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">" << fixed(v, 3)
            << "</text>\n";
    }
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << kTop << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<LineSeries>& series) {
    std::ostringstream out;
    header(out, title);
    Range r;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) r.add(v);
    }
    r.finish();
    y_axis(out, r);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto x_of = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * i / double(n - 1) : plot_w / 2); };
    const auto y_of = [&](double v) { return kTop + plot_h * (r.hi - v) / (r.hi - r.lo); };

    const std::size_t ticks = std::min<std::size_t>(8, x_labels.size());
    for (std::size_t k = 0; k < ticks; ++k) {
        const std::size_t i = ticks > 1 ? k * (x_labels.size() - 1) / (ticks - 1) : 0;
        out << "<text x=\"" << fixed(x_of(i)) << "\" y=\"" << kHeight - kBottom + 16
            << "\" text-anchor=\"middle\">" << escape(x_labels[i]) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        out << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" stroke-width=\"1.2\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[s].values.size(); ++i) {
            if (!std::isfinite(series[s].values[i])) continue;
            out << (first ? "" : " ") << fixed(x_of(i)) << ',' << fixed(y_of(series[s].values[i]));
            first = false;
        }
        out << "\"/>\n";
        const double ly = kHeight - 18.0;
        const double lx = kLeft + 200.0 * s;
        out << "<rect x=\"" << lx << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"4\" fill=\""
            << series[s].color << "\"/>\n";
        out << "<text x=\"" << lx + 16 << "\" y=\"" << ly - 4 << "\">" << escape(series[s].label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
    std::ostringstream out;
    header(out, title);
    Range r;
    r.add(0.0);
    for (double v : values) r.add(v);
    r.finish();
    y_axis(out, r);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto y_of = [&](double v) { return kTop + plot_h * (r.hi - v) / (r.hi - r.lo); };
    const double slot = values.empty() ? plot_w : plot_w / values.size();
    const double zero = y_of(0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::isfinite(values[i]) ? values[i] : 0.0;
        const double x = kLeft + slot * i + slot * 0.15;
        const double y = std::min(zero, y_of(v));
        const double h = std::abs(y_of(v) - zero);
        out << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"" << fixed(slot * 0.7)
            << "\" height=\"" << fixed(h) << "\" fill=\"" << (v >= 0 ? "#2a9d4b" : "#c0392b") << "\"/>\n";
        if (i < labels.size()) {
            const double cx = kLeft + slot * (i + 0.5);
            out << "<text x=\"" << fixed(cx) << "\" y=\"" << kHeight - kBottom + 14
                << "\" text-anchor=\"end\" transform=\"rotate(-45 " << fixed(cx) << ' ' << kHeight - kBottom + 14
                << ")\">" << escape(labels[i]) << "</text>\n";
        }
    }
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << fixed(zero) << "\" y2=\""
        << fixed(zero) << "\" stroke=\"black\"/>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace cwf

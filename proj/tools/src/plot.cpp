#include "activeid/tools/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "activeid/errors.hpp"

namespace activeid::tools {
namespace {

constexpr double kW = 640, kH = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string f2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::string render_svg(const Report& report, const std::string& title) {
    std::map<std::string, std::vector<PercentileRow>> series;
    double lo = INFINITY, hi = 0.0;
    int    max_epoch = 0;
    std::map<int, long> epoch_T;
    for (const auto& r : report.rows) {
        if (!(r.median > 0.0) || !std::isfinite(r.median)) continue;
        series[r.policy].push_back(r);
        for (double v : {r.p10, r.median, r.p90})
            if (v > 0.0 && std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        max_epoch = std::max(max_epoch, r.epoch);
        epoch_T[r.epoch] = std::max(epoch_T[r.epoch], r.T);
    }
    if (series.empty()) throw ConfigError("plot: report has no rows with positive finite errors");

    const double ylo = std::floor(std::log10(lo));
    double       yhi = std::ceil(std::log10(hi));
    if (yhi <= ylo) yhi = ylo + 1.0;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto X = [&](int epoch) { return kLeft + (max_epoch == 0 ? 0.5 * pw : pw * epoch / max_epoch); };
    auto Y = [&](double v) {
        v = std::clamp(v, std::pow(10.0, ylo), std::pow(10.0, yhi));
        return kTop + ph * (yhi - std::log10(v)) / (yhi - ylo);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
       << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << f2(kLeft + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
       << "</text>\n";

    os << "<g stroke=\"#dddddd\">\n";
    for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); ++e) {
        const double y = Y(std::pow(10.0, e));
        os << "<line x1=\"" << f2(kLeft) << "\" y1=\"" << f2(y) << "\" x2=\"" << f2(kLeft + pw) << "\" y2=\"" << f2(y)
           << "\"/>\n";
    }
    os << "</g>\n<g>\n";
    for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); ++e)
        os << "<text x=\"" << f2(kLeft - 6) << "\" y=\"" << f2(Y(std::pow(10.0, e)) + 4)
           << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    for (const auto& [epoch, T] : epoch_T)
        os << "<text x=\"" << f2(X(epoch)) << "\" y=\"" << f2(kTop + ph + 16) << "\" text-anchor=\"middle\">" << T
           << "</text>\n";
    os << "<text x=\"" << f2(kLeft + pw / 2) << "\" y=\"" << f2(kH - 10) << "\" text-anchor=\"middle\">samples T</text>\n";
    os << "</g>\n";
    os << "<rect x=\"" << f2(kLeft) << "\" y=\"" << f2(kTop) << "\" width=\"" << f2(pw) << "\" height=\"" << f2(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    std::size_t idx = 0;
    for (auto& [policy, rows] : series) {
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
        const char* color = kColors[idx % (sizeof kColors / sizeof kColors[0])];
        os << "<g class=\"series\" data-policy=\"" << escape(policy) << "\">\n";
        os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (const auto& r : rows) os << f2(X(r.epoch)) << ',' << f2(Y(r.p90)) << ' ';
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) os << f2(X(it->epoch)) << ',' << f2(Y(it->p10)) << ' ';
        os << "\"/>\n";
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < rows.size(); ++i)
            os << (i ? " " : "") << f2(X(rows[i].epoch)) << ',' << f2(Y(rows[i].median));
        os << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(idx);
        os << "<line x1=\"" << f2(kW - kRight + 12) << "\" y1=\"" << f2(ly) << "\" x2=\"" << f2(kW - kRight + 32)
           << "\" y2=\"" << f2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << f2(kW - kRight + 38) << "\" y=\"" << f2(ly + 4) << "\">" << escape(policy) << "</text>\n";
        os << "</g>\n";
        ++idx;
    }
    os << "</svg>\n";
    return os.str();
}

void emit_plot(const Report& report, const std::string& path, const std::string& title) {
    const std::string svg = render_svg(report, title);
    std::ofstream     out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << svg;
}

}  // namespace activeid::tools

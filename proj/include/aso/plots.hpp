#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "aso/simulation.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// Static line plots (self-contained SVG, one file per figure family)
// ============================================================================

struct PlotSeries {
    std::string label;
    const std::vector<double>* t = nullptr;
    std::vector<double> v;
    std::string color = "#1f77b4";
    bool dashed = false;
};

namespace detail {

inline std::string svg_polyline(const std::vector<double>& t, const std::vector<double>& v,
                                double t0, double t1, double v0, double v1, double x0,
                                double y0, double w, double h, const std::string& color,
                                bool dashed) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\"";
    if (dashed) os << " stroke-dasharray=\"4 3\"";
    os << " points=\"";
    const double tspan = std::max(t1 - t0, 1e-300);
    const double vspan = std::max(v1 - v0, 1e-300);
    for (std::size_t k = 0; k < t.size() && k < v.size(); ++k) {
        if (!std::isfinite(v[k])) continue;
        const double px = x0 + w * (t[k] - t0) / tspan;
        const double py = y0 + h * (1.0 - (v[k] - v0) / vspan);
        os << px << "," << py << " ";
    }
    os << "\"/>\n";
    return os.str();
}

} // namespace detail

// One axes panel per call; panels stack vertically inside a single SVG.
class SvgPlot {
public:
    SvgPlot(std::string title, int width = 900, int panel_height = 220)
        : title_(std::move(title)), width_(width), panel_height_(panel_height) {}

    void add_panel(const std::string& name, const std::vector<PlotSeries>& series) {
        panels_.push_back({name, series});
    }

    void write(const std::string& path) const {
        const int margin = 50;
        const int header = 30;
        const int total_h = header + static_cast<int>(panels_.size()) * (panel_height_ + 30);
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot open plot file: " + path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
            << total_h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\">" << title_
            << "</text>\n";
        int y_top = header;
        for (const auto& [name, series] : panels_) {
            double t0 = 0, t1 = 1, v0 = 0, v1 = 1;
            bool first = true;
            for (const auto& s : series) {
                if (!s.t || s.t->empty()) continue;
                for (std::size_t k = 0; k < s.t->size() && k < s.v.size(); ++k) {
                    if (!std::isfinite(s.v[k])) continue;
                    if (first) {
                        t0 = t1 = (*s.t)[k];
                        v0 = v1 = s.v[k];
                        first = false;
                    }
                    t0 = std::min(t0, (*s.t)[k]);
                    t1 = std::max(t1, (*s.t)[k]);
                    v0 = std::min(v0, s.v[k]);
                    v1 = std::max(v1, s.v[k]);
                }
            }
            if (v1 - v0 < 1e-12) { v0 -= 1.0; v1 += 1.0; }
            const double px = margin, pw = width_ - margin - 20;
            const double py = y_top + 10, ph = panel_height_ - 40;
            out << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << pw << "\" height=\""
                << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";
            out << "<text x=\"" << px << "\" y=\"" << py - 2
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
            // axis labels
            out << "<text x=\"" << px << "\" y=\"" << py + ph + 14
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << t0 << "</text>\n";
            out << "<text x=\"" << px + pw - 30 << "\" y=\"" << py + ph + 14
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << t1 << "</text>\n";
            out << "<text x=\"2\" y=\"" << py + 10
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << v1 << "</text>\n";
            out << "<text x=\"2\" y=\"" << py + ph
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << v0 << "</text>\n";
            double legend_x = px + 5;
            for (const auto& s : series) {
                if (!s.t) continue;
                out << detail::svg_polyline(*s.t, s.v, t0, t1, v0, v1, px, py, pw, ph, s.color,
                                            s.dashed);
                out << "<text x=\"" << legend_x << "\" y=\"" << py + ph + 26
                    << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" << s.color
                    << "\">" << s.label << "</text>\n";
                legend_x += 12.0 * (s.label.size() + 2) * 0.6;
            }
            y_top += panel_height_ + 30;
        }
        out << "</svg>\n";
    }

private:
    std::string title_;
    int width_, panel_height_;
    std::vector<std::pair<std::string, std::vector<PlotSeries>>> panels_;
};

namespace detail {

inline std::vector<double> component(const std::vector<Vector>& vs, Index j) {
    std::vector<double> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(j < v.size() ? v[j] : std::nan(""));
    return out;
}

inline std::vector<double> bools(const std::vector<uint8_t>& vs) {
    return {vs.begin(), vs.end()};
}

} // namespace detail

// Emits the standard figure families for a finished run:
//   parameters.svg  - interval endpoints vs the true parameter,
//   conditions.svg  - running equilibrium estimates (branch-test inputs),
//   states.svg      - plant state inside the state-observer envelope,
//   indicators.svg  - aggregate fault indicators.
inline void emit_plot_files(const std::string& dir, const RunResult& rr) {
    const Series& se = rr.series;
    const Index q = se.theta_hat_m.empty() ? 0 : se.theta_hat_m.front().size();
    const Index n = se.x.empty() ? 0 : se.x.front().size();

    {
        SvgPlot plot("parameter interval estimates: " + rr.scenario);
        for (Index j = 0; j < q; ++j) {
            std::vector<PlotSeries> s;
            s.push_back({"theta_hat_m", &se.t, detail::component(se.theta_hat_m, j), "#1f77b4", false});
            s.push_back({"theta_hat_M", &se.t, detail::component(se.theta_hat_M, j), "#d62728", false});
            s.push_back({"theta", &se.t, detail::component(se.theta_true, j), "#2ca02c", true});
            plot.add_panel("component " + std::to_string(j + 1), s);
        }
        plot.write(dir + "/parameters.svg");
    }
    {
        SvgPlot plot("running equilibrium estimates: " + rr.scenario);
        for (Index j = 0; j < q; ++j) {
            std::vector<PlotSeries> s;
            s.push_back({"theta_bar_inf_m", &se.t, detail::component(se.theta_bar_m, j), "#1f77b4", false});
            s.push_back({"theta_bar_inf_M", &se.t, detail::component(se.theta_bar_M, j), "#d62728", false});
            s.push_back({"theta", &se.t, detail::component(se.theta_true, j), "#2ca02c", true});
            plot.add_panel("component " + std::to_string(j + 1), s);
        }
        plot.write(dir + "/conditions.svg");
    }
    {
        SvgPlot plot("state envelopes: " + rr.scenario);
        for (Index i = 0; i < n; ++i) {
            std::vector<PlotSeries> s;
            s.push_back({"xi_m", &se.t, detail::component(se.xi_m, i), "#1f77b4", false});
            s.push_back({"xi_M", &se.t, detail::component(se.xi_M, i), "#d62728", false});
            s.push_back({"x", &se.t, detail::component(se.x, i), "#2ca02c", true});
            plot.add_panel("state " + std::to_string(i + 1), s);
        }
        plot.write(dir + "/states.svg");
    }
    {
        SvgPlot plot("fault indicators: " + rr.scenario);
        plot.add_panel("S", {{"S", &se.t, detail::bools(se.S), "#d62728", false}});
        plot.add_panel("D", {{"D", &se.t, detail::bools(se.D), "#1f77b4", false}});
        plot.add_panel("Z", {{"Z", &se.t, detail::bools(se.Z), "#2ca02c", false}});
        plot.write(dir + "/indicators.svg");
    }
}

} // namespace aso

#include "agl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace agl {

using nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

void write_header(std::ofstream& out, const Provenance& prov) {
    for (const auto& [k, v] : prov) out << "# " << k << " = " << v << '\n';
}

ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

// Shortest text that reads back to the same double.
std::string format_number(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const Provenance& prov, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<std::string>> text;
    text.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> t;
        for (double x : row) t.push_back(format_number(x));
        text.push_back(std::move(t));
    }
    write_csv_text(path, prov, columns, text);
}

void write_csv_text(const std::string& path, const Provenance& prov, const std::vector<std::string>& columns,
                    const std::vector<std::vector<std::string>>& rows) {
    auto out = open_out(path);
    write_header(out, prov);
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size()) throw ShapeError("write_csv: row width does not match header");
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
}

void write_json(const std::string& path, const Provenance& prov, ordered_json body) {
    ordered_json doc;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : prov) cfg[k] = v;
    doc["config"] = cfg;
    doc["result"] = std::move(body);
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

ordered_json to_json(const ValidationReport<double>& v) {
    return {{"ok", v.ok()},
            {"monotone", v.monotone},
            {"in_range", v.in_range},
            {"ratio_bound", v.ratio_bound},
            {"boundary_defect", number(v.boundary_defect)},
            {"matching_radius", number(v.matching_radius)},
            {"far_field_defect", number(v.far_field_defect)},
            {"far_field_scaled", number(v.far_field_scaled)}};
}

ordered_json to_json(const StabilityReport<double>& rep) {
    ordered_json modes = ordered_json::array();
    for (const auto& m : rep.modes)
        modes.push_back({{"n", m.n},
                         {"lambda_min", number(m.lambda_min)},
                         {"evidence", evidence_name(m.evidence)},
                         {"note", m.note}});
    ordered_json j = {{"delta", rep.delta},
                      {"verdict", verdict_name(rep.overall)},
                      {"tail_condition", tail_name(rep.tail)},
                      {"n_max_scanned", rep.n_max_scanned},
                      {"modes", modes}};
    if (rep.positive_witness) j["positive_witness"] = to_json(*rep.positive_witness);
    if (rep.high_mode_witness) j["high_mode_witness"] = to_json(*rep.high_mode_witness);
    return j;
}

ordered_json to_json(const Delta1Estimate<double>& est) {
    ordered_json probes = ordered_json::array();
    for (const auto& p : est.probes) probes.push_back(to_json(p));
    return {{"lo", est.lo},
            {"hi", est.hi},
            {"lo_witnessed", est.lo_witnessed},
            {"inconclusive", est.inconclusive},
            {"inconclusive_at", est.inconclusive_at},
            {"probes", probes}};
}

ordered_json to_json(const PositiveDeltaWitness<double>& w) {
    return {{"kind", "positive_delta"},
            {"delta", w.delta},
            {"lambda", w.lambda},
            {"dilation", w.dilation},
            {"support", {w.support_lo, w.support_hi}},
            {"grid_nodes", w.grid.size()},
            {"form_value", number(w.form_value)},
            {"analytic_limit", w.analytic_limit}};
}

ordered_json to_json(const HighModeWitness<double>& w) {
    return {{"kind", "high_mode"},
            {"delta", w.delta},
            {"n", w.n},
            {"window", {w.r0, w.r1}},
            {"epsilon", w.epsilon},
            {"form_value", number(w.form_value)}};
}

ordered_json to_json(const HighModeAttempt<double>& a, double delta, int n) {
    ordered_json j = {{"delta", delta},
                      {"n", n},
                      {"window_found", a.window_found},
                      {"diagnostic", a.diagnostic}};
    if (a.window_found) {
        j["window"] = {a.r0, a.r0 + 1};
        j["epsilon"] = a.epsilon;
        j["form_value"] = number(a.form_value);
        j["C1"] = a.C1;
        j["C2"] = a.C2;
        j["bound"] = a.bound;
    }
    if (a.witness) j["witness"] = to_json(*a.witness);
    return j;
}

void write_profile_csv(const std::string& path, const Provenance& prov, const Profile<double>& p) {
    std::vector<std::vector<double>> rows;
    rows.reserve(p.grid.size());
    for (Eigen::Index i = 0; i < p.grid.size(); ++i) rows.push_back({p.grid.nodes(i), p.f(i), p.df(i), p.ddf(i)});
    write_csv(path, prov, {"r", "f0", "df0", "ddf0"}, rows);
}

void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series) {
    const double W = 720, H = 480, left = 80, right = 160, top = 40, bottom = 60;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    auto out = open_out(path);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  W, H);
    out << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">", W / 2);
    out << buf << xml_escape(title) << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", left,
                  top, W - left - right, H - top - bottom);
    out << buf;
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n", px(xv),
                      H - bottom + 18, xv);
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", left - 6,
                      py(yv) + 4, yv);
        out << buf;
    }
    if (y0 < 0 && y1 > 0) {
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                      left, py(0), W - right, py(0));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", (left + W - right) / 2,
                  H - 16);
    out << buf << xml_escape(xlabel) << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text transform=\"translate(18 %.1f) rotate(-90)\" text-anchor=\"middle\">",
                  (top + H - bottom) / 2);
    out << buf << xml_escape(ylabel) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 10];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            out << buf;
        }
        out << "\"/>\n";
        const double ly = top + 16 + 18 * double(k);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\">",
                      W - right + 12, ly, W - right + 36, ly, color, W - right + 42, ly + 4);
        out << buf << xml_escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace agl

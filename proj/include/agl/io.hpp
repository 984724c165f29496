#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "agl/certificates.hpp"
#include "agl/spectrum.hpp"

namespace agl {

// Effective run settings, echoed as "# key = value" lines and as a JSON object.
using Provenance = std::vector<std::pair<std::string, std::string>>;

std::string format_number(double x);

void write_csv(const std::string& path, const Provenance& prov, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Mixed-type rows; cells are written verbatim.
void write_csv_text(const std::string& path, const Provenance& prov, const std::vector<std::string>& columns,
                    const std::vector<std::vector<std::string>>& rows);

void write_json(const std::string& path, const Provenance& prov, nlohmann::ordered_json body);

nlohmann::ordered_json to_json(const ValidationReport<double>& v);
nlohmann::ordered_json to_json(const StabilityReport<double>& rep);
nlohmann::ordered_json to_json(const Delta1Estimate<double>& est);
nlohmann::ordered_json to_json(const PositiveDeltaWitness<double>& w);
nlohmann::ordered_json to_json(const HighModeWitness<double>& w);
nlohmann::ordered_json to_json(const HighModeAttempt<double>& a, double delta, int n);

void write_profile_csv(const std::string& path, const Provenance& prov, const Profile<double>& p);

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
};

// Minimal SVG line plot with linear axes, tick labels and a legend.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<PlotSeries>& series);

}  // namespace agl

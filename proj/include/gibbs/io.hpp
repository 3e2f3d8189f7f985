#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbs/thermo.hpp"

namespace gibbs {

// Formats a double with 17 significant digits, lowercase e-notation.
std::string format_number(double v);

// Writes content to path atomically (temp file in the same directory, then
// rename). Interrupted runs never leave a partial file at the target.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string curve_csv(const PressureCurve& curve);
std::string skew_csv(const SkewReport& report);
std::string eigenvector_csv(const SpectralReport& report);
nlohmann::json report_json(const SpectralReport& report);
nlohmann::json scan_json(const ScanResult& scan);
std::string gnuplot_script(const std::string& csv_name, const std::string& title);

}  // namespace gibbs

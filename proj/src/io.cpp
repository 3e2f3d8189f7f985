#include "gibbs/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gibbs {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string curve_csv(const PressureCurve& curve) {
  std::ostringstream os;
  os << "t,P,P_fd,P_mu,P2_fd,gap_ratio,converged,label,margin\n";
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    os << format_number(curve.t[k]) << ',' << format_number(curve.P[k]) << ','
       << format_number(curve.P_fd[k]) << ',' << format_number(curve.P_mu[k]) << ','
       << format_number(curve.P2_fd[k]) << ',' << format_number(curve.gap_ratio[k]) << ','
       << (curve.converged[k] ? 1 : 0) << ',' << curve.label[k] << ','
       << format_number(curve.margin[k]) << '\n';
  }
  return os.str();
}

std::string skew_csv(const SkewReport& report) {
  std::ostringstream os;
  os << "t,P,P_fd,P_mu,P2_fd,gap_ratio,converged,label,margin";
  for (std::size_t j = 0; j < report.fiber_boundary_P.size(); ++j)
    os << ",P_fiber_boundary_" << j;
  for (std::size_t i = 0; i < report.base_boundary_P.size(); ++i)
    os << ",P_base_boundary_" << i;
  os << '\n';
  for (std::size_t k = 0; k < report.t.size(); ++k) {
    os << format_number(report.t[k]) << ',' << format_number(report.P_full[k])
       << ",nan,nan,nan,nan," << (report.converged[k] ? 1 : 0) << ',' << report.label[k]
       << ',' << format_number(report.margin[k]);
    for (const auto& row : report.fiber_boundary_P) os << ',' << format_number(row[k]);
    for (const auto& row : report.base_boundary_P) os << ',' << format_number(row[k]);
    os << '\n';
  }
  return os.str();
}

std::string eigenvector_csv(const SpectralReport& report) {
  std::ostringstream os;
  GridSpec grid{report.axes};
  for (int a = 0; a < grid.dim(); ++a) os << "x" << a << ',';
  os << "h,nu\n";
  const long g = grid.total();
  for (long i = 0; i < g; ++i) {
    Pt p = grid.site(i, report.scheme);
    for (int a = 0; a < grid.dim(); ++a) os << format_number(p[a]) << ',';
    os << format_number(report.h[static_cast<std::size_t>(i)]) << ','
       << format_number(report.nu[static_cast<std::size_t>(i)]) << '\n';
  }
  return os.str();
}

nlohmann::json report_json(const SpectralReport& report) {
  nlohmann::json j;
  j["lambda1"] = report.lambda1;
  j["pressure"] = report.log_lambda1;
  j["lambda2_modulus"] = report.lambda2_modulus;
  j["gap_ratio"] = report.gap_ratio;
  j["residuals"] = {{"right", report.residual_right}, {"left", report.residual_left}};
  j["scheme"] = to_string(report.scheme);
  j["N"] = report.axes;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  return j;
}

nlohmann::json scan_json(const ScanResult& scan) {
  nlohmann::json j;
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : scan.candidates)
    j["candidates"].push_back({{"lo", c.lo}, {"hi", c.hi}, {"reasons", c.reasons}});
  j["analytic_intervals"] = nlohmann::json::array();
  for (const auto& [lo, hi] : scan.analytic_intervals)
    j["analytic_intervals"].push_back({{"lo", lo}, {"hi", hi}});
  return j;
}

std::string gnuplot_script(const std::string& csv_name, const std::string& title) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't'\n"
     << "set title '" << title << "'\n"
     << "plot '" << csv_name << "' using 1:2 with lines title 'P(t)', \\\n"
     << "     '" << csv_name << "' using 1:6 with lines title 'gap ratio'\n";
  return os.str();
}

}  // namespace gibbs

#include "gibbs/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "gibbs/transfer_operator.hpp"

namespace gibbs {

namespace {

// Streaming log-sum-exp over the depth-n preimage set: one pass for the max,
// one for the sum. No tree is materialized.
template <typename Fn>
void walk_preimages(const MapSystem& map, const Potential& phi, const Pt& node,
                    double weight, int remaining, Fn&& fn) {
  if (remaining == 0) {
    fn(weight);
    return;
  }
  for (const Pt& q : preimages(map, node))
    walk_preimages(map, phi, q, weight + phi(q), remaining - 1, fn);
}

}  // namespace

double pressure_preimage_sum(const MapSystem& map, const Potential& phi, const Pt& x0,
                             int n, std::size_t budget) {
  if (n < 1) throw Error("pressure_preimage_sum: n must be >= 1");
  const double count = std::pow(static_cast<double>(degree(map)), n);
  if (count > static_cast<double>(budget))
    throw BudgetExceeded("preimage sum needs " + std::to_string(count) + " leaves");
  const Pt root = wrap01(x0);
  double mx = -1e300;
  walk_preimages(map, phi, root, 0.0, n, [&](double w) { mx = std::max(mx, w); });
  double sum = 0.0;
  walk_preimages(map, phi, root, 0.0, n, [&](double w) { sum += std::exp(w - mx); });
  return (std::log(sum) + mx) / n;
}

std::vector<double> periodic_points(const CircleMap& map, int n, std::size_t budget) {
  if (n < 1) throw Error("periodic_points: n must be >= 1");
  if (map.is_intermittent())
    throw NotExpanding("periodic_points: intermittent maps are rejected "
                       "(composed inverse branches do not contract)");
  const int deg = map.degree();
  const double count = std::pow(static_cast<double>(deg), n);
  if (count > static_cast<double>(budget))
    throw BudgetExceeded("periodic point enumeration needs " + std::to_string(count) +
                         " words");
  const long words = static_cast<long>(std::llround(count));
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(words));
  std::vector<int> w(static_cast<std::size_t>(n));
  for (long word = 0; word < words; ++word) {
    long rem = word;
    for (int i = n - 1; i >= 0; --i) {
      w[static_cast<std::size_t>(i)] = static_cast<int>(rem % deg);
      rem /= deg;
    }
    // iterate x -> T_{w_1}^{-1}( ... T_{w_n}^{-1}(x) ... ) to its fixed point;
    // convergence is measured with the signed circle difference so a fixed
    // point sitting exactly on the wrap (0 == 1) does not cycle
    double x = 0.5;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      double y = wrap01(x);
      for (int i = n - 1; i >= 0; --i) y = map.inverse_branch(w[static_cast<std::size_t>(i)], y);
      double diff = y - wrap01(x);
      if (diff > 0.5) diff -= 1.0;
      if (diff < -0.5) diff += 1.0;
      if (std::fabs(diff) < 1e-13) {
        x = wrap01(x) + diff;
        ok = true;
        break;
      }
      x = y;
    }
    if (!ok)
      throw NotExpanding("periodic_points: composed inverse branch failed to contract");
    pts.push_back(wrap01(x));
  }
  // Boundary words alias the same circle point (e.g. 000... and kkk... both
  // give the fixed point at 0); deduplicate.
  std::sort(pts.begin(), pts.end());
  std::vector<double> uniq;
  for (double p : pts) {
    if (uniq.empty() || (p - uniq.back() > 1e-9)) uniq.push_back(p);
  }
  while (uniq.size() > 1 && circle_dist(uniq.back(), uniq.front()) <= 1e-9) uniq.pop_back();
  return uniq;
}

double pressure_periodic_sum(const MapSystem& map, const Potential& phi, int n,
                             std::size_t budget) {
  const auto* cm = std::get_if<CircleMap>(&map);
  if (!cm)
    throw NotExpanding("pressure_periodic_sum: periodic enumeration needs a 1D map");
  std::vector<double> pts = periodic_points(*cm, n, budget);
  std::vector<double> weights;
  weights.reserve(pts.size());
  double mx = -1e300;
  for (double x : pts) {
    double s = birkhoff_sum(phi, map, Pt::of(x), n);
    weights.push_back(s);
    mx = std::max(mx, s);
  }
  double sum = 0.0;
  for (double s : weights) sum += std::exp(s - mx);
  return (std::log(sum) + mx) / n;
}

double closed_form_pressure_pl(std::span<const double> slopes, double t) {
  double acc = 0.0;
  for (double s : slopes) {
    if (s <= 1.0) throw Error("closed_form_pressure_pl: slopes must exceed 1");
    acc += std::pow(s, -t);
  }
  return std::log(acc);
}

DenseSpectrum dense_spectrum_oracle(const DiscretizedOperator& op) {
  const long g = op.size();
  if (g > 4096) throw Error("dense_spectrum_oracle: operator too large");
  std::vector<double> m = op.dense();
  Eigen::MatrixXd A(g, g);
  for (long i = 0; i < g; ++i)
    for (long j = 0; j < g; ++j)
      A(i, j) = m[static_cast<std::size_t>(i) * static_cast<std::size_t>(g) +
                  static_cast<std::size_t>(j)];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, /*computeEigenvectors=*/false);
  DenseSpectrum out;
  out.eigenvalues.resize(static_cast<std::size_t>(g));
  const double scale = std::exp(op.shift());
  for (long i = 0; i < g; ++i)
    out.eigenvalues[static_cast<std::size_t>(i)] = solver.eigenvalues()(i) * scale;
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              return std::abs(a) > std::abs(b);
            });
  return out;
}

}  // namespace gibbs

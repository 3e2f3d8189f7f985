#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gibbs/dynamics.hpp"
#include "gibbs/potentials.hpp"

namespace gibbs {

enum class SchemeKind { Ulam, Collocation };

std::string to_string(SchemeKind k);

// Uniform product grid over [0,1)^d. Ulam sites are cell centers, collocation
// sites are the nodes i/N. Index layout is row-major with the last axis
// fastest (for skew products: base axes first, fiber last).
struct GridSpec {
  std::vector<int> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  long total() const {
    long t = 1;
    for (int n : axes) t *= n;
    return t;
  }
  int min_axis() const;
  Pt site(long idx, SchemeKind scheme) const;
  long cell_of(const Pt& p) const;
  static GridSpec uniform(int n, int dim) {
    return GridSpec{std::vector<int>(static_cast<std::size_t>(dim), n)};
  }
};

struct EigOptions {
  double tol = 1e-12;          // relative Rayleigh increment
  double residual_tol = 1e-10; // sup-norm eigen residual, relative to lambda1
  int max_iter = 30000;
  int lambda2_max_iter = 12000;
  double lambda2_tol = 1e-9;
};

struct SpectralReport {
  double lambda1 = 0.0;       // shift added back
  double log_lambda1 = 0.0;   // log lambda1 (exact in the log domain)
  std::vector<double> h;      // leading eigenfunction samples, sum h_i nu_i = 1
  std::vector<double> nu;     // conformal masses, sum = 1
  double lambda2_modulus = 0.0;
  double gap_ratio = 0.0;
  double residual_right = 0.0;
  double residual_left = 0.0;
  int iterations = 0;
  bool converged = false;
  bool gap_converged = false;
  SchemeKind scheme = SchemeKind::Ulam;
  std::vector<int> axes;
  double shift = 0.0;
};

// Scheme-accuracy scale used for labels and scan tolerances: 10/min_axis for
// Ulam, 1e-8 for collocation on analytic data.
double scheme_tolerance(SchemeKind scheme, const GridSpec& grid);

class DiscretizedOperator {
 public:
  struct UlamSkeleton {
    std::vector<long> row_start;  // size total+1
    std::vector<int> col;
    std::vector<double> qweight;  // quadrature weight fraction of the cell
    std::vector<double> phi;      // phi at the preimage point
  };
  struct CollocSkeleton {
    // per (node, branch): phi value and per-entry cardinal products row
    std::vector<double> phi;       // size total*degree
    std::vector<double> cardinal;  // size total*degree*total, row-major
    int degree = 0;
  };

  DiscretizedOperator(SchemeKind scheme, GridSpec grid, double shift,
                      std::shared_ptr<const UlamSkeleton> skel, std::vector<double> vals);
  DiscretizedOperator(SchemeKind scheme, GridSpec grid, double shift,
                      std::shared_ptr<const CollocSkeleton> skel,
                      std::vector<double> dense);

  int size() const { return static_cast<int>(grid_.total()); }
  const GridSpec& grid() const { return grid_; }
  SchemeKind scheme() const { return scheme_; }
  double shift() const { return shift_; }
  bool nonneg_certificate() const { return scheme_ == SchemeKind::Ulam; }
  double min_entry() const { return min_entry_; }

  void apply(std::span<const double> in, std::span<double> out) const;
  void apply_transpose(std::span<const double> in, std::span<double> out) const;
  std::vector<double> dense() const;  // materialized matrix (oracle use)

 private:
  SchemeKind scheme_;
  GridSpec grid_;
  double shift_;
  std::shared_ptr<const UlamSkeleton> ulam_;
  std::shared_ptr<const CollocSkeleton> colloc_;
  std::vector<double> values_;  // Ulam: per-entry weights; Colloc: dense matrix
  double min_entry_ = 0.0;
};

// Skeleton cache for the family t -> L_{t phi}: geometry, preimage points and
// phi values are computed once; at(t) only re-exponentiates the weights.
class OperatorFamily {
 public:
  OperatorFamily(const MapSystem& map, const Potential& phi, SchemeKind scheme,
                 GridSpec grid, int quad_order = 8, int workers = 1);

  DiscretizedOperator at(double t) const;
  const GridSpec& grid() const { return grid_; }
  SchemeKind scheme() const { return scheme_; }

 private:
  SchemeKind scheme_;
  GridSpec grid_;
  std::shared_ptr<const DiscretizedOperator::UlamSkeleton> ulam_;
  std::shared_ptr<const DiscretizedOperator::CollocSkeleton> colloc_;
  int workers_ = 1;
};

DiscretizedOperator build(const MapSystem& map, const Potential& phi, SchemeKind scheme,
                          GridSpec grid, int quad_order = 8, int workers = 1);

// Power iteration from the constant function (and transpose iteration from
// uniform mass). Returns converged=false after max_iter instead of throwing;
// callers must branch on the flag.
SpectralReport leading_eigentriple(const DiscretizedOperator& op,
                                   const EigOptions& opts = {});

// Deflated power iteration v -> A v - lambda1 h <nu, v>; fills
// lambda2_modulus / gap_ratio. Non-converged estimates are lower bounds.
void subleading_modulus(const DiscretizedOperator& op, SpectralReport& report,
                        const EigOptions& opts = {});

// log lambda1 with the potential shift added back. Throws NotConverged when
// the report is not converged.
double pressure(const SpectralReport& report);

}  // namespace gibbs

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "gibbs/dynamics.hpp"
#include "gibbs/potentials.hpp"

namespace gibbs {

class DiscretizedOperator;  // transfer_operator.hpp

// (1/n) log sum over f^n(y) = x0 of exp(S_n phi(y)), by direct preimage-tree
// enumeration with log-sum-exp accumulation.
double pressure_preimage_sum(const MapSystem& map, const Potential& phi, const Pt& x0,
                             int n, std::size_t budget = kDefaultNodeBudget);

// All fixed points of T^n for an expanding circle map, each obtained by
// iterating the composed inverse branches of its length-n branch word to a
// fixed point (tolerance 1e-13) and deduplicated on the circle.
std::vector<double> periodic_points(const CircleMap& map, int n,
                                    std::size_t budget = kDefaultNodeBudget);

// (1/n) log sum over f^n(x) = x of exp(S_n phi(x)). Throws NotExpanding for
// intermittent maps (the composed inverse branches fail to contract).
double pressure_periodic_sum(const MapSystem& map, const Potential& phi, int n,
                             std::size_t budget = kDefaultNodeBudget);

// log sum_j slope_j^{-t} for a full-branch piecewise-linear family.
double closed_form_pressure_pl(std::span<const double> slopes, double t);

struct DenseSpectrum {
  std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, descending
  double modulus(std::size_t i) const { return std::abs(eigenvalues[i]); }
};

// Full eigenvalue list of a small discretized operator via a dense
// eigendecomposition; validates the iterative leading/subleading estimates.
DenseSpectrum dense_spectrum_oracle(const DiscretizedOperator& op);

}  // namespace gibbs

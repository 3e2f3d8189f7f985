#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gibbs/common.hpp"

namespace gibbs {

// ---------------------------------------------------------------------------
// CircleMap: a full-branch map of the circle. Branch b is a monotone
// increasing bijection of [lo_b, lo_b + width_b) onto [0,1), expressed in
// lift coordinates (arguments may exceed 1 on the wrap-around branch).
// Breakpoints are the branch starting points; for repeller-style families
// (piecewise linear slopes with sum of reciprocals < 1) widths may undershoot
// the distance to the next breakpoint, and forward evaluation extends the
// branch formula modulo 1.
// ---------------------------------------------------------------------------
struct CircleBranch {
  double lo = 0.0;
  double width = 1.0;
  std::function<double(double)> value;       // lift coords in [lo, lo+width)
  std::function<double(double)> derivative;  // same coords
  std::function<double(double)> inverse;     // exact inverse, may be null
};

struct RepellerCertificate {
  double point = 0.0;
  int period = 1;
  double expansion = 0.0;  // |(T^period)'(p)|, must exceed 1
};

class CircleMap {
 public:
  CircleMap(std::vector<CircleBranch> branches, std::vector<double> neutral_points,
            double derivative_sup, std::string name);

  int branch_count() const { return static_cast<int>(branches_.size()); }
  int degree() const { return branch_count(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& neutral_points() const { return neutral_points_; }
  bool is_intermittent() const { return !neutral_points_.empty(); }
  double derivative_sup() const { return derivative_sup_; }
  const std::string& name() const { return name_; }

  double eval(double x) const;
  double derivative(double x) const;
  int branch_of(double x) const;

  // Solves T_b(x) = y for x in branch b; bracketed bisection refined by
  // Newton, tolerance 1e-14 on the bracket.
  double inverse_branch(int b, double y) const;
  std::vector<double> preimages(double y) const;

  std::optional<RepellerCertificate> repeller;

 private:
  std::vector<CircleBranch> branches_;
  std::vector<double> breakpoints_;
  std::vector<double> neutral_points_;
  double derivative_sup_;
  std::string name_;
};

CircleMap make_doubling();
CircleMap make_piecewise_linear(const std::vector<double>& slopes);
CircleMap make_manneville_pomeau(double alpha);
CircleMap make_perturbed_doubling(double amplitude);

// ---------------------------------------------------------------------------
// TorusEndomorphism: x -> A x mod 1 for an integer matrix with all eigenvalue
// moduli > 1. Exactly |det A| preimages per point.
// ---------------------------------------------------------------------------
class TorusEndomorphism {
 public:
  explicit TorusEndomorphism(std::vector<std::vector<long long>> matrix);

  int dim() const { return d_; }
  int degree() const { return degree_; }
  Pt eval(const Pt& p) const;
  std::vector<Pt> preimages(const Pt& p) const;
  double min_eigenvalue_modulus() const { return min_eig_mod_; }
  double max_eigenvalue_modulus() const { return max_eig_mod_; }
  // (1/n) log sigma_min(A^n)
  double conorm_exponent(int n) const;
  const std::vector<std::vector<long long>>& matrix() const { return a_; }

 private:
  std::vector<std::vector<long long>> a_;
  std::vector<std::vector<double>> inv_;  // A^{-1}
  int d_ = 0;
  int degree_ = 0;
  double min_eig_mod_ = 0.0, max_eig_mod_ = 0.0;
  std::vector<std::vector<long long>> preimage_offsets_;  // lattice representatives
};

// ---------------------------------------------------------------------------
// SkewProduct F(x,y) = (g(x), f_x(y)). The fiber family is a prototype circle
// map conjugated by a base-dependent rotation of its domain:
//   f_x(y) = prototype(y - shift(x)),
// so fiber breakpoints are alpha_j + shift(x). TM2/TM3 require shift == 0.
// ---------------------------------------------------------------------------
enum class SkewClass { TM1, TM2, TM3 };

std::string to_string(SkewClass c);

struct FiberFamily {
  std::shared_ptr<const CircleMap> prototype;
  std::function<double(double)> shift;        // delta(x); null => 0
  std::function<double(double)> shift_deriv;  // delta'(x); null => 0
  bool x_dependent = false;

  double delta(double x) const { return shift ? shift(x) : 0.0; }
  double ddelta(double x) const { return shift_deriv ? shift_deriv(x) : 0.0; }
  double value(double x, double y) const;
  double dy(double x, double y) const;  // d/dy f_x(y)
  double dx(double x, double y) const;  // d/dx f_x(y)
  std::vector<double> breakpoints_at(double x) const;
  std::vector<double> preimages(double x, double y) const;
};

class SkewProduct {
 public:
  using Base = std::variant<CircleMap, TorusEndomorphism>;

  SkewProduct(Base base, FiberFamily fiber, SkewClass cls);

  int dim() const { return base_dim_ + 1; }
  int base_dim() const { return base_dim_; }
  int degree() const;
  SkewClass skew_class() const { return cls_; }
  const Base& base() const { return *base_; }
  const FiberFamily& fiber() const { return fiber_; }

  Pt eval(const Pt& p) const;
  std::vector<Pt> preimages(const Pt& p) const;

  // Breakpoints of an intermittent circle-map base; empty otherwise.
  std::vector<double> base_breakpoints() const;
  std::vector<double> fiber_breakpoints(double x) const {
    return fiber_.breakpoints_at(x);
  }
  bool base_is_intermittent() const;

 private:
  std::shared_ptr<const Base> base_;
  FiberFamily fiber_;
  SkewClass cls_;
  int base_dim_ = 1;
};

// ---------------------------------------------------------------------------
using MapSystem = std::variant<CircleMap, TorusEndomorphism, SkewProduct>;

int dimension(const MapSystem& m);
int degree(const MapSystem& m);
Pt eval(const MapSystem& m, const Pt& p);
// Ordered by branch index; skew products are lexicographic
// (base branch, fiber branch). Forward evaluation of each entry returns p.
std::vector<Pt> preimages(const MapSystem& m, const Pt& p);
double inverse_branch(const CircleMap& m, int branch, double p);
// (1/n) log of the conorm of Df^n along the orbit of p. For skew products this
// is the min of the base conorm average and the fiber log-derivative average.
double derivative_min_expansion(const MapSystem& m, const Pt& p, int n);
// log|T'| at p for 1D maps, log|d_y f_x(y)| at p for skew products.
double log_derivative_1d(const MapSystem& m, const Pt& p);

// ---------------------------------------------------------------------------
// PreimageTree: all depth-n inverse images of a root together with the
// Birkhoff weight S_n(phi) accumulated along each inverse orbit. Leaves are
// stored in lexicographic branch-word order; the word of leaf i is the
// base-degree expansion of i (most significant digit = first branch choice).
// ---------------------------------------------------------------------------
struct PreimageTree {
  Pt root;
  int depth = 0;
  int map_degree = 1;
  std::vector<Pt> leaves;
  std::vector<double> weights;

  std::vector<int> word_of(std::size_t leaf) const;
};

inline constexpr std::size_t kDefaultNodeBudget = std::size_t{1} << 24;

class Potential;  // potentials.hpp

PreimageTree preimage_tree(const MapSystem& m, const Potential& phi, const Pt& root,
                           int depth, std::size_t budget = kDefaultNodeBudget,
                           int workers = 1);

}  // namespace gibbs

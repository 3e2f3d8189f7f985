#include "gibbs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "gibbs/parallel.hpp"
#include "gibbs/potentials.hpp"

namespace gibbs {

// ---------------------------------------------------------------------------
// CircleMap
// ---------------------------------------------------------------------------
CircleMap::CircleMap(std::vector<CircleBranch> branches, std::vector<double> neutral_points,
                     double derivative_sup, std::string name)
    : branches_(std::move(branches)),
      neutral_points_(std::move(neutral_points)),
      derivative_sup_(derivative_sup),
      name_(std::move(name)) {
  if (branches_.empty()) throw Error("CircleMap needs at least one branch");
  breakpoints_.reserve(branches_.size());
  for (const auto& b : branches_) breakpoints_.push_back(wrap01(b.lo));
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i] <= breakpoints_[i - 1])
      throw Error("CircleMap breakpoints must be strictly increasing");
  }
}

int CircleMap::branch_of(double x) const {
  x = wrap01(x);
  // branch b owns [breakpoint_b, breakpoint_{b+1})
  int k = branch_count();
  if (x < breakpoints_.front()) return k - 1;  // wrap segment before alpha_1
  int lo = 0, hi = k - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (breakpoints_[static_cast<std::size_t>(mid)] <= x)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

double CircleMap::eval(double x) const {
  x = wrap01(x);
  int b = branch_of(x);
  const auto& br = branches_[static_cast<std::size_t>(b)];
  double lift = x;
  if (lift < br.lo) lift += 1.0;  // wrap branch
  return wrap01(br.value(lift));
}

double CircleMap::derivative(double x) const {
  x = wrap01(x);
  int b = branch_of(x);
  const auto& br = branches_[static_cast<std::size_t>(b)];
  double lift = x;
  if (lift < br.lo) lift += 1.0;
  return br.derivative(lift);
}

double CircleMap::inverse_branch(int b, double y) const {
  if (b < 0 || b >= branch_count()) throw Error("inverse_branch: no such branch");
  y = wrap01(y);
  const auto& br = branches_[static_cast<std::size_t>(b)];
  // keeps boundary roundoff from escaping the branch (e.g. a preimage that
  // rounds to the open right endpoint and would wrap to the next branch)
  auto clamp_into_branch = [&br](double x) {
    if (x < br.lo) x = br.lo;
    const double hi = br.lo + br.width;
    if (x >= hi) x = std::nextafter(hi, br.lo);
    return wrap01(x);
  };
  if (br.inverse) {
    double x = br.inverse(y);
    if (x < br.lo && x + 1.0 < br.lo + br.width) x += 1.0;  // lift representative
    return clamp_into_branch(x);
  }
  // Bracketed bisection refined by Newton. The branch maps [lo, lo+width)
  // monotonically onto [0,1), so the root is always bracketed.
  double lo = br.lo, hi = br.lo + br.width;
  double flo = br.value(lo) - y;
  if (flo > 0.0 && flo < 1e-12) flo = 0.0;
  double x = 0.5 * (lo + hi);
  bool bracket_ok = flo <= 0.0;
  if (!bracket_ok) throw BranchSolveFailure("branch does not bracket target value");
  for (int it = 0; it < 200; ++it) {
    double fx = br.value(x) - y;
    if (fx <= 0.0)
      lo = x;
    else
      hi = x;
    double d = br.derivative(x);
    double xn = (d > 1e-12) ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::fabs(xn - x) < 1e-15 && hi - lo < 1e-14) {
      x = xn;
      break;
    }
    x = xn;
    if (hi - lo < 1e-15) break;
  }
  if (std::fabs(br.value(x) - y) > 1e-11)
    throw BranchSolveFailure("inverse_branch failed to converge on branch " +
                             std::to_string(b) + " of " + name_);
  return clamp_into_branch(x);
}

std::vector<double> CircleMap::preimages(double y) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(branch_count()));
  for (int b = 0; b < branch_count(); ++b) out.push_back(inverse_branch(b, y));
  return out;
}

// --- families ---------------------------------------------------------------

CircleMap make_doubling() {
  std::vector<CircleBranch> br(2);
  for (int b = 0; b < 2; ++b) {
    br[static_cast<std::size_t>(b)] =
        CircleBranch{0.5 * b, 0.5, [b](double x) { return 2.0 * x - b; },
                     [](double) { return 2.0; },
                     [b](double y) { return 0.5 * (y + b); }};
  }
  CircleMap m(std::move(br), {}, 2.0, "doubling");
  m.repeller = RepellerCertificate{0.0, 1, 2.0};
  return m;
}

CircleMap make_piecewise_linear(const std::vector<double>& slopes) {
  const int k = static_cast<int>(slopes.size());
  if (k < 2) throw Error("piecewise_linear needs at least two slopes");
  for (double s : slopes) {
    if (s < static_cast<double>(k))
      throw Error("piecewise_linear: each slope must be >= branch count");
  }
  std::vector<CircleBranch> br(static_cast<std::size_t>(k));
  for (int b = 0; b < k; ++b) {
    double lo = static_cast<double>(b) / k;
    double s = slopes[static_cast<std::size_t>(b)];
    br[static_cast<std::size_t>(b)] =
        CircleBranch{lo, 1.0 / s, [s, lo](double x) { return s * (x - lo); },
                     [s](double) { return s; },
                     [s, lo](double y) { return lo + y / s; }};
  }
  double smax = *std::max_element(slopes.begin(), slopes.end());
  CircleMap m(std::move(br), {}, smax, "piecewise_linear");
  m.repeller = RepellerCertificate{0.0, 1, slopes[0]};
  return m;
}

CircleMap make_manneville_pomeau(double alpha) {
  if (alpha <= 0.0) throw Error("manneville_pomeau: alpha must be positive");
  // breakpoint c solves c + c^{1+alpha} = 1
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    if (m + std::pow(m, 1.0 + alpha) < 1.0)
      lo = m;
    else
      hi = m;
  }
  const double c = 0.5 * (lo + hi);
  auto lift = [alpha](double x) { return x + std::pow(x, 1.0 + alpha); };
  auto dlift = [alpha](double x) { return 1.0 + (1.0 + alpha) * std::pow(x, alpha); };
  std::vector<CircleBranch> br(2);
  br[0] = CircleBranch{0.0, c, lift, dlift, nullptr};
  br[1] = CircleBranch{c, 1.0 - c, [lift](double x) { return lift(x) - 1.0; }, dlift,
                       nullptr};
  CircleMap m(std::move(br), {0.0}, 2.0 + alpha, "manneville_pomeau");
  // A period-2 repeller: the orbit alternating between the two branches.
  {
    double x = 0.5;
    for (int it = 0; it < 400; ++it) {
      // x <- T_0^{-1}(T_1^{-1}(x))
      double y1 = m.inverse_branch(1, x);
      double y0 = m.inverse_branch(0, y1);
      if (std::fabs(y0 - x) < 1e-15) {
        x = y0;
        break;
      }
      x = y0;
    }
    double expansion = std::fabs(m.derivative(x) * m.derivative(m.eval(x)));
    m.repeller = RepellerCertificate{x, 2, expansion};
  }
  return m;
}

// |amplitude| < 1 is analytic expanding; amplitude = -1 (resp. +1) is the
// intermittent boundary member with a neutral point at 0 (resp. 1/2) and
// breakpoints {0, 1/2}.
CircleMap make_perturbed_doubling(double amplitude) {
  if (std::fabs(amplitude) > 1.0)
    throw Error("perturbed_doubling: |amplitude| must be <= 1");
  const double a = amplitude;
  auto lift = [a](double x) { return 2.0 * x + a * std::sin(kTwoPi * x) / kTwoPi; };
  auto dlift = [a](double x) { return 2.0 + a * std::cos(kTwoPi * x); };
  std::vector<CircleBranch> br(2);
  br[0] = CircleBranch{0.0, 0.5, lift, dlift, nullptr};
  br[1] = CircleBranch{0.5, 0.5, [lift](double x) { return lift(x) - 1.0; }, dlift,
                       nullptr};
  std::vector<double> neutral;
  if (a == -1.0) neutral.push_back(0.0);
  if (a == 1.0) neutral.push_back(0.5);
  CircleMap m(std::move(br), std::move(neutral), 2.0 + std::fabs(a),
              "perturbed_doubling");
  if (a > -1.0) {
    m.repeller = RepellerCertificate{0.0, 1, 2.0 + a};  // T'(0) = 2 + a > 1
  } else {
    // a = -1: the fixed point is neutral; certify the period-2 orbit through
    // both branches instead
    double x = 0.5;
    for (int it = 0; it < 400; ++it) {
      double y = m.inverse_branch(0, m.inverse_branch(1, x));
      if (std::fabs(y - x) < 1e-15) {
        x = y;
        break;
      }
      x = y;
    }
    double expansion = std::fabs(m.derivative(x) * m.derivative(m.eval(x)));
    m.repeller = RepellerCertificate{x, 2, expansion};
  }
  return m;
}

// ---------------------------------------------------------------------------
// TorusEndomorphism
// ---------------------------------------------------------------------------
TorusEndomorphism::TorusEndomorphism(std::vector<std::vector<long long>> matrix)
    : a_(std::move(matrix)) {
  d_ = static_cast<int>(a_.size());
  if (d_ < 1 || d_ > 3) throw Error("torus matrix must be 1x1 through 3x3");
  for (const auto& row : a_)
    if (static_cast<int>(row.size()) != d_) throw Error("torus matrix must be square");

  Eigen::MatrixXd A(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) A(i, j) = static_cast<double>(a_[i][j]);
  double det = A.determinant();
  degree_ = static_cast<int>(std::llround(std::fabs(det)));
  if (degree_ < 2) throw Error("torus matrix must have |det| >= 2");

  Eigen::VectorXcd eig = A.eigenvalues();
  min_eig_mod_ = 1e300;
  max_eig_mod_ = 0.0;
  for (int i = 0; i < d_; ++i) {
    min_eig_mod_ = std::min(min_eig_mod_, std::abs(eig(i)));
    max_eig_mod_ = std::max(max_eig_mod_, std::abs(eig(i)));
  }
  if (min_eig_mod_ <= 1.0)
    throw Error("torus matrix must have all eigenvalue moduli > 1");

  Eigen::MatrixXd inv = A.inverse();
  inv_.assign(static_cast<std::size_t>(d_), std::vector<double>(static_cast<std::size_t>(d_)));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) inv_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = inv(i, j);

  // Lattice representatives: k such that A^{-1} k lands in [0,1)^d when offset
  // by the fractional part. Enumerate k in the box spanned by A [0,1)^d.
  std::vector<long long> lo(static_cast<std::size_t>(d_), 0), hi(static_cast<std::size_t>(d_), 0);
  for (int i = 0; i < d_; ++i) {
    long long l = 0, h = 0;
    for (int j = 0; j < d_; ++j) {
      if (a_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] < 0)
        l += a_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      else
        h += a_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    lo[static_cast<std::size_t>(i)] = l - 1;
    hi[static_cast<std::size_t>(i)] = h + 1;
  }
  std::vector<long long> k(static_cast<std::size_t>(d_), 0);
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d_) {
      // y = A^{-1} k ; accept when y in [0,1)^d
      bool ok = true;
      for (int i = 0; i < d_ && ok; ++i) {
        double y = 0.0;
        for (int j = 0; j < d_; ++j)
          y += inv_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               static_cast<double>(k[static_cast<std::size_t>(j)]);
        if (y < -1e-12 || y >= 1.0 - 1e-12) ok = false;
      }
      if (ok) preimage_offsets_.push_back(k);
      return;
    }
    for (long long v = lo[static_cast<std::size_t>(axis)]; v <= hi[static_cast<std::size_t>(axis)]; ++v) {
      k[static_cast<std::size_t>(axis)] = v;
      rec(axis + 1);
    }
  };
  rec(0);
  if (static_cast<int>(preimage_offsets_.size()) != degree_)
    throw Error("torus preimage enumeration found " +
                std::to_string(preimage_offsets_.size()) + " representatives, expected " +
                std::to_string(degree_));
}

Pt TorusEndomorphism::eval(const Pt& p) const {
  Pt out = Pt::zero(d_);
  for (int i = 0; i < d_; ++i) {
    double v = 0.0;
    for (int j = 0; j < d_; ++j)
      v += static_cast<double>(a_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) * wrap01(p[j]);
    out[i] = wrap01(v);
  }
  return out;
}

std::vector<Pt> TorusEndomorphism::preimages(const Pt& p) const {
  std::vector<Pt> out;
  out.reserve(static_cast<std::size_t>(degree_));
  for (const auto& k : preimage_offsets_) {
    Pt y = Pt::zero(d_);
    for (int i = 0; i < d_; ++i) {
      double v = 0.0;
      for (int j = 0; j < d_; ++j)
        v += inv_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
             (wrap01(p[j]) + static_cast<double>(k[static_cast<std::size_t>(j)]));
      y[i] = wrap01(v);
    }
    out.push_back(y);
  }
  return out;
}

double TorusEndomorphism::conorm_exponent(int n) const {
  Eigen::MatrixXd A(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) A(i, j) = static_cast<double>(a_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d_, d_);
  for (int k = 0; k < n; ++k) P = A * P;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
  return std::log(svd.singularValues()(d_ - 1)) / n;
}

// ---------------------------------------------------------------------------
// SkewProduct
// ---------------------------------------------------------------------------
std::string to_string(SkewClass c) {
  switch (c) {
    case SkewClass::TM1: return "TM1";
    case SkewClass::TM2: return "TM2";
    case SkewClass::TM3: return "TM3";
  }
  return "?";
}

double FiberFamily::value(double x, double y) const {
  return prototype->eval(wrap01(y - delta(x)));
}

double FiberFamily::dy(double x, double y) const {
  return prototype->derivative(wrap01(y - delta(x)));
}

double FiberFamily::dx(double x, double y) const {
  return -prototype->derivative(wrap01(y - delta(x))) * ddelta(x);
}

std::vector<double> FiberFamily::breakpoints_at(double x) const {
  std::vector<double> bks = prototype->breakpoints();
  double d = delta(x);
  for (double& b : bks) b = wrap01(b + d);
  return bks;
}

std::vector<double> FiberFamily::preimages(double x, double y) const {
  std::vector<double> out = prototype->preimages(y);
  double d = delta(x);
  for (double& z : out) z = wrap01(z + d);
  return out;
}

SkewProduct::SkewProduct(Base base, FiberFamily fiber, SkewClass cls)
    : base_(std::make_shared<Base>(std::move(base))), fiber_(std::move(fiber)), cls_(cls) {
  base_dim_ = std::visit(
      [](const auto& b) -> int {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, CircleMap>)
          return 1;
        else
          return b.dim();
      },
      *base_);
  if (base_dim_ + 1 > Pt::kMaxDim) throw Error("skew product dimension too large");
  if (cls_ == SkewClass::TM2 || cls_ == SkewClass::TM3) {
    if (fiber_.x_dependent)
      throw Error(to_string(cls_) + " requires x-independent fiber breakpoints");
  }
  const bool base_intermittent = base_is_intermittent();
  if (cls_ == SkewClass::TM2 && base_intermittent)
    throw Error("TM2 requires an expanding base");
  if (cls_ == SkewClass::TM3 && !base_intermittent)
    throw Error("TM3 requires an intermittent base");
}

bool SkewProduct::base_is_intermittent() const {
  if (const auto* cm = std::get_if<CircleMap>(base_.get())) return cm->is_intermittent();
  return false;
}

std::vector<double> SkewProduct::base_breakpoints() const {
  if (const auto* cm = std::get_if<CircleMap>(base_.get()))
    if (cm->is_intermittent()) return cm->breakpoints();
  return {};
}

int SkewProduct::degree() const {
  int db = std::visit(
      [](const auto& b) -> int {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, CircleMap>)
          return b.degree();
        else
          return b.degree();
      },
      *base_);
  return db * fiber_.prototype->degree();
}

Pt SkewProduct::eval(const Pt& p) const {
  Pt out = Pt::zero(dim());
  double xfirst = p[0];
  if (const auto* cm = std::get_if<CircleMap>(base_.get())) {
    out[0] = cm->eval(p[0]);
  } else {
    const auto& te = std::get<TorusEndomorphism>(*base_);
    Pt bx = Pt::zero(base_dim_);
    for (int i = 0; i < base_dim_; ++i) bx[i] = p[i];
    Pt by = te.eval(bx);
    for (int i = 0; i < base_dim_; ++i) out[i] = by[i];
  }
  out[base_dim_] = fiber_.value(xfirst, p[base_dim_]);
  return out;
}

std::vector<Pt> SkewProduct::preimages(const Pt& p) const {
  // F(x', y') = (g(x'), f_{x'}(y')): the fiber inverse uses the base preimage.
  std::vector<Pt> base_pre;
  if (const auto* cm = std::get_if<CircleMap>(base_.get())) {
    for (double xb : cm->preimages(p[0])) base_pre.push_back(Pt::of(xb));
  } else {
    const auto& te = std::get<TorusEndomorphism>(*base_);
    Pt bx = Pt::zero(base_dim_);
    for (int i = 0; i < base_dim_; ++i) bx[i] = p[i];
    base_pre = te.preimages(bx);
  }
  std::vector<Pt> out;
  out.reserve(base_pre.size() * static_cast<std::size_t>(fiber_.prototype->degree()));
  for (const Pt& xb : base_pre) {
    std::vector<double> ys = fiber_.preimages(xb[0], p[base_dim_]);
    for (double y : ys) {
      Pt q = Pt::zero(dim());
      for (int i = 0; i < base_dim_; ++i) q[i] = xb[i];
      q[base_dim_] = y;
      out.push_back(q);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MapSystem free functions
// ---------------------------------------------------------------------------
int dimension(const MapSystem& m) {
  return std::visit(
      [](const auto& mm) -> int {
        using T = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<T, CircleMap>)
          return 1;
        else
          return mm.dim();
      },
      m);
}

int degree(const MapSystem& m) {
  return std::visit([](const auto& mm) -> int { return mm.degree(); }, m);
}

Pt eval(const MapSystem& m, const Pt& p) {
  return std::visit(
      [&p](const auto& mm) -> Pt {
        using T = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<T, CircleMap>)
          return Pt::of(mm.eval(p[0]));
        else
          return mm.eval(p);
      },
      m);
}

std::vector<Pt> preimages(const MapSystem& m, const Pt& p) {
  return std::visit(
      [&p](const auto& mm) -> std::vector<Pt> {
        using T = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<T, CircleMap>) {
          std::vector<Pt> out;
          for (double x : mm.preimages(p[0])) out.push_back(Pt::of(x));
          return out;
        } else {
          return mm.preimages(p);
        }
      },
      m);
}

double inverse_branch(const CircleMap& m, int branch, double p) {
  return m.inverse_branch(branch, p);
}

double log_derivative_1d(const MapSystem& m, const Pt& p) {
  if (const auto* cm = std::get_if<CircleMap>(&m)) return std::log(std::fabs(cm->derivative(p[0])));
  if (const auto* sk = std::get_if<SkewProduct>(&m))
    return std::log(std::fabs(sk->fiber().dy(p[0], p[sk->base_dim()])));
  throw Error("log_derivative_1d: needs a 1D map or a skew product fiber");
}

double derivative_min_expansion(const MapSystem& m, const Pt& p, int n) {
  if (n < 1) throw Error("derivative_min_expansion: n must be >= 1");
  if (const auto* cm = std::get_if<CircleMap>(&m)) {
    double s = 0.0, x = wrap01(p[0]);
    for (int k = 0; k < n; ++k) {
      s += std::log(std::fabs(cm->derivative(x)));
      x = cm->eval(x);
    }
    return s / n;
  }
  if (const auto* te = std::get_if<TorusEndomorphism>(&m)) return te->conorm_exponent(n);
  const auto& sk = std::get<SkewProduct>(m);
  // Base conorm average and fiber log-derivative average along the orbit;
  // the min of the two is the conorm exponent of the block-triangular product.
  double fiber_sum = 0.0;
  Pt q = wrap01(p);
  for (int k = 0; k < n; ++k) {
    fiber_sum += std::log(std::fabs(sk.fiber().dy(q[0], q[sk.base_dim()])));
    q = sk.eval(q);
  }
  double base_avg;
  if (const auto* cm = std::get_if<CircleMap>(&sk.base())) {
    double s = 0.0, x = wrap01(p[0]);
    for (int k = 0; k < n; ++k) {
      s += std::log(std::fabs(cm->derivative(x)));
      x = cm->eval(x);
    }
    base_avg = s / n;
  } else {
    base_avg = std::get<TorusEndomorphism>(sk.base()).conorm_exponent(n);
  }
  return std::min(base_avg, fiber_sum / n);
}

// ---------------------------------------------------------------------------
// PreimageTree
// ---------------------------------------------------------------------------
std::vector<int> PreimageTree::word_of(std::size_t leaf) const {
  std::vector<int> w(static_cast<std::size_t>(depth), 0);
  std::size_t v = leaf;
  for (int i = depth - 1; i >= 0; --i) {
    w[static_cast<std::size_t>(i)] = static_cast<int>(v % static_cast<std::size_t>(map_degree));
    v /= static_cast<std::size_t>(map_degree);
  }
  return w;
}

PreimageTree preimage_tree(const MapSystem& m, const Potential& phi, const Pt& root,
                           int depth, std::size_t budget, int workers) {
  if (depth < 0) throw Error("preimage_tree: depth must be >= 0");
  const int deg = degree(m);
  double count = std::pow(static_cast<double>(deg), depth);
  if (count > static_cast<double>(budget))
    throw BudgetExceeded("preimage tree needs " + std::to_string(count) +
                         " leaves, budget " + std::to_string(budget));
  const std::size_t n_leaves = static_cast<std::size_t>(std::llround(count));

  PreimageTree tree;
  tree.root = wrap01(root);
  tree.depth = depth;
  tree.map_degree = deg;
  tree.leaves.assign(n_leaves, tree.root);
  tree.weights.assign(n_leaves, 0.0);
  if (depth == 0) return tree;

  // Descend one subtree per top-level branch; leaf layout stays lexicographic
  // because subtree s owns the contiguous block [s*deg^{depth-1}, ...).
  const std::size_t block = n_leaves / static_cast<std::size_t>(deg);
  std::vector<Pt> top = preimages(m, tree.root);

  std::function<void(const Pt&, double, int, std::size_t)> descend =
      [&](const Pt& node, double weight, int remaining, std::size_t offset) {
        if (remaining == 0) {
          tree.leaves[offset] = node;
          tree.weights[offset] = weight;
          return;
        }
        std::vector<Pt> kids = preimages(m, node);
        const std::size_t sub =
            static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(deg), remaining - 1)));
        for (std::size_t b = 0; b < kids.size(); ++b) {
          descend(kids[b], weight + phi(kids[b]), remaining - 1, offset + b * sub);
        }
      };

  parallel_for(static_cast<std::size_t>(deg), workers, [&](std::size_t s) {
    descend(top[s], phi(top[s]), depth - 1, s * block);
  });
  return tree;
}

}  // namespace gibbs

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gibbs {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Errors. Every failure mode callers are expected to branch on gets its own
// type; generic misuse goes through Error.
// ---------------------------------------------------------------------------
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct BranchSolveFailure : Error {
  explicit BranchSolveFailure(const std::string& msg) : Error(msg) {}
};
struct BudgetExceeded : Error {
  explicit BudgetExceeded(const std::string& msg) : Error(msg) {}
};
struct EpsilonTooLarge : Error {
  explicit EpsilonTooLarge(const std::string& msg) : Error(msg) {}
};
struct UnboundedDerivative : Error {
  explicit UnboundedDerivative(const std::string& msg) : Error(msg) {}
};
struct NotExpanding : Error {
  explicit NotExpanding(const std::string& msg) : Error(msg) {}
};
struct GapCollapsed : Error {
  explicit GapCollapsed(const std::string& msg) : Error(msg) {}
};
struct NonSmoothPoint : Error {
  explicit NonSmoothPoint(const std::string& msg) : Error(msg) {}
};
struct SingularBasis : Error {
  explicit SingularBasis(const std::string& msg) : Error(msg) {}
};
struct InsufficientRefinement : Error {
  explicit InsufficientRefinement(const std::string& msg) : Error(msg) {}
};
struct NotConverged : Error {
  explicit NotConverged(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// ---------------------------------------------------------------------------
// Phase-space point. All coordinates live on circles, reduced to [0,1).
// Capacity 4 covers every supported system (torus dim <= 3 plus one fiber).
// ---------------------------------------------------------------------------
struct Pt {
  static constexpr int kMaxDim = 4;
  std::array<double, kMaxDim> c{};
  int dim = 0;

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  static Pt of(double x) {
    Pt p;
    p.dim = 1;
    p.c[0] = x;
    return p;
  }
  static Pt of(double x, double y) {
    Pt p;
    p.dim = 2;
    p.c[0] = x;
    p.c[1] = y;
    return p;
  }
  static Pt zero(int d) {
    Pt p;
    p.dim = d;
    return p;
  }
};

// Canonical representative in [0,1).
inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;  // guards x = -1e-17 style results
  if (r < 0.0) r += 1.0;
  return r;
}

inline Pt wrap01(Pt p) {
  for (int i = 0; i < p.dim; ++i) p[i] = wrap01(p[i]);
  return p;
}

inline double circle_dist(double a, double b) {
  double d = std::fabs(wrap01(a) - wrap01(b));
  return d <= 0.5 ? d : 1.0 - d;
}

inline double circle_dist(const Pt& a, const Pt& b) {
  double m = 0.0;
  for (int i = 0; i < a.dim; ++i) m = std::max(m, circle_dist(a[i], b[i]));
  return m;
}

}  // namespace gibbs

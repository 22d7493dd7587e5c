#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "exwave/domain.hpp"
#include "exwave/errors.hpp"
#include "exwave/numerics.hpp"

// Radial elliptic solves for the two weight functions used by the blowup
// functionals:
//
//   phi0:  (r^{n-1} a(r) phi0')' = 0,          phi0(r0) = 0, phi0 -> 1 far out
//   phi1:  (r^{n-1} a(r) phi1')' = r^{n-1} phi1, phi1(r0) = 0, phi1 -> h far out
//
// where h is the exponentially growing spherical mean of e^{x.omega}.  Both
// are discretized with the conservative flux stencil on the uniform grid:
// the assembled matrix is tridiagonal and inverse-positive (an M-matrix), so
// the discrete solutions inherit a maximum principle exactly.

namespace exwave {

struct TridiagonalSystem {
  std::vector<double> lower;  // lower[i] multiplies x[i-1]; lower[0] unused
  std::vector<double> diag;
  std::vector<double> upper;  // upper[i] multiplies x[i+1]; upper[m-1] unused
  std::vector<double> rhs;

  std::size_t size() const { return diag.size(); }
};

// Thomas elimination.  The assembled systems are diagonally dominant (or an
// inverse-positive perturbation of such), so no pivoting is needed; a pivot
// collapse still gets reported rather than silently producing garbage.
inline std::vector<double> thomas_solve(const TridiagonalSystem& sys) {
  const std::size_t m = sys.size();
  require(m >= 2, errc::invalid_argument, "tridiagonal system too small");
  std::vector<double> c(m), d(m);
  double piv = sys.diag[0];
  require(std::isfinite(piv) && std::abs(piv) > 1e-300, errc::singular_system,
          "zero pivot at row 0");
  c[0] = sys.upper[0] / piv;
  d[0] = sys.rhs[0] / piv;
  for (std::size_t i = 1; i < m; ++i) {
    piv = sys.diag[i] - sys.lower[i] * c[i - 1];
    require(std::isfinite(piv) && std::abs(piv) > 1e-300, errc::singular_system,
            "zero pivot at row " + std::to_string(i));
    c[i] = (i + 1 < m) ? sys.upper[i] / piv : 0.0;
    d[i] = (sys.rhs[i] - sys.lower[i] * d[i - 1]) / piv;
  }
  std::vector<double> x(m);
  x[m - 1] = d[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

inline double max_row_residual(const TridiagonalSystem& sys, const std::vector<double>& x) {
  double worst = 0.0;
  const std::size_t m = sys.size();
  for (std::size_t i = 0; i < m; ++i) {
    double ax = sys.diag[i] * x[i];
    double scale = std::abs(sys.diag[i] * x[i]);
    if (i > 0) {
      ax += sys.lower[i] * x[i - 1];
      scale = std::max(scale, std::abs(sys.lower[i] * x[i - 1]));
    }
    if (i + 1 < m) {
      ax += sys.upper[i] * x[i + 1];
      scale = std::max(scale, std::abs(sys.upper[i] * x[i + 1]));
    }
    scale = std::max(scale, std::abs(sys.rhs[i]));
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(ax - sys.rhs[i]) / scale);
  }
  return worst;
}

namespace detail {
// Face coefficient a(r_{i+1/2}) r_{i+1/2}^{n-1} of the conservative stencil.
inline double face_coefficient(const CoefficientField& field, const RadialGrid& grid,
                               std::size_t i) {
  const double rf = grid.node(i) + 0.5 * grid.spacing;
  const double geom = grid.dim == 1 ? 1.0 : std::pow(rf, grid.dim - 1);
  return field(rf) * geom;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// phi0, the harmonic weight (n >= 3 only)

enum class Phi0Outer { AsymptoticRatio, Dirichlet };

struct HarmonicWeight {
  RadialGrid grid;
  std::vector<double> values;
  double residual_max = 0.0;
};

// Far-field closure: outside the coefficient bump a == 1 and every solution
// is A + B r^{2-n}; normalizing A = 1 fixes the two-node ratio
// (phi-1)(r_M) / (phi-1)(r_{M-1}) = (r_M/r_{M-1})^{2-n}, which closes the
// system without knowing B.  Alternatively a plain Dirichlet value can be
// imposed at r_outer (used when the exact truncated solution is known).
inline HarmonicWeight solve_phi0(const CoefficientField& field, const RadialGrid& grid,
                                 Phi0Outer outer = Phi0Outer::AsymptoticRatio,
                                 double outer_value = 1.0) {
  require(grid.dim >= 3, errc::dimension_too_low, "phi0 needs n >= 3");
  require(grid.count >= 3, errc::invalid_argument, "phi0 grid too small");
  const std::size_t m = grid.count;
  TridiagonalSystem sys;
  sys.lower.assign(m, 0.0);
  sys.diag.assign(m, 0.0);
  sys.upper.assign(m, 0.0);
  sys.rhs.assign(m, 0.0);

  sys.diag[0] = 1.0;  // phi0(r0) = 0
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double cm = detail::face_coefficient(field, grid, i - 1);
    const double cp = detail::face_coefficient(field, grid, i);
    sys.lower[i] = -cm;
    sys.diag[i] = cm + cp;
    sys.upper[i] = -cp;
  }
  if (outer == Phi0Outer::AsymptoticRatio) {
    const double ratio = std::pow(grid.r_outer() / grid.node(m - 2), 2.0 - grid.dim);
    sys.lower[m - 1] = -ratio;
    sys.diag[m - 1] = 1.0;
    sys.rhs[m - 1] = 1.0 - ratio;
  } else {
    sys.diag[m - 1] = 1.0;
    sys.rhs[m - 1] = outer_value;
  }

  HarmonicWeight w{grid, thomas_solve(sys), 0.0};
  w.residual_max = max_row_residual(sys, w.values);
  require(w.residual_max <= 1e-10, errc::singular_system,
          "phi0 stencil residual " + std::to_string(w.residual_max));
  for (std::size_t i = 1; i + 1 < m; ++i)
    require(w.values[i] > 0.0 && w.values[i] < 1.0, errc::singular_system,
            "phi0 escaped (0,1) at node " + std::to_string(i));
  return w;
}

// ---------------------------------------------------------------------------
// phi1, the eigenweight, and its far-field profile h

// Spherical mean of e^{x.omega} over the unit sphere, |x| = r:
//   n = 1: e^r + e^{-r};  n = 3: 4 pi sinh(r)/r;
//   general n >= 2: (2 pi)^{n/2} r^{1-n/2} I_{n/2-1}(r).
// The scaled variants return h(r) e^{-r}, which stays O(1) and is what the
// scaled solve and the outer boundary condition actually consume.
inline double farfield_h_scaled(int n, double r) {
  require(n >= 1, errc::dimension_too_low, "farfield profile needs n >= 1");
  if (n == 1) return 1.0 + std::exp(-2.0 * r);
  if (n == 3) return r > 0.0 ? 2.0 * kPi * (1.0 - std::exp(-2.0 * r)) / r : 4.0 * kPi * std::exp(-r);
  const double nu = 0.5 * n - 1.0;
  double bessel_scaled;
  if (r <= 600.0) {
    bessel_scaled = std::cyl_bessel_i(nu, r) * std::exp(-r);
  } else {
    // large-argument expansion of I_nu(r) e^{-r}
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 20; ++k) {
      term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * r);
      if (std::abs(term) < 1e-18) break;
      sum += term;
    }
    bessel_scaled = sum / std::sqrt(2.0 * kPi * r);
  }
  return std::pow(2.0 * kPi, 0.5 * n) * std::pow(r, 1.0 - 0.5 * n) * bessel_scaled;
}

inline double farfield_h(int n, double r) { return farfield_h_scaled(n, r) * std::exp(r); }

struct EigenWeight {
  RadialGrid grid;
  std::vector<double> values;         // phi1 at nodes
  std::vector<double> scaled_values;  // phi1(r) e^{-(r - r0)}, overflow-safe
  double C_fit = 0.0;                 // smallest C with phi1 <= C (1+r)^{-(n-1)/2} e^r on nodes
  double residual_max = 0.0;
};

// Assembles the phi1 system in the scaled unknowns w_i = phi1(r_i) e^{-(r_i-r0)}.
// Row i of the unscaled conservative stencil is multiplied by e^{-(r_i-r0)}
// and column j by e^{+(r_j-r0)}: a similarity transform by a positive
// diagonal, so inverse-positivity (hence the comparison principle) survives
// while every matrix entry stays O(r^{n-1}).
inline TridiagonalSystem assemble_phi1_system(const CoefficientField& field,
                                              const RadialGrid& grid) {
  require(grid.dim >= 1, errc::dimension_too_low, "phi1 needs n >= 1");
  require(grid.count >= 3, errc::invalid_argument, "phi1 grid too small");
  const std::size_t m = grid.count;
  const double h = grid.spacing;
  const double up = std::exp(h), down = std::exp(-h);
  TridiagonalSystem sys;
  sys.lower.assign(m, 0.0);
  sys.diag.assign(m, 0.0);
  sys.upper.assign(m, 0.0);
  sys.rhs.assign(m, 0.0);

  sys.diag[0] = 1.0;  // phi1(r0) = 0
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double cm = detail::face_coefficient(field, grid, i - 1);
    const double cp = detail::face_coefficient(field, grid, i);
    const double r = grid.node(i);
    const double vol = grid.dim == 1 ? 1.0 : std::pow(r, grid.dim - 1);
    sys.lower[i] = -cm * down;
    sys.diag[i] = cm + cp + h * h * vol;
    sys.upper[i] = -cp * up;
  }
  // outer condition: the decaying correction phi1 - h vanishes at r_outer
  sys.diag[m - 1] = 1.0;
  sys.rhs[m - 1] = farfield_h_scaled(grid.dim, grid.r_outer()) * std::exp(grid.r0);
  return sys;
}

inline EigenWeight eigen_weight_from_scaled(const RadialGrid& grid,
                                            const TridiagonalSystem& sys,
                                            const std::vector<double>& w) {
  EigenWeight ew{grid, {}, w, 0.0, max_row_residual(sys, w)};
  require(ew.residual_max <= 1e-10, errc::singular_system,
          "phi1 stencil residual " + std::to_string(ew.residual_max));
  const std::size_t m = grid.count;
  ew.values.resize(m);
  double log_c = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.node(i);
    ew.values[i] = w[i] * std::exp(r - grid.r0);
    if (i > 0 && i + 1 < m)
      require(w[i] > 0.0, errc::singular_system,
              "phi1 not positive at node " + std::to_string(i));
    if (w[i] > 0.0)
      log_c = std::max(log_c, std::log(w[i]) - grid.r0 +
                                  0.5 * (grid.dim - 1) * std::log1p(r));
  }
  ew.C_fit = std::exp(log_c);
  return ew;
}

inline EigenWeight solve_phi1(const CoefficientField& field, const RadialGrid& grid) {
  const TridiagonalSystem sys = assemble_phi1_system(field, grid);
  return eigen_weight_from_scaled(grid, sys, thomas_solve(sys));
}

// ---------------------------------------------------------------------------
// Hopf-style boundary gradient bound

struct BoundFit {
  double constant = 0.0;        // fitted constant of the bound
  double exponent_theory = 0.0; // exponent the bound asserts
  double slope_fit = 0.0;       // measured log-log slope (diagnostic)
  bool pass = false;
};

// phi0 must grow at least linearly off the obstacle: C_** = min over nodes in
// (r0, r0+R] of phi0 / (r - r0) has to stay strictly positive, otherwise the
// boundary-singular integrals downstream lose their only crutch.
inline BoundFit check_hopf_distance(const HarmonicWeight& phi0, double R) {
  const RadialGrid& g = phi0.grid;
  double c = std::numeric_limits<double>::infinity();
  std::vector<double> dist, vals;
  for (std::size_t i = 1; i < g.count; ++i) {
    const double d = g.node(i) - g.r0;
    if (d > R) break;
    c = std::min(c, phi0.values[i] / d);
    dist.push_back(d);
    vals.push_back(std::max(phi0.values[i], 1e-300));
  }
  require(!dist.empty(), errc::empty_near_region,
          "no grid nodes in (r0, r0+R]; refine the grid or widen R");
  BoundFit fit;
  fit.constant = c;
  fit.exponent_theory = 1.0;
  fit.slope_fit = dist.size() >= 2 ? log_log_fit(dist, vals).slope : 1.0;
  fit.pass = c > 1e-8;
  return fit;
}

}  // namespace exwave

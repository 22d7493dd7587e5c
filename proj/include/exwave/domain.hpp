#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "exwave/errors.hpp"

// Problem geometry and coefficients for the exterior-domain wave runs: the
// obstacle ball radius r0, data support radius R, the radial ellipticity
// profile a(r), and the uniform radial grid everything is sampled on.

namespace exwave {

inline constexpr double kPi = 3.14159265358979323846;

// Surface area of the unit sphere in R^n.  n = 1 counts the two endpoints.
inline double unit_sphere_area(int n) {
  require(n >= 1, errc::dimension_too_low, "unit_sphere_area needs n >= 1");
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline double unit_ball_volume(int n) { return unit_sphere_area(n) / n; }

enum class SourceKind { DisplacementPower, VelocityPower };

inline const char* source_kind_name(SourceKind k) {
  return k == SourceKind::DisplacementPower ? "displacement_power" : "velocity_power";
}

// Larger root of (n-1)p^2 - (n+1)p - 2 = 0; defined for n >= 2.
inline std::optional<double> critical_p1(int n) {
  if (n < 2) return std::nullopt;
  const double a = n - 1.0, b = -(n + 1.0), c = -2.0;
  return (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
}

// 2/(n-1) + 1; +infinity when n = 1.
inline double critical_p2(int n) {
  require(n >= 1, errc::dimension_too_low, "critical_p2 needs n >= 1");
  if (n == 1) return std::numeric_limits<double>::infinity();
  return 2.0 / (n - 1.0) + 1.0;
}

struct ProblemSpec {
  int n = 3;
  double p = 2.0;
  SourceKind source = SourceKind::DisplacementPower;

  static ProblemSpec make(int n, double p, SourceKind source) {
    require(p > 1.0, errc::invalid_argument, "power p must exceed 1");
    if (source == SourceKind::DisplacementPower) {
      require(n >= 3, errc::dimension_too_low, "displacement-power source needs n >= 3");
      const double p1 = *critical_p1(n);
      require(p < p1, errc::critical_or_supercritical,
              "displacement-power source needs p below the critical root");
    } else {
      require(n >= 1, errc::dimension_too_low, "velocity-power source needs n >= 1");
      require((n - 1.0) * (p - 1.0) <= 2.0, errc::critical_or_supercritical,
              "velocity-power source needs (n-1)(p-1) <= 2");
    }
    return ProblemSpec{n, p, source};
  }
};

struct DomainSpec {
  double r0 = 1.0;  // obstacle radius; Dirichlet boundary sits here
  double R = 2.0;   // data support radius, R > r0

  static DomainSpec make(double r0, double R) {
    require(r0 > 0.0, errc::invalid_argument, "obstacle radius must be positive");
    require(R > r0, errc::invalid_argument, "support radius must exceed obstacle radius");
    return DomainSpec{r0, R};
  }
};

// Standard mollifier profile, normalized so bump(0) = 1, support |s| < 1.
inline double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 + 1.0 / (s * s - 1.0));
}

// Radial profile registry: "identity", "none", or "bump(amp, center, width)".
// Profiles are reused for the coefficient a(r) (as 1 + bump) and for data f, g
// (as plain bumps), so the baseline value is a parameter.
struct RadialProfile {
  std::string name;                      // normalized textual form
  std::function<double(double)> eval;    // r -> value
  double support_lo = 0.0, support_hi = 0.0;  // nonzero part for bumps; 0,0 = everywhere/none
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_args(const std::string& inside, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(inside);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    require(!tok.empty(), errc::config_error, "empty argument in " + what);
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      fail(errc::config_error, "bad number '" + tok + "' in " + what);
    }
    require(pos == tok.size(), errc::config_error, "trailing junk in '" + tok + "' of " + what);
    out.push_back(v);
  }
  return out;
}
}  // namespace detail

// Parses a profile expression with the given value added to `base` outside
// bumps ("identity" means constant base; data use base = 0 with "none").
inline RadialProfile parse_profile(const std::string& text, double base) {
  const std::string t = detail::trim(text);
  if (t == "identity" || t == "none" || t == "zero") {
    return RadialProfile{t, [base](double) { return base; }, 0.0, 0.0};
  }
  if (t.rfind("bump", 0) == 0) {
    const auto open = t.find('('), close = t.rfind(')');
    require(open != std::string::npos && close == t.size() - 1 && close > open,
            errc::config_error, "malformed bump profile '" + t + "'");
    const auto args = detail::parse_args(t.substr(open + 1, close - open - 1), "bump profile");
    require(args.size() == 3, errc::config_error, "bump profile needs (amplitude, center, width)");
    const double amp = args[0], center = args[1], width = args[2];
    require(width > 0.0, errc::config_error, "bump width must be positive");
    return RadialProfile{
        t, [=](double r) { return base + amp * bump((r - center) / width); },
        center - width, center + width};
  }
  fail(errc::config_error, "unknown profile '" + t + "'");
}

struct CoefficientField {
  RadialProfile profile;  // a(r), sampled on grid nodes
  double C_ell = 1.0;     // ellipticity constant: 1/C_ell <= a <= C_ell

  double operator()(double r) const { return profile.eval(r); }

  static CoefficientField make(const RadialProfile& profile, double C_ell) {
    require(C_ell >= 1.0, errc::invalid_argument, "ellipticity constant must be >= 1");
    return CoefficientField{profile, C_ell};
  }

  static CoefficientField identity() { return CoefficientField{parse_profile("identity", 1.0), 1.0}; }
};

// Uniform radial grid on [r0, r_outer].  Nodes are never accumulated, always
// r0 + i*spacing, so uniformity is exact.
struct RadialGrid {
  double r0 = 0.0;
  double spacing = 0.0;
  std::size_t count = 0;  // number of nodes, >= 2
  int dim = 3;            // ambient dimension n, fixes the volume weight

  double node(std::size_t i) const { return r0 + static_cast<double>(i) * spacing; }
  double r_outer() const { return node(count - 1); }

  // Volume element weight for radial integrals: omega_{n-1} r^{n-1} for
  // n >= 2.  For n = 1 only the right component x > r0 is simulated and the
  // weight is 1 (the mirrored component would contribute an overall factor 2).
  double volume_weight(double r) const {
    if (dim == 1) return 1.0;
    return unit_sphere_area(dim) * std::pow(r, dim - 1);
  }

  bool same_layout(const RadialGrid& o) const {
    return r0 == o.r0 && spacing == o.spacing && count == o.count && dim == o.dim;
  }
};

// Grid sized so a run of horizon T_max keeps its support strictly inside:
// r_outer >= r0 + R + sqrt(C_ell)*horizon + 2*spacing.
inline RadialGrid build_grid(const DomainSpec& dom, double spacing, double horizon,
                             double C_ell, int dim) {
  require(spacing > 0.0, errc::non_positive_spacing, "grid spacing must be positive");
  require(horizon >= 0.0, errc::horizon_negative, "grid horizon must be nonnegative");
  require(C_ell >= 1.0, errc::invalid_argument, "ellipticity constant must be >= 1");
  require(dim >= 1, errc::dimension_too_low, "grid dimension must be >= 1");
  const double span = dom.R + std::sqrt(C_ell) * horizon + 2.0 * spacing;
  auto cells = static_cast<std::size_t>(std::ceil(span / spacing - 1e-12));
  while (dom.r0 + static_cast<double>(cells) * spacing <
         dom.r0 + span - 1e-12 * span)
    ++cells;
  return RadialGrid{dom.r0, spacing, cells + 1, dim};
}

// Largest node index with node(i) <= r_cut (clamped to the last node).
inline std::size_t cut_index(const RadialGrid& grid, double r_cut) {
  if (r_cut >= grid.r_outer()) return grid.count - 1;
  if (r_cut <= grid.r0) return 0;
  return static_cast<std::size_t>(std::floor((r_cut - grid.r0) / grid.spacing + 1e-12));
}

// Trapezoid rule with the radial volume weight over nodes 0..last.
// f(i) supplies the integrand value at node i.
template <class F>
double integrate_nodes(const RadialGrid& grid, std::size_t last, F&& f) {
  if (last == 0 || last >= grid.count) last = grid.count - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    const double w = (i == 0 || i == last) ? 0.5 : 1.0;
    sum += w * f(i) * grid.volume_weight(grid.node(i));
  }
  return sum * grid.spacing;
}

struct EllipticityReport {
  double min_a = 0.0;
  double max_a = 0.0;
  double tail_deviation = 0.0;  // max |a - 1| over nodes with r >= R
  bool pass = false;
  std::optional<std::size_t> first_violation;  // node index, when pass = false
};

// Checks the sampled coefficient against its contract: bounded by C_ell both
// ways everywhere, and identically 1 from the support radius outward.
inline EllipticityReport validate_coefficient(const CoefficientField& field,
                                              const RadialGrid& grid, double R) {
  EllipticityReport rep;
  rep.min_a = std::numeric_limits<double>::infinity();
  rep.max_a = -rep.min_a;
  rep.pass = true;
  const double lo = 1.0 / field.C_ell - 1e-12, hi = field.C_ell + 1e-12;
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double r = grid.node(i), a = field(r);
    rep.min_a = std::min(rep.min_a, a);
    rep.max_a = std::max(rep.max_a, a);
    bool ok = a >= lo && a <= hi && std::isfinite(a);
    if (r >= R) {
      rep.tail_deviation = std::max(rep.tail_deviation, std::abs(a - 1.0));
      ok = ok && a == 1.0;  // tail must be exact so far-field asymptotics hold
    }
    if (!ok && !rep.first_violation) {
      rep.first_violation = i;
      rep.pass = false;
    }
  }
  return rep;
}

}  // namespace exwave

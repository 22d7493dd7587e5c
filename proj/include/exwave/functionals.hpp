#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "exwave/domain.hpp"
#include "exwave/elliptic.hpp"
#include "exwave/errors.hpp"
#include "exwave/numerics.hpp"
#include "exwave/wave.hpp"

// The blowup functionals F0, F1, G0 and the verification suite: the chain of
// inequalities that forces finite lifespan, each checked sample-by-sample on
// a recorded trace, plus the power-law growth estimates for the weight
// integrals that the chain's constants come from.

namespace exwave {

struct WeightPair {
  std::optional<HarmonicWeight> phi0;
  EigenWeight phi1;
};

namespace detail {
inline void check_same_grid(const RadialGrid& a, const RadialGrid& b) {
  require(a.same_layout(b), errc::grid_mismatch, "state and weight grids differ");
}
}  // namespace detail

// F0(t) = integral of u phi0 over the exterior domain.
inline double compute_F0(const WaveState& s, const HarmonicWeight& phi0) {
  detail::check_same_grid(s.grid, phi0.grid);
  return integrate_nodes(s.grid, s.grid.count - 1,
                         [&](std::size_t i) { return s.u[i] * phi0.values[i]; });
}

// F1(t) = integral of u psi1, psi1 = phi1 e^{-t}.
inline double compute_F1(const WaveState& s, const EigenWeight& phi1) {
  detail::check_same_grid(s.grid, phi1.grid);
  return std::exp(-s.t) * integrate_nodes(s.grid, s.grid.count - 1, [&](std::size_t i) {
           return s.u[i] * phi1.values[i];
         });
}

// G0(t) = integral psi1 u_t - (cumulative source integral)/2 - (eps/2) integral phi1 g.
// `cumulative` is integral over [0,t] of integral psi1 |u_t|^p, maintained by the
// run loop; `half_data_term` is (eps/2) integral phi1 g.
inline double compute_G0(const WaveState& s, const EigenWeight& phi1, double cumulative,
                         double half_data_term) {
  detail::check_same_grid(s.grid, phi1.grid);
  const double v1 = std::exp(-s.t) * integrate_nodes(s.grid, s.grid.count - 1,
                                                     [&](std::size_t i) {
                                                       return s.v[i] * phi1.values[i];
                                                     });
  return v1 - 0.5 * cumulative - half_data_term;
}

// ---------------------------------------------------------------------------
// Inequality suite

enum class Inequality {
  Convexity33,       // F0'' >= k (t+R)^{-n(p-1)} |F0|^p
  Lemma31LowerBound, // F1 >= data-seeded exponential lower bound
  LowerBound36,      // F0 >= delta-grown power of (t+R), eventually
  Ineq413,           // integral psi1 u_t >= cumulative/2 + data seed
  Riccati417,        // F' >= C9 |F|^p (t+R)^{-(n-1)(p-1)/2}
};

inline Inequality parse_inequality(const std::string& s) {
  if (s == "convexity33") return Inequality::Convexity33;
  if (s == "lemma31") return Inequality::Lemma31LowerBound;
  if (s == "lowerbound36") return Inequality::LowerBound36;
  if (s == "ineq413") return Inequality::Ineq413;
  if (s == "riccati417") return Inequality::Riccati417;
  fail(errc::unknown_inequality, "unknown inequality '" + s + "'");
}

inline const char* inequality_name(Inequality w) {
  switch (w) {
    case Inequality::Convexity33: return "convexity33";
    case Inequality::Lemma31LowerBound: return "lemma31";
    case Inequality::LowerBound36: return "lowerbound36";
    case Inequality::Ineq413: return "ineq413";
    case Inequality::Riccati417: return "riccati417";
  }
  return "?";
}

struct InequalityReport {
  std::string name;
  std::vector<double> times;    // sample times the margins refer to
  std::vector<double> margins;  // LHS - RHS, nonnegative when the bound holds
  double min_margin = std::numeric_limits<double>::infinity();
  bool pass = false;
  std::string note;
};

// Constants feeding the inequality suite.  All data integrals carry epsilon.
struct InequalityContext {
  ProblemSpec problem;
  DomainSpec domain;
  double k = std::numeric_limits<double>::quiet_NaN();       // Vol(B^n)^{-(p-1)}
  double eps_c0 = std::numeric_limits<double>::quiet_NaN();  // seed of the F1 bound
  double delta = std::numeric_limits<double>::quiet_NaN();   // seed of the F0 bound
  double C5 = std::numeric_limits<double>::quiet_NaN();
  double C8 = std::numeric_limits<double>::quiet_NaN();
  double C9 = std::numeric_limits<double>::quiet_NaN();
  double int_f_phi1 = 0.0, int_g_phi1 = 0.0;
  double half_m_eps = 0.0;  // (eps/2) integral phi1 g
  double rel_tol = 1e-6;    // base relative margin tolerance
};

namespace detail {
// Second difference on possibly uneven sample times.
inline double second_difference(const std::vector<double>& t, const std::vector<double>& y,
                                std::size_t j) {
  const double h1 = t[j] - t[j - 1], h2 = t[j + 1] - t[j];
  return 2.0 * ((y[j + 1] - y[j]) / h2 - (y[j] - y[j - 1]) / h1) / (h1 + h2);
}

inline InequalityReport finish_report(InequalityReport rep, const std::vector<double>& tols) {
  rep.pass = true;
  for (std::size_t j = 0; j < rep.margins.size(); ++j) {
    rep.min_margin = std::min(rep.min_margin, rep.margins[j]);
    if (rep.margins[j] < -(tols[j] + 1e-14)) rep.pass = false;
  }
  if (rep.margins.empty()) {
    rep.pass = false;
    rep.note = "no samples to check";
  }
  return rep;
}
}  // namespace detail

inline InequalityReport verify_inequality(const SimTrace& tr, Inequality which,
                                          const InequalityContext& ctx) {
  require(tr.times.size() >= 3, errc::insufficient_samples,
          "trace too short for inequality checks");
  const double R = ctx.domain.R;
  const double p = ctx.problem.p;
  const int n = ctx.problem.n;
  InequalityReport rep;
  rep.name = inequality_name(which);

  switch (which) {
    case Inequality::Convexity33: {
      require(!std::isnan(tr.F0.front()), errc::missing_phi0,
              "convexity check needs phi0 (n >= 3)");
      // centered second differences on interior samples; the differencing
      // error is estimated from the recorded F0'' series (= src0) itself
      std::vector<double> tols;
      for (std::size_t j = 1; j + 1 < tr.times.size(); ++j) {
        const double d2 = detail::second_difference(tr.times, tr.F0, j);
        const double rhs =
            ctx.k * std::pow(tr.times[j] + R, -static_cast<double>(n) * (p - 1.0)) *
            pow_abs(tr.F0[j], p);
        rep.times.push_back(tr.times[j]);
        rep.margins.push_back(d2 - rhs);
        double diff_err = 0.0;
        if (j >= 2 && j + 2 < tr.times.size()) {
          const double dt_s = tr.times[j + 1] - tr.times[j];
          diff_err = 0.5 * dt_s * dt_s *
                     std::abs(detail::second_difference(tr.times, tr.src0, j));
        }
        tols.push_back(ctx.rel_tol * std::max(std::abs(d2), std::abs(rhs)) + diff_err);
      }
      return detail::finish_report(std::move(rep), tols);
    }

    case Inequality::Lemma31LowerBound: {
      std::vector<double> tols;
      for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const double t = tr.times[j];
        const double decay = std::exp(-2.0 * t);
        const double lower = 0.5 * (1.0 - decay) * (ctx.int_f_phi1 + ctx.int_g_phi1) +
                             decay * ctx.int_f_phi1;
        rep.times.push_back(t);
        rep.margins.push_back(tr.F1[j] - lower);
        tols.push_back(ctx.rel_tol * std::max(std::abs(tr.F1[j]), lower));
      }
      return detail::finish_report(std::move(rep), tols);
    }

    case Inequality::LowerBound36: {
      require(!std::isnan(tr.F0.front()), errc::missing_phi0,
              "the F0 lower bound needs phi0 (n >= 3)");
      require(ctx.delta > 0.0, errc::invalid_argument,
              "the F0 lower bound needs a positive delta seed");
      const double a = n + 1.0 - 0.5 * (n - 1.0) * p;
      // The twice-integrated source bound gives, for all t,
      //   F0 >= delta [ (t+R)^a - R^a - a R^{a-1} t ],
      // which dominates (1/2) delta (t+R)^a once (t+R)^a >= 2(R^a + a R^{a-1} t).
      // Both forms are checked; the halved form only on its own window.
      std::size_t window = 0;
      double worst_half = std::numeric_limits<double>::infinity();
      double worst_half_tol = 0.0;
      std::vector<double> tols;
      for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const double t = tr.times[j];
        const double grown = std::pow(t + R, a);
        const double full = ctx.delta * (grown - std::pow(R, a) - a * std::pow(R, a - 1.0) * t);
        rep.times.push_back(t);
        rep.margins.push_back(tr.F0[j] - full);
        tols.push_back(ctx.rel_tol * std::max(std::abs(tr.F0[j]), std::abs(full)));
        if (grown >= 2.0 * (std::pow(R, a) + a * std::pow(R, a - 1.0) * t)) {
          ++window;
          const double half_margin = tr.F0[j] - 0.5 * ctx.delta * grown;
          if (half_margin < worst_half) {
            worst_half = half_margin;
            worst_half_tol = ctx.rel_tol * std::max(std::abs(tr.F0[j]), 0.5 * ctx.delta * grown);
          }
        }
      }
      rep = detail::finish_report(std::move(rep), tols);
      if (window > 0) {
        rep.note = "halved-form window: " + std::to_string(window) + " samples, min margin " +
                   std::to_string(worst_half);
        if (worst_half < -(worst_half_tol + 1e-14)) rep.pass = false;
      } else {
        rep.note = "halved-form window empty (trace ends before its onset)";
      }
      return rep;
    }

    case Inequality::Ineq413: {
      std::vector<double> tols;
      for (std::size_t j = 0; j < tr.times.size(); ++j) {
        rep.times.push_back(tr.times[j]);
        rep.margins.push_back(tr.V1[j] - tr.Fcum[j]);
        tols.push_back(ctx.rel_tol * std::max(std::abs(tr.V1[j]), std::abs(tr.Fcum[j])));
      }
      return detail::finish_report(std::move(rep), tols);
    }

    case Inequality::Riccati417: {
      require(std::isfinite(ctx.C9) && ctx.C9 > 0.0, errc::invalid_argument,
              "Riccati check needs a fitted C9");
      const double expo = 0.5 * (n - 1.0) * (p - 1.0);
      const bool have_fp = tr.Fp.size() == tr.times.size() && !tr.Fp.empty();
      std::vector<double> tols;
      for (std::size_t j = 1; j + 1 < tr.times.size(); ++j) {
        double lhs;
        double diff_err = 0.0;
        if (have_fp) {
          lhs = tr.Fp[j];  // recorded F' = (1/2) integral psi1 |u_t|^p
        } else {
          lhs = (tr.Fcum[j + 1] - tr.Fcum[j - 1]) / (tr.times[j + 1] - tr.times[j - 1]);
          const double dt_s = tr.times[j + 1] - tr.times[j];
          diff_err = 0.5 * dt_s * dt_s * std::abs(detail::second_difference(tr.times, tr.Fcum, j));
        }
        const double rhs =
            ctx.C9 * pow_abs(tr.Fcum[j], p) / std::pow(tr.times[j] + R, expo);
        rep.times.push_back(tr.times[j]);
        rep.margins.push_back(lhs - rhs);
        tols.push_back(ctx.rel_tol * std::max(std::abs(lhs), std::abs(rhs)) + diff_err);
      }
      return detail::finish_report(std::move(rep), tols);
    }
  }
  fail(errc::unknown_inequality, "unhandled inequality");
}

// ---------------------------------------------------------------------------
// Weight-integral growth estimates

enum class EstimateLemma { L24, L25, L26 };

inline EstimateLemma parse_estimate_lemma(const std::string& s) {
  if (s == "l24") return EstimateLemma::L24;
  if (s == "l25") return EstimateLemma::L25;
  if (s == "l26") return EstimateLemma::L26;
  fail(errc::unknown_inequality, "unknown estimate lemma '" + s + "'");
}

inline const char* estimate_lemma_name(EstimateLemma w) {
  switch (w) {
    case EstimateLemma::L24: return "l24";
    case EstimateLemma::L25: return "l25";
    case EstimateLemma::L26: return "l26";
  }
  return "?";
}

// Integral over the truncated exterior {r0 <= r <= t+R} of the lemma's
// integrand at time t.  The L25 integrand has a removable boundary
// singularity phi0^{-1/(p-1)}: on the two cells nearest r0 it is replaced by
// its product-form bound C_**^{-1/(p-1)} C3^{p'} dist(r), with C_** the Hopf
// constant and C3 the near-boundary Lipschitz bound of phi1.
inline double estimate_integral(const WeightPair& weights, const ProblemSpec& problem,
                                const DomainSpec& domain, double t, EstimateLemma which) {
  const RadialGrid& g = weights.phi1.grid;
  require(t >= 0.0, errc::invalid_argument, "estimate integrals need t >= 0");
  require(t + domain.R <= g.r_outer() + 1e-12, errc::invalid_argument,
          "grid too small for requested time");
  const std::size_t last = cut_index(g, t + domain.R);
  const double pp = problem.p / (problem.p - 1.0);
  const double decay = std::exp(-t);

  switch (which) {
    case EstimateLemma::L24:
      return integrate_nodes(g, last, [&](std::size_t i) {
        return std::pow(weights.phi1.values[i] * decay, pp);
      });
    case EstimateLemma::L26:
      return decay * integrate_nodes(g, last,
                                     [&](std::size_t i) { return weights.phi1.values[i]; });
    case EstimateLemma::L25: {
      require(weights.phi0.has_value() && g.dim >= 3, errc::missing_phi0,
              "L25 needs phi0 (n >= 3)");
      const HarmonicWeight& phi0 = *weights.phi0;
      detail::check_same_grid(g, phi0.grid);
      const double inv_exp = -1.0 / (problem.p - 1.0);
      const BoundFit hopf = check_hopf_distance(phi0, domain.R);
      double c3 = 0.0;
      for (std::size_t i = 1; i < g.count && g.node(i) <= g.r0 + domain.R; ++i)
        c3 = std::max(c3, weights.phi1.values[i] / (g.node(i) - g.r0));
      const double near_coef =
          std::pow(hopf.constant, inv_exp) * std::pow(c3 * decay, pp);
      return integrate_nodes(g, last, [&](std::size_t i) {
        if (i == 0) return 0.0;
        const double dist = g.node(i) - g.r0;
        if (dist <= 2.0 * g.spacing + 1e-12) return near_coef * dist;
        return std::pow(phi0.values[i], inv_exp) *
               std::pow(weights.phi1.values[i] * decay, pp);
      });
    }
  }
  fail(errc::unknown_inequality, "unhandled estimate lemma");
}

inline double estimate_exponent_theory(const ProblemSpec& problem, EstimateLemma which) {
  const double n = problem.n, p = problem.p, pp = p / (p - 1.0);
  switch (which) {
    case EstimateLemma::L24:
    case EstimateLemma::L25: return n - 1.0 - 0.5 * (n - 1.0) * pp;
    case EstimateLemma::L26: return 0.5 * (n - 1.0);
  }
  return 0.0;
}

// Fits the measured growth of the lemma integral against its claimed power of
// (t+R).  Passes when the measured slope does not exceed theory + 0.1; the
// fitted constant is the sup of integral / (t+R)^exponent over the time grid.
inline BoundFit verify_estimate_lemma(const WeightPair& weights, const ProblemSpec& problem,
                                      const DomainSpec& domain,
                                      const std::vector<double>& t_grid, EstimateLemma which) {
  require(t_grid.size() >= 3, errc::insufficient_samples, "estimate fit needs >= 3 times");
  double t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
  for (double t : t_grid) {
    require(t > 0.0, errc::invalid_argument, "estimate fit needs positive times");
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  require(t_max >= 10.0 * t_min - 1e-12, errc::invalid_argument,
          "estimate fit needs a time grid spanning a decade");

  const double expo = estimate_exponent_theory(problem, which);
  std::vector<double> shifted, vals;
  double constant = 0.0;
  for (double t : t_grid) {
    const double val = estimate_integral(weights, problem, domain, t, which);
    shifted.push_back(t + domain.R);
    vals.push_back(val);
    constant = std::max(constant, val / std::pow(t + domain.R, expo));
  }
  BoundFit fit;
  fit.constant = constant;
  fit.exponent_theory = expo;
  fit.slope_fit = log_log_fit(shifted, vals).slope;
  fit.pass = fit.slope_fit <= expo + 0.1;
  return fit;
}

// ---------------------------------------------------------------------------
// Context assembly from a finished run

inline InequalityContext build_context(const RunOutput& run, const SimConfig& cfg) {
  InequalityContext ctx;
  ctx.problem = cfg.problem;
  ctx.domain = cfg.domain;
  ctx.int_f_phi1 = run.int_f_phi1;
  ctx.int_g_phi1 = run.int_g_phi1;
  ctx.half_m_eps = 0.5 * run.int_g_phi1;
  ctx.eps_c0 = std::min(run.int_f_phi1, 0.5 * (run.int_f_phi1 + run.int_g_phi1));
  const double p = cfg.problem.p;
  const int n = cfg.problem.n;
  if (n >= 3) ctx.k = std::pow(unit_ball_volume(n), -(p - 1.0));

  WeightPair weights{run.phi0, run.phi1};
  const double l26_expo = estimate_exponent_theory(cfg.problem, EstimateLemma::L26);
  const double l25_expo = estimate_exponent_theory(cfg.problem, EstimateLemma::L25);
  double c8 = 0.0, c5 = 0.0;
  for (double t : run.trace.times) {
    if (t + cfg.domain.R > run.grid.r_outer()) break;
    const double i26 = estimate_integral(weights, cfg.problem, cfg.domain, t, EstimateLemma::L26);
    c8 = std::max(c8, i26 / std::pow(t + cfg.domain.R, l26_expo));
    if (run.phi0) {
      const double i25 =
          estimate_integral(weights, cfg.problem, cfg.domain, t, EstimateLemma::L25);
      c5 = std::max(c5, i25 / std::pow(t + cfg.domain.R, l25_expo));
    }
  }
  ctx.C8 = c8;
  ctx.C9 = 0.5 / std::pow(c8, p - 1.0);
  if (run.phi0) {
    ctx.C5 = c5;
    const double a = n + 1.0 - 0.5 * (n - 1.0) * p;
    ctx.delta = std::pow(ctx.eps_c0, p) * std::pow(c5, -(p - 1.0)) / (a * (a - 1.0));
  }
  return ctx;
}

}  // namespace exwave

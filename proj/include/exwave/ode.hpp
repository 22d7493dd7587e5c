#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "exwave/domain.hpp"
#include "exwave/errors.hpp"
#include "exwave/numerics.hpp"

// The ODE side of the blowup argument: the comparison lemma's equality case
//
//   F'' = k (t+R)^{-q} F^p,  F(0), F'(0) given,
//
// its delta-rescaling to normalized variables, and the first-order Riccati
// bound with its closed-form blowup times in both decay regimes.

namespace exwave {

struct OdeProblem {
  double p = 2.0;
  double a = 1.0;      // exponent of the hypothesis lower bound delta (t+R)^a
  double q = 0.0;      // decay power of the convexity coefficient
  double R = 1.0;
  double k = 1.0;      // coefficient of the convexity bound
  double delta = 1.0;  // scale of the hypothesis lower bound
  // Initial values.  NaN selects the rescaling-normalized family
  //   F(0) = H0 delta^{-(q-2)/E},  F'(0) = H0' delta^{(p+1-q)/E},
  // E = (p-1)a - q + 2, H0 = 2 R^a, H0' = 2 a R^{a-1}: the trajectory then
  // transforms delta-free, so measured lifespans scale exactly like the
  // lemma's bound, and it starts with factor-2 headroom over the hypothesis
  // bound (headroom is verified by the observer in the tests, not assumed).
  double F0_init = std::numeric_limits<double>::quiet_NaN();
  double F0_prime_init = std::numeric_limits<double>::quiet_NaN();
};

inline double sideris_gap(const OdeProblem& o) { return (o.p - 1.0) * o.a - o.q + 2.0; }

inline bool sideris_in_scope(const OdeProblem& o) { return sideris_gap(o) > 0.0; }

// Lifespan exponent of the lemma: T(delta) <= c delta^{-exponent}.
inline double sideris_exponent(const OdeProblem& o) {
  require(sideris_in_scope(o), errc::invalid_argument, "lemma exponent needs (p-1)a > q-2");
  return (o.p - 1.0) / sideris_gap(o);
}

inline std::pair<double, double> resolve_initial_values(const OdeProblem& o) {
  require(o.p > 1.0 && o.a > 0.0 && o.R > 0.0 && o.k > 0.0, errc::invalid_argument,
          "ode problem needs p > 1, a > 0, R > 0, k > 0");
  if (!std::isnan(o.F0_init) && !std::isnan(o.F0_prime_init))
    return {o.F0_init, o.F0_prime_init};
  require(o.delta > 0.0, errc::invalid_argument,
          "default initial family needs a positive delta");
  const double E = sideris_gap(o);
  require(E > 0.0, errc::invalid_argument,
          "default initial family is defined only in lemma scope");
  const double H0 = 2.0 * std::pow(o.R, o.a);
  const double H0p = 2.0 * o.a * std::pow(o.R, o.a - 1.0);
  return {H0 * std::pow(o.delta, -(o.q - 2.0) / E),
          H0p * std::pow(o.delta, (o.p + 1.0 - o.q) / E)};
}

enum class BlowupMethod { Numerical, ClosedForm };

struct BlowupTime {
  double value = std::numeric_limits<double>::infinity();
  BlowupMethod method = BlowupMethod::Numerical;
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;     // upper/lower <= 1.02
  bool within_scope = true;   // lemma hypotheses hold for the parameters
};

namespace detail {

struct OdeShot {
  double t_threshold = std::numeric_limits<double>::infinity();  // F first > 1e12
  double t_deep = std::numeric_limits<double>::infinity();       // F first > 1e24
  bool blew_up = false;
};

// One adaptive RK4 pass over F'' = k (t+R)^{-q} F^p.  `safety` scales the
// step against the local growth rate; halving it is the refinement used to
// bracket the blowup time.  The observer sees every accepted step.
inline OdeShot shoot_sideris(const OdeProblem& o, double F0, double G0, double safety,
                             double t_cap,
                             const std::function<void(double, double, double)>& observer) {
  double t = 0.0, F = F0, G = G0;
  OdeShot shot;
  const auto rhs = [&](double tt, double FF) {
    return o.k * std::pow(tt + o.R, -o.q) * pow_abs(FF, o.p);
  };
  if (observer) observer(t, F, G);
  while (t < t_cap) {
    const double curve = std::sqrt(std::abs(rhs(t, F)) / std::max(std::abs(F), 1e-300));
    const double rate = curve + std::abs(G) / std::max(std::abs(F), 1e-300);
    double dt = safety / std::max(rate, 1e-300);
    dt = std::min(dt, 0.05 * (t + o.R));
    dt = std::min(dt, t_cap - t + 1e-9);

    // classic RK4 on (F, G)
    const double k1F = G, k1G = rhs(t, F);
    const double k2F = G + 0.5 * dt * k1G, k2G = rhs(t + 0.5 * dt, F + 0.5 * dt * k1F);
    const double k3F = G + 0.5 * dt * k2G, k3G = rhs(t + 0.5 * dt, F + 0.5 * dt * k2F);
    const double k4F = G + dt * k3G, k4G = rhs(t + dt, F + dt * k3F);
    F += dt / 6.0 * (k1F + 2.0 * k2F + 2.0 * k3F + k4F);
    G += dt / 6.0 * (k1G + 2.0 * k2G + 2.0 * k3G + k4G);
    t += dt;
    if (!std::isfinite(F) || !std::isfinite(G)) {
      shot.blew_up = true;
      break;
    }
    if (observer) observer(t, F, G);
    if (F > 1e12 && !std::isfinite(shot.t_threshold) * 0.0 + std::isinf(shot.t_threshold))
      shot.t_threshold = t;
    if (F > 1e24) {
      shot.t_deep = t;
      shot.blew_up = true;
      break;
    }
  }
  return shot;
}

}  // namespace detail

// Integrates the equality case and brackets its blowup time.  Out-of-scope
// parameter sets ((p-1)a <= q-2) still integrate; the result is only marked
// as outside the lemma's hypotheses.  Returns value = +infinity when no
// blowup occurs before t_cap.
inline BlowupTime integrate_sideris(
    const OdeProblem& o, double t_cap = 0.0,
    const std::function<void(double, double, double)>& observer = nullptr) {
  const auto [F0, G0] = resolve_initial_values(o);
  if (t_cap <= 0.0) t_cap = 1e7 * o.R;
  BlowupTime bt;
  bt.within_scope = sideris_in_scope(o);

  const detail::OdeShot coarse = detail::shoot_sideris(o, F0, G0, 0.02, t_cap, nullptr);
  const detail::OdeShot fine = detail::shoot_sideris(o, F0, G0, 0.01, t_cap, observer);
  if (!fine.blew_up || std::isinf(fine.t_deep)) {
    bt.value = std::numeric_limits<double>::infinity();
    return bt;
  }
  // Tail beyond F = 1e24: the remaining time scales like F^{-(p-1)/2}, so the
  // measured 1e12 -> 1e24 transit bounds it with ratio rho.
  const double rho = std::pow(1e12, -0.5 * (o.p - 1.0));
  const double transit = fine.t_deep - fine.t_threshold;
  const double tail = transit * rho / std::max(1.0 - rho, 1e-6);
  const double err = std::isfinite(coarse.t_deep)
                         ? std::abs(coarse.t_deep - fine.t_deep)
                         : 0.01 * fine.t_deep;
  bt.value = fine.t_deep + tail;
  bt.lower = fine.t_deep - 4.0 * err - 1e-12 * fine.t_deep;
  bt.upper = bt.value + 4.0 * err + tail + 1e-12 * fine.t_deep;
  bt.certified = bt.lower > 0.0 && bt.upper / bt.lower <= 1.02;
  return bt;
}

// Rescaling tau = t delta^{(p-1)/E}, H = delta^{(q-2)/E} F, E = (p-1)a-q+2:
// the transformed problem has delta = 1, the same p, a, q, k, and carries the
// entire delta-dependence in R -> R delta^{(p-1)/E} plus the initial values.
// Blowup times transform as T_H = T_F delta^{(p-1)/E}.
inline OdeProblem rescale_sideris(const OdeProblem& o) {
  const double E = sideris_gap(o);
  require(E > 0.0, errc::invalid_argument, "rescaling needs lemma scope (p-1)a > q-2");
  require(o.delta > 0.0, errc::invalid_argument, "rescaling needs a positive delta");
  const auto [F0, G0] = resolve_initial_values(o);
  OdeProblem out = o;
  out.R = o.R * std::pow(o.delta, (o.p - 1.0) / E);
  out.F0_init = std::pow(o.delta, (o.q - 2.0) / E) * F0;
  out.F0_prime_init = std::pow(o.delta, (o.q - 2.0 - (o.p - 1.0)) / E) * G0;
  out.delta = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Riccati bound

struct RiccatiProblem {
  int n = 1;
  double p = 2.0;
  double C9 = 1.0;       // coefficient of the self-improvement bound
  double M = 1.0;        // data integral: F(0) = M epsilon
  double R = 1.0;
  double epsilon = 1.0;
};

inline double riccati_theta(const RiccatiProblem& r) {
  return 0.5 * (r.n - 1.0) * (r.p - 1.0);
}

inline void validate_riccati(const RiccatiProblem& r) {
  require(r.p > 1.0 && r.n >= 1, errc::invalid_argument, "riccati needs p > 1, n >= 1");
  require(r.C9 > 0.0 && r.M > 0.0 && r.R > 0.0 && r.epsilon > 0.0, errc::invalid_argument,
          "riccati needs positive C9, M, R, epsilon");
  require(riccati_theta(r) <= 1.0 + 1e-12, errc::regime_mismatch,
          "riccati bound needs (n-1)(p-1) <= 2");
}

// Exact blowup time of v' = C9 v^p (t+R)^{-theta}, v(0) = M epsilon, in the
// subcritical regime theta < 1 and the borderline regime theta = 1.
inline BlowupTime riccati_closed_form(const RiccatiProblem& r) {
  validate_riccati(r);
  const double theta = riccati_theta(r);
  const double v0_pow = std::pow(r.M * r.epsilon, -(r.p - 1.0));
  BlowupTime bt;
  bt.method = BlowupMethod::ClosedForm;
  bt.certified = true;
  if (std::abs(theta - 1.0) <= 1e-12) {
    const double Cpp = r.C9 * (r.p - 1.0);
    bt.value = r.R * std::expm1(v0_pow / Cpp);
  } else {
    const double Cp = r.C9 * (r.p - 1.0) / (1.0 - theta);
    bt.value = std::pow((v0_pow + Cp * std::pow(r.R, 1.0 - theta)) / Cp, 1.0 / (1.0 - theta)) -
               r.R;
  }
  bt.lower = bt.upper = bt.value;
  return bt;
}

namespace detail {
inline double shoot_riccati(const RiccatiProblem& r, double safety, double t_cap,
                            double* t_threshold) {
  const double theta = riccati_theta(r);
  double t = 0.0, v = r.M * r.epsilon;
  *t_threshold = std::numeric_limits<double>::infinity();
  const auto rhs = [&](double tt, double vv) {
    return r.C9 * pow_abs(vv, r.p) * std::pow(tt + r.R, -theta);
  };
  while (t < t_cap) {
    const double rate = rhs(t, v) / std::max(v, 1e-300);
    double dt = safety / std::max(rate, 1e-300);
    dt = std::min(dt, 0.05 * (t + r.R));
    dt = std::min(dt, t_cap - t + 1e-9);
    const double k1 = rhs(t, v);
    const double k2 = rhs(t + 0.5 * dt, v + 0.5 * dt * k1);
    const double k3 = rhs(t + 0.5 * dt, v + 0.5 * dt * k2);
    const double k4 = rhs(t + dt, v + dt * k3);
    v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
    if (!std::isfinite(v) || v > 1e12) {
      *t_threshold = t;
      return t;
    }
  }
  return std::numeric_limits<double>::infinity();
}
}  // namespace detail

// Numerical blowup time of the Riccati bound; independent route checked
// against the closed form.  The analytic tail integral past the threshold is
// added so the reported value estimates the true blowup time, not merely the
// threshold crossing.
inline BlowupTime integrate_riccati(const RiccatiProblem& r, double t_cap = 0.0) {
  validate_riccati(r);
  const double theta = riccati_theta(r);
  if (t_cap <= 0.0) {
    // generous horizon: 10x the closed form when available
    t_cap = 10.0 * riccati_closed_form(r).value + 10.0 * r.R;
  }
  double thr_a = 0.0, thr_b = 0.0;
  const double hit_a = detail::shoot_riccati(r, 0.02, t_cap, &thr_a);
  const double hit_b = detail::shoot_riccati(r, 0.01, t_cap, &thr_b);
  BlowupTime bt;
  if (std::isinf(hit_b)) return bt;
  // remaining time after v = 1e12: integral of dv / (C9 v^p (t+R)^{-theta}),
  // solved with two fixed-point passes for the t+R factor
  const double v_hit = 1e12;
  double tail = std::pow(hit_b + r.R, theta) * std::pow(v_hit, 1.0 - r.p) /
                (r.C9 * (r.p - 1.0));
  for (int pass = 0; pass < 3; ++pass)
    tail = std::pow(hit_b + tail + r.R, theta) * std::pow(v_hit, 1.0 - r.p) /
           (r.C9 * (r.p - 1.0));
  const double err = std::isinf(hit_a) ? 0.01 * hit_b : std::abs(hit_a - hit_b);
  bt.value = hit_b + tail;
  bt.lower = hit_b - 4.0 * err - 1e-12 * hit_b;
  bt.upper = bt.value + 4.0 * err + tail + 1e-12 * hit_b;
  bt.certified = bt.lower > 0.0 && bt.upper / bt.lower <= 1.02;
  return bt;
}

// ---------------------------------------------------------------------------
// Lifespan exponents of the two theorems

struct LifespanExponent {
  bool exponential = false;  // borderline case: log T scales like eps^{-(p-1)}
  double alpha = 0.0;        // power case: T <= A eps^{-alpha}; exponential case: p-1
};

inline LifespanExponent theorem_exponent(const ProblemSpec& spec) {
  LifespanExponent out;
  if (spec.source == SourceKind::DisplacementPower) {
    const double gamma =
        2.0 + (spec.n + 1.0) * spec.p - (spec.n - 1.0) * spec.p * spec.p;
    require(gamma > 0.0, errc::critical_or_supercritical,
            "lifespan exponent undefined at or above the critical power");
    out.alpha = 2.0 * spec.p * (spec.p - 1.0) / gamma;
    return out;
  }
  const double border = (spec.n - 1.0) * (spec.p - 1.0);
  if (std::abs(border - 2.0) <= 1e-12) {
    out.exponential = true;
    out.alpha = spec.p - 1.0;
    return out;
  }
  require(border < 2.0, errc::critical_or_supercritical,
          "lifespan exponent undefined for (n-1)(p-1) > 2");
  out.alpha = (spec.p - 1.0) / (1.0 - 0.5 * border);
  return out;
}

}  // namespace exwave

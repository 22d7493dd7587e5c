#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "exwave/domain.hpp"
#include "exwave/elliptic.hpp"
#include "exwave/errors.hpp"
#include "exwave/numerics.hpp"

// Exterior-domain semilinear wave integrator:
//
//   u_tt = div(a grad u) + |u|^p   (displacement-power source)
//   u_tt = div(a grad u) + |u_t|^p (velocity-power source)
//
// radially reduced on [r0, r_outer], Dirichlet u(r0) = 0, data supported in
// [r0, R].  The explicit step is a velocity-Verlet drift for u with a Heun
// correction for the source's v-dependence; the linear part is the same
// conservative flux stencil the elliptic solves use, so the discrete
// integration-by-parts identities behind the functionals hold to roundoff.

namespace exwave {

struct InitialData {
  RadialProfile f;  // displacement profile, scaled by epsilon
  RadialProfile g;  // velocity profile, scaled by epsilon
  double epsilon = 1.0;
};

struct WaveState {
  RadialGrid grid;
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;
};

// Samples and validates initial data: nonnegative, supported in [r0, R] with
// the Dirichlet node clean, and not identically zero (for the velocity-power
// problem the velocity component itself must be nontrivial, since the whole
// blowup functional is seeded by integral of g).
inline WaveState init_state(const ProblemSpec& problem, const DomainSpec& domain,
                            const InitialData& data, const RadialGrid& grid) {
  require(data.epsilon > 0.0, errc::invalid_argument, "epsilon must be positive");
  WaveState s{grid, std::vector<double>(grid.count, 0.0), std::vector<double>(grid.count, 0.0),
              0.0};
  bool f_trivial = true, g_trivial = true;
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double r = grid.node(i);
    const double fv = data.f.eval(r), gv = data.g.eval(r);
    require(fv >= 0.0 && gv >= 0.0, errc::sign_violation,
            "initial data negative at r = " + std::to_string(r));
    if ((fv != 0.0 || gv != 0.0) && (r > domain.R || i == 0))
      fail(errc::support_violation, "initial data escapes (r0, R] at r = " + std::to_string(r));
    if (fv != 0.0) f_trivial = false;
    if (gv != 0.0) g_trivial = false;
    s.u[i] = data.epsilon * fv;
    s.v[i] = data.epsilon * gv;
  }
  require(!(f_trivial && g_trivial), errc::trivial_data, "initial data vanishes identically");
  if (problem.source == SourceKind::VelocityPower)
    require(!g_trivial, errc::trivial_data,
            "velocity-power runs need nontrivial initial velocity");
  return s;
}

// Precomputed stencil coefficients for div(a grad .) on the grid.
struct WaveOperator {
  RadialGrid grid;
  double C_ell = 1.0;
  std::vector<double> face;     // a(r_{i+1/2}) r_{i+1/2}^{n-1}, i = 0..count-2
  std::vector<double> inv_vol;  // 1 / r_i^{n-1}

  static WaveOperator make(const CoefficientField& field, const RadialGrid& grid) {
    WaveOperator op{grid, field.C_ell, {}, {}};
    op.face.resize(grid.count - 1);
    op.inv_vol.resize(grid.count);
    for (std::size_t i = 0; i + 1 < grid.count; ++i)
      op.face[i] = detail::face_coefficient(field, grid, i);
    for (std::size_t i = 0; i < grid.count; ++i)
      op.inv_vol[i] = grid.dim == 1 ? 1.0 : 1.0 / std::pow(grid.node(i), grid.dim - 1);
    return op;
  }

  // out = div(a grad u) at interior nodes; boundary entries are zeroed.
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t m = grid.count;
    const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    out[0] = 0.0;
    out[m - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i)
      out[i] = (face[i] * (u[i + 1] - u[i]) - face[i - 1] * (u[i] - u[i - 1])) * inv_h2 *
               inv_vol[i];
  }
};

namespace detail {
inline void check_finite(const std::vector<double>& x, double t) {
  for (double xi : x)
    if (!std::isfinite(xi) || std::abs(xi) > 1e250)
      fail(errc::overflow_blowup, "state left floating-point range at t = " + std::to_string(t));
}
}  // namespace detail

// Scratch buffers so repeated stepping does not allocate.
struct StepWorkspace {
  std::vector<double> acc0, lin1, u_next, v_pred;
  bool has_acc0 = false;  // acc0 caches div(a grad u) + N at the current state
};

// One explicit step of size dt.  Second order in both source kinds: exact
// velocity-Verlet drift for u, Heun (predict-correct) for the v-dependence of
// the source.  Throws cfl_violation past the stability limit and
// overflow_blowup when the state leaves floating-point range (the run driver
// treats the latter as a blowup, not a failure).
inline void step(WaveState& s, const WaveOperator& op, const ProblemSpec& problem, double dt,
                 StepWorkspace& ws, bool source_enabled = true) {
  require(dt > 0.0, errc::invalid_argument, "step size must be positive");
  require(dt <= s.grid.spacing / std::sqrt(op.C_ell) * (1.0 + 1e-12), errc::cfl_violation,
          "dt exceeds spacing / sqrt(C_ell)");
  const std::size_t m = s.grid.count;
  const bool disp = problem.source == SourceKind::DisplacementPower;
  const double p = problem.p;
  ws.acc0.resize(m);
  ws.lin1.resize(m);
  ws.u_next.resize(m);
  ws.v_pred.resize(m);

  if (!ws.has_acc0) {
    op.apply(s.u, ws.acc0);
    if (source_enabled)
      for (std::size_t i = 1; i + 1 < m; ++i)
        ws.acc0[i] += pow_abs(disp ? s.u[i] : s.v[i], p);
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    ws.u_next[i] = s.u[i] + dt * s.v[i] + 0.5 * dt * dt * ws.acc0[i];
    ws.v_pred[i] = s.v[i] + dt * ws.acc0[i];
  }
  ws.u_next[0] = ws.u_next[m - 1] = 0.0;
  ws.v_pred[0] = ws.v_pred[m - 1] = 0.0;

  op.apply(ws.u_next, ws.lin1);
  for (std::size_t i = 1; i + 1 < m; ++i) {
    double acc1 = ws.lin1[i];
    if (source_enabled) acc1 += pow_abs(disp ? ws.u_next[i] : ws.v_pred[i], p);
    s.v[i] += 0.5 * dt * (ws.acc0[i] + acc1);
  }
  s.u.swap(ws.u_next);
  s.u[0] = s.u[m - 1] = 0.0;
  s.v[0] = s.v[m - 1] = 0.0;
  s.t += dt;

  detail::check_finite(s.u, s.t);
  detail::check_finite(s.v, s.t);

  // next step's force = the linear part just computed + source at the new state
  for (std::size_t i = 1; i + 1 < m; ++i) {
    ws.acc0[i] = ws.lin1[i];
    if (source_enabled) ws.acc0[i] += pow_abs(disp ? s.u[i] : s.v[i], p);
  }
  ws.acc0[0] = ws.acc0[m - 1] = 0.0;
  ws.has_acc0 = true;
}

// Largest node radius carrying a dynamically meaningful value.  Exact zeros
// cannot be expected of an explicit scheme (the stencil widens support one
// node per step), so "meaningful" is relative to the current sup norm.
inline double support_radius(const WaveState& s, double rel_tol = 1e-12) {
  double sup = 0.0;
  for (std::size_t i = 0; i < s.grid.count; ++i)
    sup = std::max({sup, std::abs(s.u[i]), std::abs(s.v[i])});
  if (sup == 0.0) return s.grid.r0;
  const double tol = rel_tol * sup;
  for (std::size_t i = s.grid.count; i-- > 0;)
    if (std::abs(s.u[i]) > tol || std::abs(s.v[i]) > tol) return s.grid.node(i);
  return s.grid.r0;
}

// ---------------------------------------------------------------------------
// Run driver: integrate, sample the blowup functionals, measure the lifespan.

struct SimConfig {
  ProblemSpec problem;
  DomainSpec domain = DomainSpec{};
  CoefficientField field = CoefficientField::identity();
  InitialData data;
  double spacing = 1e-2;
  double cfl = 0.5;           // dt = cfl * spacing / sqrt(C_ell)
  double T_max = 10.0;
  double U_max = 1e8;         // blowup threshold on the source component
  double lifespan_tol = 0.02; // dt-refinement agreement for T_num
  double sample_dt = 0.01;
  bool source_enabled = true;
};

struct SimTrace {
  double dt = 0.0;         // step size of the accepted run
  double sample_dt = 0.0;
  std::vector<double> times;
  std::vector<double> F0;     // integral of u phi0 (nan when n < 3)
  std::vector<double> F1;     // integral of u psi1
  std::vector<double> G0;     // integral psi1 u_t - F(t), the sign-definite functional
  std::vector<double> Fcum;   // half the cumulative source integral + data seed
  std::vector<double> sup_u;
  std::vector<double> sup_v;
  std::vector<double> V1;     // integral of psi1 u_t
  std::vector<double> Fp;     // half integral of psi1 |u_t|^p  (= d/dt Fcum)
  std::vector<double> src0;   // integral of |source| phi0 (nan when n < 3)
  bool blowup = false;
  double t_blowup = std::numeric_limits<double>::quiet_NaN();
};

struct LifespanResult {
  double T_num = 0.0;
  double threshold = 0.0;
  double dt_used = 0.0;
  bool converged = false;         // dt vs dt/2 agreement within lifespan_tol
  bool threshold_stable = false;  // T at U_max vs U_max/100 agree within 5%
};

struct RunOutput {
  RadialGrid grid;
  std::optional<HarmonicWeight> phi0;
  EigenWeight phi1;
  SimTrace trace;
  std::optional<LifespanResult> lifespan;
  // data quadratures (epsilon folded in): seeds of the functional bounds
  double int_f_phi1 = 0.0, int_g_phi1 = 0.0, int_f_phi0 = 0.0, int_g_phi0 = 0.0;
};

namespace detail {

struct SingleRun {
  SimTrace trace;
  bool crossed = false;
  double t_hi = 0.0, t_lo = 0.0;  // crossing times of U_max and U_max/100
};

inline SingleRun integrate_once(const SimConfig& cfg, const RadialGrid& grid,
                                const WaveOperator& op,
                                const std::optional<HarmonicWeight>& phi0,
                                const EigenWeight& phi1, double dt) {
  const std::size_t m = grid.count;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool disp = cfg.problem.source == SourceKind::DisplacementPower;

  // trapezoid weights with the volume element folded in
  std::vector<double> qw(m);
  for (std::size_t i = 0; i < m; ++i)
    qw[i] = ((i == 0 || i + 1 == m) ? 0.5 : 1.0) * grid.spacing *
            grid.volume_weight(grid.node(i));
  std::vector<double> qw_phi1(m), qw_phi0(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) qw_phi1[i] = qw[i] * phi1.values[i];
  if (phi0)
    for (std::size_t i = 0; i < m; ++i) qw_phi0[i] = qw[i] * phi0->values[i];

  WaveState s = init_state(cfg.problem, cfg.domain, cfg.data, grid);
  const double half_m_eps = 0.5 * [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += qw_phi1[i] * s.v[i];
    return sum;
  }();

  SingleRun out;
  SimTrace& tr = out.trace;
  tr.dt = dt;
  tr.sample_dt = cfg.sample_dt;
  StepWorkspace ws;
  double cum = 0.0;  // integral over [0,t] of integral psi1 |u_t|^p
  double next_sample = 0.0;
  const double low_threshold = cfg.U_max / 100.0;
  bool low_crossed = false;
  const double sqrtC = std::sqrt(op.C_ell);

  while (true) {
    double sup_u = 0.0, sup_v = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sup_u = std::max(sup_u, std::abs(s.u[i]));
      sup_v = std::max(sup_v, std::abs(s.v[i]));
    }
    double sum_fp = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum_fp += qw_phi1[i] * pow_abs(s.v[i], cfg.problem.p);
    const double decay = std::exp(-s.t);
    const double fp = 0.5 * decay * sum_fp;

    if (s.t + 1e-9 * cfg.sample_dt >= next_sample) {
      double sum_f1 = 0.0, sum_v1 = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sum_f1 += qw_phi1[i] * s.u[i];
        sum_v1 += qw_phi1[i] * s.v[i];
      }
      tr.times.push_back(s.t);
      tr.F1.push_back(decay * sum_f1);
      tr.V1.push_back(decay * sum_v1);
      tr.Fp.push_back(fp);
      tr.Fcum.push_back(0.5 * cum + half_m_eps);
      tr.G0.push_back(decay * sum_v1 - (0.5 * cum + half_m_eps));
      tr.sup_u.push_back(sup_u);
      tr.sup_v.push_back(sup_v);
      if (phi0) {
        double sum_f0 = 0.0, sum_src = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          sum_f0 += qw_phi0[i] * s.u[i];
          sum_src += qw_phi0[i] * pow_abs(disp ? s.u[i] : s.v[i], cfg.problem.p);
        }
        tr.F0.push_back(sum_f0);
        tr.src0.push_back(sum_src);
      } else {
        tr.F0.push_back(nan);
        tr.src0.push_back(nan);
      }
      const double allowed =
          grid.r0 + cfg.domain.R + sqrtC * s.t + 2.0 * grid.spacing + 1e-9;
      require(support_radius(s) <= allowed, errc::support_leak,
              "support escaped the light cone at t = " + std::to_string(s.t));
      next_sample += cfg.sample_dt;
    }

    const double trigger = disp ? sup_u : sup_v;
    if (!low_crossed && trigger > low_threshold) {
      out.t_lo = s.t;
      low_crossed = true;
    }
    if (trigger > cfg.U_max) {
      out.crossed = true;
      out.t_hi = s.t;
      if (!low_crossed) out.t_lo = s.t;
      tr.blowup = true;
      tr.t_blowup = s.t;
      break;
    }
    if (s.t >= cfg.T_max) break;

    cum += dt * 2.0 * fp;  // rectangle rule on the step grid
    try {
      step(s, op, cfg.problem, dt, ws, cfg.source_enabled);
    } catch (const error& e) {
      if (e.code() != errc::overflow_blowup) throw;
      out.crossed = true;
      out.t_hi = s.t + dt;
      if (!low_crossed) out.t_lo = out.t_hi;
      tr.blowup = true;
      tr.t_blowup = out.t_hi;
      break;
    }
  }
  return out;
}

}  // namespace detail

// Full lifespan run: integrate at dt, and when a blowup is detected confirm it
// at dt/2.  The reported trace and T_num come from the finer run.
inline RunOutput run(const SimConfig& cfg) {
  const EllipticityReport ell = validate_coefficient(
      cfg.field, build_grid(cfg.domain, cfg.spacing, cfg.T_max, cfg.field.C_ell,
                            cfg.problem.n),
      cfg.domain.R);
  require(ell.pass, errc::config_error, "coefficient violates its ellipticity contract");

  RunOutput out{build_grid(cfg.domain, cfg.spacing, cfg.T_max, cfg.field.C_ell,
                           cfg.problem.n),
                std::nullopt,
                EigenWeight{},
                SimTrace{},
                std::nullopt};
  if (cfg.problem.n >= 3) out.phi0 = solve_phi0(cfg.field, out.grid);
  out.phi1 = solve_phi1(cfg.field, out.grid);
  const WaveOperator op = WaveOperator::make(cfg.field, out.grid);

  {
    WaveState s0 = init_state(cfg.problem, cfg.domain, cfg.data, out.grid);
    for (std::size_t i = 0; i < out.grid.count; ++i) {
      const double qw = ((i == 0 || i + 1 == out.grid.count) ? 0.5 : 1.0) *
                        out.grid.spacing * out.grid.volume_weight(out.grid.node(i));
      out.int_f_phi1 += qw * out.phi1.values[i] * s0.u[i];
      out.int_g_phi1 += qw * out.phi1.values[i] * s0.v[i];
      if (out.phi0) {
        out.int_f_phi0 += qw * out.phi0->values[i] * s0.u[i];
        out.int_g_phi0 += qw * out.phi0->values[i] * s0.v[i];
      }
    }
  }

  const double dt1 = cfg.cfl * cfg.spacing / std::sqrt(cfg.field.C_ell);
  detail::SingleRun coarse =
      detail::integrate_once(cfg, out.grid, op, out.phi0, out.phi1, dt1);
  if (!coarse.crossed) {
    out.trace = std::move(coarse.trace);
    return out;
  }
  detail::SingleRun fine =
      detail::integrate_once(cfg, out.grid, op, out.phi0, out.phi1, 0.5 * dt1);
  if (!fine.crossed) {
    // refinement pushed the crossing past T_max: report the coarse time, unconverged
    out.trace = std::move(coarse.trace);
    out.lifespan = LifespanResult{coarse.t_hi, cfg.U_max, dt1, false, false};
    return out;
  }
  LifespanResult life;
  life.T_num = fine.t_hi;
  life.threshold = cfg.U_max;
  life.dt_used = 0.5 * dt1;
  life.converged = std::abs(coarse.t_hi - fine.t_hi) <= cfg.lifespan_tol * fine.t_hi;
  life.threshold_stable = fine.t_hi - fine.t_lo <= 0.05 * fine.t_hi;
  out.trace = std::move(fine.trace);
  out.lifespan = life;
  return out;
}

inline double discrete_energy(const WaveState& s, const WaveOperator& op) {
  const RadialGrid& g = s.grid;
  double kinetic = integrate_nodes(g, g.count - 1,
                                   [&](std::size_t i) { return s.v[i] * s.v[i]; });
  double potential = 0.0;
  for (std::size_t i = 0; i + 1 < g.count; ++i) {
    const double du = (s.u[i + 1] - s.u[i]) / g.spacing;
    const double face_vol = g.dim == 1 ? 1.0 : unit_sphere_area(g.dim);
    potential += op.face[i] * face_vol * du * du * g.spacing;
  }
  return 0.5 * (kinetic + potential);
}

}  // namespace exwave

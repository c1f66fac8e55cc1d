#include "sphereflow/flow.hpp"

#include <cmath>
#include <sstream>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

constexpr double kNormBlowup = 1.0 + 1e-7;

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double penalty_mass(const SphereField& u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double w = sq_norm(u.at(k)) - 1.0;
    s += w * w;
  }
  return s * u.grid().cell_volume();
}

// dw/dt for the penalty ODE
double penalty_rate(double w, double strength, bool original_form) {
  const double rate = 2.0 * strength * w * (1.0 - w);
  return original_form ? rate * chi_dot((w - 1.0) * (w - 1.0)) : rate;
}

double rk4_penalty(double w, double strength, double dt, bool original_form) {
  // small substeps: the RK4 error is then far below any diagnostic tolerance
  const int n = std::max(1, static_cast<int>(std::ceil(2.0 * strength * dt / 0.05)));
  const double h = dt / n;
  for (int i = 0; i < n; ++i) {
    const double k1 = penalty_rate(w, strength, original_form);
    const double k2 = penalty_rate(w + 0.5 * h * k1, strength, original_form);
    const double k3 = penalty_rate(w + 0.5 * h * k2, strength, original_form);
    const double k4 = penalty_rate(w + h * k3, strength, original_form);
    w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return w;
}

void check_norms(const SphereField& u, std::size_t step) {
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double n = u.norm(k);
    if (!(n <= kNormBlowup)) {
      std::ostringstream msg;
      msg << "|u| = " << n << " at node " << k << " after step " << step;
      fail(ErrorCode::NormBlowup, msg.str());
    }
  }
}

StepRecord make_record(const SphereField& u, std::size_t step, double t, double strength, double exponent,
                       double lambda) {
  StepRecord r;
  r.step = step;
  r.t = t;
  r.exponent = exponent;
  r.dirichlet_energy = dirichlet_energy(u);
  const double mass = strength > 0.0 ? penalty_mass(u) : 0.0;
  r.gl_energy = 0.5 * r.dirichlet_energy + 0.25 * strength * mass;
  r.max_norm = u.max_norm();
  r.exponent_term = strength > 0.0 ? kappa_dot(t) * std::log(lambda) * strength * mass / 4.0 : 0.0;
  r.penalty_increment = strength * mass;  // times the step length, filled in by the caller
  return r;
}

double speed_sq(const SphereField& a, const SphereField& b, double dt) {
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += (vb[i] - va[i]) * (vb[i] - va[i]);
  return s / (dt * dt) * a.grid().cell_volume();
}

}  // namespace

double kappa(double t) { return std::atan(t) / M_PI; }
double kappa_dot(double t) { return 1.0 / (M_PI * (1.0 + t * t)); }

double chi(double s) {
  if (s < 2.0) return s;
  if (s >= 4.0) return 3.0;
  // Hermite basis on [2,4]: p(2)=2, p'(2)=1, p(4)=3, p'(4)=0
  const double u = (s - 2.0) / 2.0;
  const double h00 = 2 * u * u * u - 3 * u * u + 1;
  const double h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u;
  return 2.0 * h00 + 2.0 * 1.0 * h10 + 3.0 * h01;
}

double chi_dot(double s) {
  if (s < 2.0) return 1.0;
  if (s >= 4.0) return 0.0;
  const double u = (s - 2.0) / 2.0;
  const double d00 = 6 * u * u - 6 * u;
  const double d10 = 3 * u * u - 4 * u + 1;
  const double d01 = -6 * u * u + 6 * u;
  return (2.0 * d00 + 2.0 * d10 + 3.0 * d01) / 2.0;
}

std::string to_string(FlowMode mode) {
  switch (mode) {
    case FlowMode::GlhfSimplified: return "glhf-simplified";
    case FlowMode::GlhfOriginal: return "glhf-original";
    case FlowMode::Projected: return "projected";
  }
  return "unknown";
}

FlowMode flow_mode_from_string(const std::string& s) {
  if (s == "glhf-simplified" || s == "glhf") return FlowMode::GlhfSimplified;
  if (s == "glhf-original") return FlowMode::GlhfOriginal;
  if (s == "projected") return FlowMode::Projected;
  fail(ErrorCode::InvalidConfig, "unknown mode \"" + s + "\" (glhf-simplified | glhf-original | projected)");
}

double PenaltySchedule::strength(double t) const { return std::pow(lambda, exponent(t)); }

double cfl_limit(const Grid& grid) { return grid.spacing() * grid.spacing() / (2.0 * grid.dim()); }

double resolve_dt(const Grid& grid, const SolverConfig& cfg) {
  require(cfg.T > 0.0, ErrorCode::InvalidConfig, "final time T must be positive");
  require(cfg.output_stride >= 1, ErrorCode::InvalidConfig, "output_stride must be >= 1");
  require(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0, ErrorCode::InvalidConfig, "CFL safety must lie in (0, 1]");
  const double limit = cfl_limit(grid);
  if (cfg.dt == 0.0) return cfg.cfl_safety * limit;
  require(cfg.dt > 0.0, ErrorCode::InvalidConfig, "dt must be positive");
  if (cfg.dt > limit) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "dt = " << cfg.dt << " exceeds the diffusion bound h^2/(2d) = " << limit;
    fail(ErrorCode::CflViolated, msg.str());
  }
  return cfg.dt;
}

void diffusion_substep(SphereField& u, double dt, std::vector<double>& scratch) {
  const Grid& g = u.grid();
  const int d = g.dim();
  const int comps = u.components();
  const double r = dt / (g.spacing() * g.spacing());
  const auto interior = g.interior_nodes();
  scratch.resize(interior.size() * comps);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const std::size_t k = interior[i];
    const auto uk = u.at(k);
    for (int c = 0; c < comps; ++c) {
      double lap = 0.0;
      for (int a = 0; a < d; ++a) {
        lap += u.at(static_cast<std::size_t>(g.neighbor(k, a, -1)))[c] - uk[c];
        lap += u.at(static_cast<std::size_t>(g.neighbor(k, a, +1)))[c] - uk[c];
      }
      scratch[i * comps + c] = uk[c] + r * lap;
    }
  }
  for (std::size_t i = 0; i < interior.size(); ++i) {
    auto uk = u.at(interior[i]);
    for (int c = 0; c < comps; ++c) uk[c] = scratch[i * comps + c];
  }
}

void penalty_substep(SphereField& u, double strength, double dt, bool original_form,
                     PenaltyIntegration integration) {
  const Grid& g = u.grid();
  const double decay = std::exp(-2.0 * strength * dt);
  for (std::size_t k : g.interior_nodes()) {
    auto uk = u.at(k);
    const double w = sq_norm(uk);
    if (integration == PenaltyIntegration::Explicit) {
      double factor = strength * (w - 1.0);
      if (original_form) factor *= chi_dot((w - 1.0) * (w - 1.0));
      for (double& x : uk) x -= dt * factor * x;
      continue;
    }
    if (w == 0.0 || w == 1.0) continue;
    double w_new;
    if (original_form) {
      w_new = rk4_penalty(w, strength, dt, true);
    } else {
      // logistic closed form 1/(1 + ((1-w)/w) e^{-2 L dt})
      w_new = w / (w + (1.0 - w) * decay);
    }
    const double scale = std::sqrt(w_new / w);
    for (double& x : uk) x *= scale;
  }
}

void projection_substep(SphereField& u) {
  const Grid& g = u.grid();
  for (std::size_t k : g.interior_nodes()) {
    auto uk = u.at(k);
    const double n = std::sqrt(sq_norm(uk));
    if (n < 1e-14) {
      fail(ErrorCode::NearZeroVector, "projected flow hit |u| = 0 at node " + std::to_string(k));
    }
    for (double& x : uk) x /= n;
  }
}

SphereField glhf_step(const SphereField& u, double t, double dt, const PenaltySchedule& sched,
                      PenaltyIntegration integration) {
  require(dt <= cfl_limit(u.grid()), ErrorCode::CflViolated, "dt exceeds h^2/(2d)");
  SphereField out = u;
  std::vector<double> scratch;
  diffusion_substep(out, dt, scratch);
  penalty_substep(out, sched.strength(t), dt, sched.original_form, integration);
  check_norms(out, 0);
  return out;
}

SphereField projected_flow_step(const SphereField& u, double dt) {
  require(dt <= cfl_limit(u.grid()), ErrorCode::CflViolated, "dt exceeds h^2/(2d)");
  SphereField out = u;
  std::vector<double> scratch;
  diffusion_substep(out, dt, scratch);
  projection_substep(out);
  return out;
}

double Trajectory::penalty_strength(double t) const {
  return mode == FlowMode::Projected ? 0.0 : schedule.strength(t);
}

namespace {

Trajectory run(const SphereField& u0, const SolverConfig& cfg, const PenaltySchedule& sched, FlowMode mode,
              const StepObserver& observer) {
  const Grid& g = u0.grid();
  const double dt = resolve_dt(g, cfg);
  require(u0.max_norm() <= 1.0 + 1e-12, ErrorCode::InvalidArgument, "initial field must satisfy |u0| <= 1");
  if (mode != FlowMode::Projected) {
    require(sched.lambda > 1.0, ErrorCode::InvalidConfig, "lambda must exceed 1");
  }

  Trajectory traj;
  traj.mode = mode;
  traj.schedule = sched;
  traj.schedule.original_form = mode == FlowMode::GlhfOriginal;
  traj.dt = dt;
  traj.T = cfg.T;

  const auto steps = static_cast<std::size_t>(std::ceil(cfg.T / dt - 1e-9));
  auto time_of = [&](std::size_t k) { return k == steps ? cfg.T : static_cast<double>(k) * dt; };

  SphereField u = u0;
  SphereField previous = u0;
  std::vector<double> scratch;
  traj.snapshots.push_back({0, 0.0, u});
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = time_of(k);
    const double strength = traj.penalty_strength(t);
    const double exponent = mode == FlowMode::Projected ? 0.0 : traj.schedule.exponent(t);
    StepRecord rec = make_record(u, k, t, strength, exponent, sched.lambda);
    if (observer) observer(k, t, u);
    if (k == steps) {
      rec.penalty_increment = 0.0;
      traj.records.push_back(rec);
      break;
    }
    const double step = time_of(k + 1) - t;
    rec.penalty_increment *= step;

    previous = u;
    diffusion_substep(u, step, scratch);
    if (mode == FlowMode::Projected) {
      projection_substep(u);
    } else {
      penalty_substep(u, strength, step, traj.schedule.original_form, cfg.integration);
    }
    check_norms(u, k + 1);
    rec.speed_sq = speed_sq(previous, u, step);
    traj.records.push_back(rec);

    if ((k + 1) % cfg.output_stride == 0 || k + 1 == steps) {
      traj.snapshots.push_back({k + 1, time_of(k + 1), u});
    }
  }
  return traj;
}

}  // namespace

Trajectory run_flow(const SphereField& u0, const SolverConfig& cfg, const PenaltySchedule& sched,
                    const StepObserver& observer) {
  return run(u0, cfg, sched, cfg.mode, observer);
}

Trajectory run_glhf(const SphereField& u0, SolverConfig cfg, const PenaltySchedule& sched,
                    const StepObserver& observer) {
  if (cfg.mode == FlowMode::Projected) cfg.mode = FlowMode::GlhfSimplified;
  if (sched.original_form) cfg.mode = FlowMode::GlhfOriginal;
  return run(u0, cfg, sched, cfg.mode, observer);
}

Trajectory run_projected(const SphereField& u0, SolverConfig cfg, const StepObserver& observer) {
  cfg.mode = FlowMode::Projected;
  return run(u0, cfg, PenaltySchedule{}, FlowMode::Projected, observer);
}

Trajectory make_static_trajectory(const SphereField& field, const std::vector<double>& times) {
  require(!times.empty(), ErrorCode::InvalidArgument, "static trajectory needs at least one time");
  Trajectory traj;
  traj.mode = FlowMode::Projected;
  traj.T = times.back();
  traj.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  const double e = dirichlet_energy(field);
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(i == 0 || times[i] > times[i - 1], ErrorCode::InvalidArgument, "snapshot times must increase strictly");
    traj.snapshots.push_back({i, times[i], field});
    StepRecord r;
    r.step = i;
    r.t = times[i];
    r.exponent = 0.0;
    r.dirichlet_energy = e;
    r.gl_energy = 0.5 * e;
    r.max_norm = field.max_norm();
    traj.records.push_back(r);
  }
  return traj;
}

double penalty_integral(const Trajectory& traj) {
  double s = 0.0;
  for (const StepRecord& r : traj.records) s += r.penalty_increment;
  return s;
}

double l2_spacetime_distance(const Trajectory& a, const Trajectory& b) {
  require(a.snapshots.size() == b.snapshots.size(), ErrorCode::GridMismatch,
          "trajectories have different snapshot counts");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < a.snapshots.size(); ++k) {
    require(a.snapshots[k].t == b.snapshots[k].t && a.snapshots[k + 1].t == b.snapshots[k + 1].t,
            ErrorCode::GridMismatch, "trajectories have different snapshot times");
    const double d = l2_distance(a.snapshots[k].field, b.snapshots[k].field);
    s += (a.snapshots[k + 1].t - a.snapshots[k].t) * d * d;
  }
  return std::sqrt(s);
}

std::vector<double> energy_density(const SphereField& u, double strength) {
  std::vector<double> e = gradient_density(u);
  for (std::size_t k = 0; k < e.size(); ++k) {
    e[k] *= 0.5;
    if (strength > 0.0) {
      const double w = sq_norm(u.at(k)) - 1.0;
      e[k] += 0.25 * strength * w * w;
    }
  }
  return e;
}

double gl_energy(const SphereField& u, double strength) {
  double s = 0.0;
  for (double v : energy_density(u, strength)) s += v;
  return s * u.grid().cell_volume();
}

}  // namespace sphereflow

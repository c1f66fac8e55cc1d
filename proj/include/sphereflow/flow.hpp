#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sphereflow/field.hpp"

namespace sphereflow {

/// arctan(t)/pi
double kappa(double t);
double kappa_dot(double t);

/// s below 2, 3 from 4 on, monotone cubic Hermite in between.
double chi(double s);
double chi_dot(double s);

enum class FlowMode { GlhfSimplified, GlhfOriginal, Projected };
enum class PenaltyIntegration { ExactLogistic, Explicit };

std::string to_string(FlowMode mode);
FlowMode flow_mode_from_string(const std::string& s);

struct PenaltySchedule {
  double lambda = 1000.0;
  bool original_form = false;

  double exponent(double t) const { return 1.0 - kappa(t); }
  /// lambda^(1 - kappa(t))
  double strength(double t) const;
};

struct SolverConfig {
  double dt = 0.0;  // 0 selects cfl_safety * h^2 / (2d)
  double T = 1.0;
  double cfl_safety = 0.9;
  PenaltyIntegration integration = PenaltyIntegration::ExactLogistic;
  std::size_t output_stride = 1;
  FlowMode mode = FlowMode::GlhfSimplified;
};

/// h^2 / (2d): largest step for which explicit diffusion is a convex combination.
double cfl_limit(const Grid& grid);
/// Validates cfg against the grid and returns the step to use.
double resolve_dt(const Grid& grid, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// Substeps. All leave boundary nodes untouched.

/// u <- u + dt * Lap_h u at interior nodes.
void diffusion_substep(SphereField& u, double dt, std::vector<double>& scratch);
/// Integrates dw/dt = 2 L w (1 - w), w = |u|^2, along each node's direction
/// (times chi'((w-1)^2) in original form).
void penalty_substep(SphereField& u, double strength, double dt, bool original_form,
                     PenaltyIntegration integration);
/// Exact normalization of interior nodes.
void projection_substep(SphereField& u);

SphereField glhf_step(const SphereField& u, double t, double dt, const PenaltySchedule& sched,
                      PenaltyIntegration integration = PenaltyIntegration::ExactLogistic);
SphereField projected_flow_step(const SphereField& u, double dt);

// ---------------------------------------------------------------------------

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  double exponent = 1.0;          // 1 - kappa(t); 0 in projected mode
  double gl_energy = 0.0;
  double dirichlet_energy = 0.0;  // integral of |grad u|^2
  double penalty_increment = 0.0; // (t_{k+1} - t_k) * integral of L (|u|^2 - 1)^2
  double max_norm = 0.0;
  double speed_sq = 0.0;          // integral of |(u_{k+1} - u_k)/dt|^2
  double exponent_term = 0.0;     // kappa' log(lambda) L/4 integral of (|u|^2 - 1)^2
};

struct Snapshot {
  std::size_t step = 0;
  double t = 0.0;
  SphereField field;
};

struct Trajectory {
  FlowMode mode = FlowMode::GlhfSimplified;
  PenaltySchedule schedule;
  double dt = 0.0;
  double T = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<StepRecord> records;

  const Grid& grid() const { return snapshots.front().field.grid(); }
  int target_dim() const { return snapshots.front().field.target_dim(); }
  double start_time() const { return snapshots.front().t; }
  double end_time() const { return snapshots.back().t; }
  /// Penalty strength used in e_lambda at time t (0 for projected runs).
  double penalty_strength(double t) const;
};

/// Called with the state at every time level, including t = 0 and T.
using StepObserver = std::function<void(std::size_t step, double t, const SphereField& u)>;

/// Runs the configured mode from t = 0 to cfg.T. Snapshots at t = 0, every
/// output_stride steps and at T.
Trajectory run_flow(const SphereField& u0, const SolverConfig& cfg, const PenaltySchedule& sched,
                    const StepObserver& observer = {});
Trajectory run_glhf(const SphereField& u0, SolverConfig cfg, const PenaltySchedule& sched,
                    const StepObserver& observer = {});
Trajectory run_projected(const SphereField& u0, SolverConfig cfg, const StepObserver& observer = {});

/// A field frozen in time, sampled at the given strictly increasing times
/// (projected mode, so e_lambda reduces to |grad u|^2/2).
Trajectory make_static_trajectory(const SphereField& field, const std::vector<double>& times);

/// Integral over Q(T) of L (|u|^2 - 1)^2, rectangle rule in t.
double penalty_integral(const Trajectory& traj);

/// L2(Q) distance: snapshot k stands for [t_k, t_{k+1}). Both trajectories
/// must share snapshot times.
double l2_spacetime_distance(const Trajectory& a, const Trajectory& b);

/// Node density |grad u|^2/2 + L (|u|^2 - 1)^2/4.
std::vector<double> energy_density(const SphereField& u, double strength);
double gl_energy(const SphereField& u, double strength);

}  // namespace sphereflow

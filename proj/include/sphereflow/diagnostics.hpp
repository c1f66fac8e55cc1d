#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphereflow/field.hpp"
#include "sphereflow/flow.hpp"

namespace sphereflow {

/// (4 pi (t0 - t))^{-d/2} exp(-|x - x0|^2 / (4 (t0 - t))), d = x.size().
double backward_heat_kernel(double t0, std::span<const double> x0, double t, std::span<const double> x);

/// 1 + |x - x0|^2 / d0^2
double weight_d(std::span<const double> x0, std::span<const double> x, double d0);

struct CylinderSpec {
  double t0 = 0.0;
  Point x0;
  double R = 0.0;

  nlohmann::json to_json() const;
};

struct EnergyReport {
  double gl_energy = 0.0;
  double dirichlet_energy = 0.0;  // integral of |grad u|^2
  double penalty_part = 0.0;      // integral of L (|u|^2 - 1)^2 / 4
  std::vector<double> density;    // e_lambda per node
};

EnergyReport energy_report(const SphereField& u, double strength);

enum class DensityKind { GinzburgLandau, Dirichlet };

/// Piece of a trajectory's time axis: snapshot `snapshot` stands for
/// [t_k, t_{k+1}), clipped to the requested window.
struct TimeSegment {
  std::size_t snapshot = 0;
  double a = 0.0;
  double b = 0.0;
  double mid() const { return 0.5 * (a + b); }
  double length() const { return b - a; }
};

std::vector<TimeSegment> clip_time(const Trajectory& traj, double lo, double hi);

/// Per-snapshot node densities computed on demand and kept: e_lambda (with
/// the snapshot's penalty strength) or |grad u|^2. Safe to share across
/// threads.
class DensityCache {
 public:
  DensityCache(const Trajectory& traj, DensityKind kind, double scale = 1.0);

  const std::vector<double>& at(std::size_t snapshot) const;
  const Trajectory& trajectory() const { return traj_; }
  DensityKind kind() const { return kind_; }

 private:
  const Trajectory& traj_;
  DensityKind kind_;
  double scale_;
  mutable std::vector<std::vector<double>> cache_;
  std::unique_ptr<std::once_flag[]> filled_;
};

/// Integral of the cached density over P_R(z0) ∩ Q(T): time window
/// (t0 - R^2, t0 + R^2) clipped to the trajectory, space |x - x0| < R.
/// EmptyIntersection if the clipped cylinder has zero measure.
double cylinder_integral(const DensityCache& cache, const CylinderSpec& cyl);

/// Integral over t in (t0 - 4R^2, t0 - R^2) of the cached density against
/// G_{z0} over all stored nodes. Kernel evaluated at each clipped segment's
/// midpoint.
double weighted_annulus_energy(const DensityCache& cache, double t0, std::span<const double> x0, double R,
                               bool require_resolved = true);
double weighted_annulus_energy(const Trajectory& traj, double t0, std::span<const double> x0, double R,
                               bool require_resolved = true);

enum class MonotonicityForm {
  Main1,  // C (R2^mu - R1^mu) A(R2) + C (R2 - R1); drift (x-x0)/(2 sqrt(t0-t)), factor 2
  Mon,    // C exp(R2^mu - R1^mu) A(R2) + C (R2 - R1); drift (x-x0)/(2 (t-t0)), factor 1
};

std::string to_string(MonotonicityForm form);

struct FitGrid {
  std::vector<double> mu = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> C = logspace(-3.0, 6.0, 37);

  static std::vector<double> logspace(double lo, double hi, std::size_t n);
};

struct MonotonicityReport {
  double t0 = 0.0;
  Point x0;
  double R1 = 0.0, R2 = 0.0;
  MonotonicityForm form = MonotonicityForm::Main1;
  double annulus_R1 = 0.0;   // weighted_annulus_energy at R1
  double speed_term = 0.0;   // including its leading factor
  double annulus_R2 = 0.0;
  double lhs = 0.0;
  double mu = 0.0;
  double C = 0.0;
  double rhs = 0.0;
  double defect = 0.0;
  bool kernel_resolved = true;

  nlohmann::json to_json() const;
};

/// Integral over t in (t0 - 4R^2, t0 - R^2) and Omega of the squared speed
/// deviation against G, with du/dt the forward difference between snapshots.
double speed_window(const Trajectory& traj, double t0, std::span<const double> x0, double R,
                    MonotonicityForm form);

MonotonicityReport monotonicity_report(const Trajectory& traj, double t0, std::span<const double> x0, double R1,
                                       double R2, MonotonicityForm form = MonotonicityForm::Main1,
                                       const FitGrid& grid = {}, std::size_t r_samples = 5);

/// Right-hand side for given constants.
double monotonicity_rhs(const MonotonicityReport& rep, double mu, double C);

enum class Main2Variant {
  Criterion,  // regularity criterion with the d_{x0} weight
  GlhfDecay,  // energy-decay bound for the relaxed flow
};

struct Main2Report {
  double interior_term = 0.0;  // coefficient times integral of |grad u0|^2
  double boundary_term = 0.0;  // time and surface integral of |grad_tau u0|^2 G (weight)
  double bracket = 0.0;
  double value = 0.0;
  nlohmann::json to_json() const;
};

/// Criterion: e^{(4R0)^mu}/R0^2 [ e^{-4(d-2)/d0^2} t0^{-(d-2)/2} int |grad u0|^2
///   + int_0^{t0-R0^2} dt sum_bnd |grad_tau u0|^2 G (d_{x0} + 4(t0-t)/d0^2) h^{d-1} ] + C R0
/// GlhfDecay: e^{-4(d-2)(t0-R0^2)/d0^2}/(2 sqrt(t0))^d int |grad u0|^2
///   + C int_0^{t0-R0^2} dt sum_bnd |grad_tau u0|^2 G h^{d-1}
Main2Report main2_lhs(const SphereField& u0, double t0, std::span<const double> x0, double R0, double mu, double C,
                      Main2Variant variant = Main2Variant::Criterion);

struct ReversePoincareReport {
  double lhs = 0.0;              // (1/R^d) integral over P_R of |grad u|^2/2
  double deviation_term = 0.0;   // mean over P_2R of |u - h0|^2
  double derivative_term = 0.0;  // mean over B_2R of |grad^m h0|^2 + |grad h0|^2
  double rhs = 0.0;              // deviation_term + derivative_term
  int order = 0;
  nlohmann::json to_json() const;
};

ReversePoincareReport reverse_poincare_ratio(const Trajectory& traj, const SphereField& h0, const CylinderSpec& cyl);

struct HybridReport {
  double inner = 0.0;      // integral over P_R of e_lambda
  double outer = 0.0;      // integral over P_2R of e_lambda
  double deviation = 0.0;  // (1/R^2) integral over P_2R of |u - h0|^2
  double derivative = 0.0; // integral over P_2R of |grad^m h0|^2 + |grad h0|^2
  double data = 0.0;       // deviation + derivative
  double eps0 = 0.0;
  double fitted_C = 0.0;   // smallest grid C with inner <= eps0 outer + C data
  bool fit_found = false;
  nlohmann::json to_json() const;
};

HybridReport hybrid_report(const Trajectory& traj, const SphereField& h0, const CylinderSpec& cyl, double eps0,
                           const std::vector<double>& C_grid = FitGrid{}.C);

}  // namespace sphereflow

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sphereflow/field.hpp"
#include "sphereflow/flow.hpp"

namespace sphereflow {

/// Stereographic coordinates v in R^D from the south pole:
/// v^i = u^i/(1 + u^{D+1}).
class StereoField {
 public:
  StereoField(GridPtr grid, int target_dim);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int target_dim() const { return target_dim_; }
  std::size_t size() const { return grid_->size(); }

  std::span<double> at(std::size_t k) {
    return {values_.data() + k * static_cast<std::size_t>(target_dim_), static_cast<std::size_t>(target_dim_)};
  }
  std::span<const double> at(std::size_t k) const {
    return {values_.data() + k * static_cast<std::size_t>(target_dim_), static_cast<std::size_t>(target_dim_)};
  }
  std::span<const double> values() const { return values_; }

 private:
  GridPtr grid_;
  int target_dim_;
  std::vector<double> values_;
};

/// Requires u^{D+1} > -1 + 1e-6 at every node (PoleProximity otherwise).
StereoField to_stereo(const SphereField& u);
SphereField from_stereo(const StereoField& v);

/// Integral from 0 to x of (1 - t^2)/(1 + t^2)^2 dt = x/(1 + x^2).
double stereo_w(double x);
double stereo_w_integrand(double t);

struct WTrackRow {
  std::size_t step = 0;
  double t = 0.0;
  double max_w = 0.0;
  double min_last_component = 0.0;
};

struct OneSidedReport {
  bool rotation_found = false;
  Eigen::MatrixXd rotation;    // applied to target values before the checks
  double min_last_component = 0.0;  // of the rotated initial data
  double theta0 = 0.0;         // (1 - max |v0|)/2, 0 when not one-sided
  bool pass = false;
  double band = 0.0;           // allowed growth of max W above its initial value
  std::optional<std::size_t> failed_step;
  std::string failure;
  std::vector<WTrackRow> track;
  double identity_residual_max = 0.0;  // reported only
  double identity_residual_mean = 0.0;
  std::size_t identity_samples = 0;

  nlohmann::json to_json() const;
};

/// Rotation taking the mean direction of u0 to the north pole, and the
/// hemisphere test on the rotated data.
OneSidedReport one_sided_check(const SphereField& u0);

/// Online version of one_sided_monitor, fed one time level at a time.
class OneSidedMonitor {
 public:
  /// band = 1e-6 + band_factor * dt
  OneSidedMonitor(const SphereField& u0, double dt, double band_factor = 10.0);

  void observe(std::size_t step, double t, const SphereField& u);
  OneSidedReport report() const { return report_; }

 private:
  OneSidedReport report_;
  double initial_max_w_ = 0.0;
  bool started_ = false;
};

/// Tracks max W(|v|^2) and min u^{D+1} over the trajectory's snapshots after
/// the fixed rotation found at t = 0, and samples the residual of the
/// stereographic W identity at random interior points between consecutive
/// snapshots.
OneSidedReport one_sided_monitor(const Trajectory& traj, double band_factor = 10.0,
                                 std::size_t identity_samples = 100, std::uint64_t seed = 1);

}  // namespace sphereflow

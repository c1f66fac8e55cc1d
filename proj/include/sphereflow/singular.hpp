#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphereflow/diagnostics.hpp"

namespace sphereflow {

/// (1/R^d) times the integral of e_lambda over P_R(z0) ∩ Q for
/// GinzburgLandau; (1/(2R^d)) times the integral of |grad u|^2 for Dirichlet.
double local_scaled_energy(const DensityCache& cache, const CylinderSpec& cyl);
double local_scaled_energy(const Trajectory& traj, const CylinderSpec& cyl, DensityKind mode);

DensityKind density_kind_from_string(const std::string& s);
std::string to_string(DensityKind kind);

struct SingularConfig {
  double eps0 = 1.0;
  std::vector<double> radii;        // empty: {4h, 8h, 16h}
  std::size_t time_stride = 1;      // in snapshots
  std::size_t space_stride = 1;     // lattice points with every coordinate divisible
  DensityKind mode = DensityKind::GinzburgLandau;
  std::vector<double> deltas;       // box sizes; empty skips the box count

  static SingularConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SpacetimePoint {
  double t = 0.0;
  Point x;
};

struct FlaggedPoint {
  std::size_t snapshot = 0;
  std::size_t node = 0;
  double t = 0.0;
  Point x;
  std::vector<double> values;  // scaled energy per radius
  double sup_density = 0.0;    // max e_lambda over the smallest cylinder
};

struct BoxCount {
  std::vector<double> deltas;
  std::vector<std::size_t> counts;
  double dimension = 0.0;  // NaN for an empty set

  nlohmann::json to_json() const;
};

struct SingularReport {
  double eps0 = 0.0;
  std::vector<double> radii;
  DensityKind mode = DensityKind::GinzburgLandau;
  std::size_t scanned = 0;
  std::vector<FlaggedPoint> flagged;
  std::optional<BoxCount> box_count;

  std::vector<SpacetimePoint> points() const;
  nlohmann::json to_json() const;
};

/// A scanned point is flagged when its scaled energy reaches eps0 at every
/// radius. Output is ordered by (snapshot, node).
SingularReport detect_singular_set(const Trajectory& traj, const SingularConfig& cfg, unsigned threads = 1);

/// Greedy cover by parabolic boxes (time extent delta^2, space extent delta)
/// after sorting by time; dimension is the least-squares slope of log N
/// against log(1/delta).
BoxCount parabolic_box_count(std::vector<SpacetimePoint> points, const std::vector<double>& deltas);

struct CertificateRow {
  double r = 0.0;
  double integral = 0.0;  // of |grad u|^2 over P_r(z0) ∩ Q
  double bound = 0.0;     // eps0^2 r^d / 2
  bool pass = false;
};

struct SmallEnergyCertificate {
  double eps0 = 0.0;
  std::vector<CertificateRow> rows;  // decreasing r
  double r_star = 0.0;               // largest r below which every listed radius passes; 0 if none
  bool pass = false;                 // r_star > 0

  nlohmann::json to_json() const;
};

/// Dyadic radii d0/2^k, k >= 1, down to 2h.
std::vector<double> dyadic_radii(const Grid& grid);

SmallEnergyCertificate small_energy_certificate(const Trajectory& traj, double t0, std::span<const double> x0,
                                                double eps0, std::vector<double> radii = {});

}  // namespace sphereflow

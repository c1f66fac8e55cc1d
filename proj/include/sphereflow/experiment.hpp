#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphereflow/diagnostics.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/singular.hpp"

namespace sphereflow {

struct MonotonicityPair {
  double t0 = 0.0;
  Point x0;
  double R1 = 0.0, R2 = 0.0;
};

struct Main2Spec {
  double t0 = 0.0;
  Point x0;
  double R0 = 0.0;
  double mu = 0.5;
  double C = 1.0;
  Main2Variant variant = Main2Variant::Criterion;
};

struct SmallEnergySpec {
  double t0 = 0.0;
  Point x0;
  double eps0 = 0.5;
  std::vector<double> radii;  // empty: dyadic
};

struct DiagnosticsConfig {
  std::vector<CylinderSpec> cylinders;
  std::vector<MonotonicityPair> monotonicity;
  MonotonicityForm monotonicity_form = MonotonicityForm::Main1;
  std::size_t r_samples = 5;
  std::optional<Main2Spec> main2;
  bool harmonic = false;
  std::vector<CylinderSpec> reverse_poincare;  // also used for the hybrid report
  double hybrid_eps0 = 0.1;
  std::optional<SingularConfig> singular;
  bool one_sided = false;
  double band_factor = 10.0;
  std::size_t identity_samples = 100;
  std::optional<SmallEnergySpec> small_energy;
  bool compare_projected = false;
  std::optional<CylinderSpec> probe;  // scaled energy column of sweeps
  DensityKind probe_mode = DensityKind::Dirichlet;
};

class Manifest;

enum class SnapshotOutput { All, Endpoints, None };

struct ExperimentConfig {
  std::string name = "experiment";
  Domain domain = Domain::unit_ball(2);
  double h = 1.0 / 16.0;
  int target_dim = 2;
  InitialData initial;
  SolverConfig solver;
  PenaltySchedule schedule;
  std::uint64_t seed = 1;
  SnapshotOutput snapshots = SnapshotOutput::All;
  DiagnosticsConfig diagnostics;
  nlohmann::json source;  // the parsed document

  /// Throws Error(InvalidConfig) on malformed or unknown fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Grid, initial field and step size resolved from a config. Every
/// precondition that can be checked without stepping is checked here.
struct PreparedExperiment {
  ExperimentConfig config;
  GridPtr grid;
  SphereField u0;
  double dt = 0.0;
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

struct ExperimentResult {
  Trajectory trajectory;
  std::optional<Trajectory> projected;
  nlohmann::json summary;
};

/// Runs the flow and the diagnostic batch. With a manifest, writes every
/// artifact through it; without one, only computes the summary.
ExperimentResult execute_experiment(const PreparedExperiment& prep, unsigned threads, Manifest* manifest);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path out_dir;
  nlohmann::json document;  // summary on success, error record otherwise
};

RunOutcome run_experiment(const nlohmann::json& config, const std::filesystem::path& out_dir, unsigned threads = 1);
RunOutcome run_experiment(const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out_dir,
                          unsigned threads = 1);

/// One row per value of `param` (lambda, h or dt) in sweep.csv.
RunOutcome sweep(const nlohmann::json& config, const std::string& param, const std::vector<double>& values,
                 const std::filesystem::path& out_dir, unsigned threads = 1);

/// Default output directory for a config: "out/<name>".
std::filesystem::path default_out_dir(const nlohmann::json& config);

}  // namespace sphereflow

#include "sphereflow/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sphereflow/elliptic.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/parallel.hpp"
#include "sphereflow/stereo.hpp"

namespace sphereflow {

namespace {

using json = nlohmann::json;

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  require(j.is_object(), ErrorCode::InvalidConfig, where + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(ErrorCode::InvalidConfig, "unknown key \"" + k + "\" in " + where);
  }
}

Point point_from(const json& j, const char* key) {
  require(j.contains(key), ErrorCode::InvalidConfig, std::string("missing \"") + key + "\"");
  return j.at(key).get<Point>();
}

CylinderSpec cylinder_from(const json& j) {
  allow_keys(j, "cylinder", {"t0", "x0", "R"});
  return {j.at("t0").get<double>(), point_from(j, "x0"), j.at("R").get<double>()};
}

MonotonicityForm form_from(const std::string& s) {
  if (s == "main1") return MonotonicityForm::Main1;
  if (s == "mon") return MonotonicityForm::Mon;
  fail(ErrorCode::InvalidConfig, "unknown monotonicity form \"" + s + "\" (main1 | mon)");
}

std::vector<json> as_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  require(j.at(key).is_array(), ErrorCode::InvalidConfig, std::string("\"") + key + "\" must be an array");
  return j.at(key).get<std::vector<json>>();
}

DiagnosticsConfig diagnostics_from(const json& j) {
  allow_keys(j, "diagnostics",
             {"cylinders", "monotonicity", "monotonicity_form", "r_samples", "main2", "harmonic", "reverse_poincare",
              "hybrid_eps0", "singular", "one_sided", "band_factor", "identity_samples", "small_energy",
              "compare_projected", "probe", "probe_mode"});
  DiagnosticsConfig d;
  for (const json& c : as_list(j, "cylinders")) d.cylinders.push_back(cylinder_from(c));
  for (const json& m : as_list(j, "monotonicity")) {
    allow_keys(m, "monotonicity pair", {"t0", "x0", "R1", "R2"});
    d.monotonicity.push_back({m.at("t0").get<double>(), point_from(m, "x0"), m.at("R1").get<double>(),
                              m.at("R2").get<double>()});
  }
  d.monotonicity_form = form_from(j.value("monotonicity_form", std::string("main1")));
  d.r_samples = j.value("r_samples", d.r_samples);
  if (j.contains("main2")) {
    const json& m = j.at("main2");
    allow_keys(m, "main2", {"t0", "x0", "R0", "mu", "C", "variant"});
    Main2Spec s;
    s.t0 = m.at("t0").get<double>();
    s.x0 = point_from(m, "x0");
    s.R0 = m.at("R0").get<double>();
    s.mu = m.value("mu", s.mu);
    s.C = m.value("C", s.C);
    const std::string v = m.value("variant", std::string("criterion"));
    if (v == "criterion") s.variant = Main2Variant::Criterion;
    else if (v == "glhf-decay") s.variant = Main2Variant::GlhfDecay;
    else fail(ErrorCode::InvalidConfig, "unknown main2 variant \"" + v + "\" (criterion | glhf-decay)");
    d.main2 = s;
  }
  d.harmonic = j.value("harmonic", false);
  for (const json& c : as_list(j, "reverse_poincare")) d.reverse_poincare.push_back(cylinder_from(c));
  if (!d.reverse_poincare.empty()) d.harmonic = true;
  d.hybrid_eps0 = j.value("hybrid_eps0", d.hybrid_eps0);
  if (j.contains("singular")) {
    allow_keys(j.at("singular"), "singular", {"eps0", "radii", "time_stride", "space_stride", "mode", "deltas"});
    d.singular = SingularConfig::from_json(j.at("singular"));
  }
  d.one_sided = j.value("one_sided", false);
  d.band_factor = j.value("band_factor", d.band_factor);
  d.identity_samples = j.value("identity_samples", d.identity_samples);
  if (j.contains("small_energy")) {
    const json& s = j.at("small_energy");
    allow_keys(s, "small_energy", {"t0", "x0", "eps0", "radii"});
    SmallEnergySpec spec;
    spec.t0 = s.at("t0").get<double>();
    spec.x0 = point_from(s, "x0");
    spec.eps0 = s.value("eps0", spec.eps0);
    spec.radii = s.value("radii", spec.radii);
    d.small_energy = spec;
  }
  d.compare_projected = j.value("compare_projected", false);
  if (j.contains("probe")) d.probe = cylinder_from(j.at("probe"));
  d.probe_mode = density_kind_from_string(j.value("probe_mode", std::string("dirichlet")));
  return d;
}

void check_point_dim(const Point& x, int d, const std::string& what) {
  require(static_cast<int>(x.size()) == d, ErrorCode::InvalidConfig,
          what + " has " + std::to_string(x.size()) + " coordinates, domain dimension is " + std::to_string(d));
}

json error_record(const Error& e, const std::string& phase, int code) {
  return {{"status", "error"},
          {"exit_code", code},
          {"error", std::string(e.name())},
          {"message", e.what()},
          {"phase", phase}};
}

std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshots/snap_%06zu.bin", index);
  return buf;
}

json grid_spec(const PreparedExperiment& prep) {
  return {{"domain", prep.config.domain.to_json()}, {"h", prep.config.h}};
}

double final_distance(const Trajectory& a, const Trajectory& b) {
  return l2_distance(a.snapshots.back().field, b.snapshots.back().field);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    allow_keys(j, "config", {"name", "domain", "h", "target_dim", "initial", "solver", "seed", "snapshots",
                             "diagnostics", "description"});
    ExperimentConfig c;
    c.source = j;
    c.name = j.value("name", c.name);
    require(j.contains("domain"), ErrorCode::InvalidConfig, "config needs a \"domain\"");
    c.domain = Domain::from_json(j.at("domain"));
    c.h = j.value("h", c.h);
    c.target_dim = j.value("target_dim", c.target_dim);
    c.seed = j.value("seed", c.seed);
    if (j.contains("initial")) {
      c.initial = InitialData::from_json(j.at("initial"));
      if (!j.at("initial").contains("seed")) c.initial.seed = c.seed;
    } else {
      c.initial.seed = c.seed;
    }

    const json solver = j.value("solver", json::object());
    allow_keys(solver, "solver",
               {"mode", "lambda", "T", "dt", "output_stride", "cfl_safety", "penalty_integration"});
    c.solver.mode = flow_mode_from_string(solver.value("mode", std::string("glhf-simplified")));
    c.schedule.lambda = solver.value("lambda", c.schedule.lambda);
    c.schedule.original_form = c.solver.mode == FlowMode::GlhfOriginal;
    c.solver.T = solver.value("T", c.solver.T);
    if (solver.contains("dt")) {
      const json& dt = solver.at("dt");
      if (dt.is_string()) {
        require(dt.get<std::string>() == "auto", ErrorCode::InvalidConfig, "dt must be a number or \"auto\"");
        c.solver.dt = 0.0;
      } else {
        c.solver.dt = dt.get<double>();
        require(c.solver.dt > 0.0, ErrorCode::InvalidConfig, "dt must be positive");
      }
    }
    c.solver.output_stride = solver.value("output_stride", c.solver.output_stride);
    c.solver.cfl_safety = solver.value("cfl_safety", c.solver.cfl_safety);
    const std::string integ = solver.value("penalty_integration", std::string("exact"));
    if (integ == "exact") c.solver.integration = PenaltyIntegration::ExactLogistic;
    else if (integ == "explicit") c.solver.integration = PenaltyIntegration::Explicit;
    else fail(ErrorCode::InvalidConfig, "penalty_integration must be \"exact\" or \"explicit\"");

    const std::string snaps = j.value("snapshots", std::string("all"));
    if (snaps == "all") c.snapshots = SnapshotOutput::All;
    else if (snaps == "endpoints") c.snapshots = SnapshotOutput::Endpoints;
    else if (snaps == "none") c.snapshots = SnapshotOutput::None;
    else fail(ErrorCode::InvalidConfig, "snapshots must be all | endpoints | none");

    if (j.contains("diagnostics")) c.diagnostics = diagnostics_from(j.at("diagnostics"));
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what());
  }
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  require(config.h > 0.0, ErrorCode::InvalidConfig, "h must be positive");
  require(config.target_dim >= 1, ErrorCode::InvalidConfig, "target_dim must be at least 1");
  require(config.solver.T > 0.0, ErrorCode::InvalidConfig, "T must be positive");
  require(config.solver.output_stride >= 1, ErrorCode::InvalidConfig, "output_stride must be at least 1");
  if (config.solver.mode != FlowMode::Projected) {
    require(config.schedule.lambda > 1.0, ErrorCode::InvalidConfig, "lambda must exceed 1");
  }
  const int d = config.domain.dim();
  const DiagnosticsConfig& diag = config.diagnostics;
  for (const CylinderSpec& c : diag.cylinders) check_point_dim(c.x0, d, "cylinder center");
  for (const CylinderSpec& c : diag.reverse_poincare) check_point_dim(c.x0, d, "cylinder center");
  for (const MonotonicityPair& p : diag.monotonicity) check_point_dim(p.x0, d, "monotonicity center");
  if (diag.main2) check_point_dim(diag.main2->x0, d, "main2 center");
  if (diag.small_energy) check_point_dim(diag.small_energy->x0, d, "small-energy center");
  if (diag.probe) check_point_dim(diag.probe->x0, d, "probe center");
  if (diag.singular && !diag.singular->deltas.empty() && diag.singular->deltas.size() < 3) {
    fail(ErrorCode::TooFewScales, "singular.deltas needs at least 3 scales");
  }

  GridPtr grid = build_grid(config.domain, config.h);
  SphereField u0 = generate(config.initial, grid, config.target_dim);
  const double dt = resolve_dt(*grid, config.solver);
  return {config, std::move(grid), std::move(u0), dt};
}

ExperimentResult execute_experiment(const PreparedExperiment& prep, unsigned threads, Manifest* manifest) {
  const ExperimentConfig& cfg = prep.config;
  const DiagnosticsConfig& diag = cfg.diagnostics;
  SolverConfig solver = cfg.solver;
  solver.dt = prep.dt;

  ExperimentResult res;
  res.trajectory = run_flow(prep.u0, solver, cfg.schedule);
  const Trajectory& traj = res.trajectory;
  const Grid& g = traj.grid();
  json& s = res.summary;
  s["name"] = cfg.name;
  s["mode"] = to_string(cfg.solver.mode);
  s["lambda"] = cfg.schedule.lambda;
  s["h"] = cfg.h;
  s["dt"] = traj.dt;
  s["T"] = traj.T;
  s["steps"] = traj.records.back().step;
  s["nodes"] = g.size();
  s["snapshots"] = traj.snapshots.size();
  const StepRecord& last = traj.records.back();
  s["final_dirichlet_energy"] = last.dirichlet_energy;
  s["final_gl_energy"] = last.gl_energy;
  s["initial_dirichlet_energy"] = traj.records.front().dirichlet_energy;
  s["penalty_integral"] = penalty_integral(traj);
  double max_norm = 0.0;
  for (const StepRecord& r : traj.records) max_norm = std::max(max_norm, r.max_norm);
  s["max_norm"] = max_norm;

  if (manifest) {
    write_json(manifest->path("config.json"), cfg.source);
    manifest->add("config.json", "config");
    trajectory_table(traj).write(manifest->path("trajectory.csv"));
    manifest->add("trajectory.csv", "trajectory");

    CsvTable energy({"snapshot", "step", "t", "gl_energy", "dirichlet_energy", "penalty_part", "max_norm"});
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
      const Snapshot& snap = traj.snapshots[i];
      const EnergyReport er = energy_report(snap.field, traj.penalty_strength(snap.t));
      energy.add_row() << i << snap.step << snap.t << er.gl_energy << er.dirichlet_energy << er.penalty_part
                       << snap.field.max_norm();
    }
    energy.write(manifest->path("energy.csv"));
    manifest->add("energy.csv", "energy");

    if (cfg.snapshots != SnapshotOutput::None) {
      for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        if (cfg.snapshots == SnapshotOutput::Endpoints && i != 0 && i + 1 != traj.snapshots.size()) continue;
        const Snapshot& snap = traj.snapshots[i];
        const std::string rel = snapshot_name(i);
        write_snapshot(manifest->path(rel), snap.field,
                       {{"grid", grid_spec(prep)},
                        {"D", snap.field.target_dim()},
                        {"t", snap.t},
                        {"step", snap.step},
                        {"lambda", cfg.solver.mode == FlowMode::Projected ? json(nullptr) : json(cfg.schedule.lambda)},
                        {"exponent", cfg.solver.mode == FlowMode::Projected ? 0.0 : cfg.schedule.exponent(snap.t)},
                        {"tag", "u"}});
        manifest->add(rel, "snapshot");
        std::string side = rel;
        side.replace(side.size() - 4, 4, ".json");
        manifest->add(side, "snapshot-sidecar");
      }
    }
  }

  if (diag.compare_projected && cfg.solver.mode != FlowMode::Projected) {
    SolverConfig p = solver;
    p.mode = FlowMode::Projected;
    res.projected = run_flow(prep.u0, p, cfg.schedule);
    s["distance_to_projected"] = l2_spacetime_distance(traj, *res.projected);
    s["final_distance_to_projected"] = final_distance(traj, *res.projected);
  }

  if (!diag.cylinders.empty()) {
    const DensityCache gl(traj, DensityKind::GinzburgLandau);
    const DensityCache dir(traj, DensityKind::Dirichlet);
    struct Row {
      double mgl = NAN, mdir = NAN, annulus = NAN;
    };
    std::vector<Row> rows(diag.cylinders.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
      const CylinderSpec& c = diag.cylinders[i];
      rows[i].mgl = local_scaled_energy(gl, c);
      rows[i].mdir = local_scaled_energy(dir, c);
      try {
        rows[i].annulus = weighted_annulus_energy(gl, c.t0, c.x0, c.R);
      } catch (const Error&) {
        // window or kernel precondition fails: left as nan
      }
    });
    std::vector<std::string> header = {"t0"};
    for (int a = 0; a < g.dim(); ++a) header.push_back("x0_" + std::to_string(a));
    for (const char* col : {"R", "mbar_gl", "mbar_dirichlet", "weighted_annulus_energy"}) header.push_back(col);
    CsvTable table(header);
    json list = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const CylinderSpec& c = diag.cylinders[i];
      auto& row = table.add_row() << c.t0;
      for (double x : c.x0) row << x;
      row << c.R << rows[i].mgl << rows[i].mdir << rows[i].annulus;
      list.push_back({{"cylinder", c.to_json()}, {"mbar_gl", rows[i].mgl}, {"mbar_dirichlet", rows[i].mdir}});
    }
    s["cylinders"] = list;
    if (manifest) {
      table.write(manifest->path("cylinders.csv"));
      manifest->add("cylinders.csv", "cylinder-scan");
    }
  }

  if (!diag.monotonicity.empty()) {
    std::vector<MonotonicityReport> reps(diag.monotonicity.size());
    parallel_for(reps.size(), threads, [&](std::size_t i) {
      const MonotonicityPair& p = diag.monotonicity[i];
      reps[i] = monotonicity_report(traj, p.t0, p.x0, p.R1, p.R2, diag.monotonicity_form, {}, diag.r_samples);
    });
    std::vector<std::string> header = {"t0"};
    for (int a = 0; a < g.dim(); ++a) header.push_back("x0_" + std::to_string(a));
    for (const char* col : {"R1", "R2", "form", "annulus_R1", "speed_term", "annulus_R2", "lhs", "mu", "C", "rhs",
                            "defect"}) {
      header.push_back(col);
    }
    CsvTable table(header);
    json list = json::array();
    std::size_t zero = 0;
    for (const MonotonicityReport& r : reps) {
      auto& row = table.add_row() << r.t0;
      for (double x : r.x0) row << x;
      row << r.R1 << r.R2 << to_string(r.form) << r.annulus_R1 << r.speed_term << r.annulus_R2 << r.lhs << r.mu << r.C
          << r.rhs << r.defect;
      list.push_back(r.to_json());
      if (r.defect == 0.0) ++zero;
    }
    s["monotonicity_zero_defect_pairs"] = zero;
    if (manifest) {
      table.write(manifest->path("monotonicity.csv"));
      manifest->add("monotonicity.csv", "monotonicity");
      write_json(manifest->path("monotonicity.json"), list);
      manifest->add("monotonicity.json", "monotonicity");
    }
  }

  if (diag.main2) {
    const Main2Spec& m = *diag.main2;
    const Main2Report r = main2_lhs(prep.u0, m.t0, m.x0, m.R0, m.mu, m.C, m.variant);
    s["main2"] = r.to_json();
    if (manifest) {
      write_json(manifest->path("main2.json"), r.to_json());
      manifest->add("main2.json", "main2");
    }
  }

  if (diag.harmonic) {
    const HarmonicExtension h0 =
        cfg.initial.has_point_evaluation()
            ? solve_harmonic_extension(prep.grid, cfg.target_dim,
                                       boundary_function(cfg.initial, cfg.domain, cfg.target_dim))
            : solve_harmonic_extension(prep.u0);
    s["h0"] = {{"residual", h0.residual}, {"iterations", h0.iterations}};
    if (manifest) {
      write_snapshot(manifest->path("h0.bin"), h0.field,
                     {{"grid", grid_spec(prep)}, {"D", cfg.target_dim}, {"t", 0.0}, {"step", 0},
                      {"lambda", nullptr}, {"exponent", 0.0}, {"tag", "h0"}});
      manifest->add("h0.bin", "snapshot");
      manifest->add("h0.json", "snapshot-sidecar");
    }
    if (!diag.reverse_poincare.empty()) {
      std::vector<ReversePoincareReport> rp(diag.reverse_poincare.size());
      std::vector<HybridReport> hy(diag.reverse_poincare.size());
      parallel_for(rp.size(), threads, [&](std::size_t i) {
        rp[i] = reverse_poincare_ratio(traj, h0.field, diag.reverse_poincare[i]);
        hy[i] = hybrid_report(traj, h0.field, diag.reverse_poincare[i], diag.hybrid_eps0);
      });
      json list = json::array();
      for (std::size_t i = 0; i < rp.size(); ++i) {
        list.push_back({{"cylinder", diag.reverse_poincare[i].to_json()},
                        {"reverse_poincare", rp[i].to_json()},
                        {"hybrid", hy[i].to_json()}});
      }
      s["reverse_poincare"] = list;
      if (manifest) {
        write_json(manifest->path("reverse_poincare.json"), list);
        manifest->add("reverse_poincare.json", "reverse-poincare");
      }
    }
  }

  if (diag.singular) {
    const SingularReport r = detect_singular_set(traj, *diag.singular, threads);
    s["singular"] = {{"scanned", r.scanned}, {"flagged", r.flagged.size()}};
    if (r.box_count) s["singular"]["dimension"] = r.box_count->to_json()["dimension"];
    if (manifest) {
      write_json(manifest->path("singular.json"), r.to_json());
      manifest->add("singular.json", "singular");
      if (r.box_count) {
        CsvTable table({"delta", "count"});
        for (std::size_t i = 0; i < r.box_count->deltas.size(); ++i) {
          table.add_row() << r.box_count->deltas[i] << r.box_count->counts[i];
        }
        table.write(manifest->path("boxcount.csv"));
        manifest->add("boxcount.csv", "box-count");
      }
    }
  }

  if (diag.one_sided) {
    const OneSidedReport r = one_sided_monitor(traj, diag.band_factor, diag.identity_samples, cfg.seed);
    s["one_sided"] = {{"pass", r.pass}, {"theta0", r.theta0}, {"min_last_component", r.min_last_component}};
    if (manifest) {
      write_json(manifest->path("one_sided.json"), r.to_json());
      manifest->add("one_sided.json", "one-sided");
      CsvTable table({"step", "t", "maxW", "min_last_component"});
      for (const WTrackRow& row : r.track) table.add_row() << row.step << row.t << row.max_w << row.min_last_component;
      table.write(manifest->path("wtrack.csv"));
      manifest->add("wtrack.csv", "w-track");
    }
  }

  if (diag.small_energy) {
    const SmallEnergySpec& sp = *diag.small_energy;
    const SmallEnergyCertificate c = small_energy_certificate(traj, sp.t0, sp.x0, sp.eps0, sp.radii);
    s["small_energy"] = {{"pass", c.pass}, {"r_star", c.r_star}};
    if (manifest) {
      write_json(manifest->path("small_energy.json"), c.to_json());
      manifest->add("small_energy.json", "small-energy");
    }
  }

  if (diag.probe) s["probe_scaled_energy"] = local_scaled_energy(traj, *diag.probe, diag.probe_mode);

  if (manifest) {
    write_json(manifest->path("summary.json"), s);
    manifest->add("summary.json", "summary");
  }
  return res;
}

namespace {

RunOutcome failure(const Error& e, const std::string& phase, int code, const std::filesystem::path& out) {
  RunOutcome o;
  o.exit_code = code;
  o.out_dir = out;
  o.document = error_record(e, phase, code);
  try {
    write_json(out / "error.json", o.document);
  } catch (...) {
    // the error record is still returned to the caller
  }
  return o;
}

}  // namespace

RunOutcome run_experiment(const json& config, const std::filesystem::path& out_dir, unsigned threads) {
  std::optional<PreparedExperiment> prep;
  try {
    prep = prepare_experiment(ExperimentConfig::from_json(config));
  } catch (const Error& e) {
    return failure(e, "validation", kExitConfig, out_dir);
  }
  try {
    std::filesystem::create_directories(out_dir);
    std::filesystem::remove(out_dir / "error.json");
    Manifest manifest(out_dir);
    ExperimentResult res = execute_experiment(*prep, threads, &manifest);
    manifest.write({{"name", prep->config.name}, {"command", "run"}});
    return {kExitOk, out_dir, res.summary};
  } catch (const Error& e) {
    return failure(e, "runtime", kExitRuntime, out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    return failure(Error(ErrorCode::Io, e.what()), "runtime", kExitRuntime, out_dir);
  }
}

std::filesystem::path default_out_dir(const json& config) {
  std::string name = "experiment";
  if (config.is_object() && config.contains("name") && config.at("name").is_string()) {
    name = config.at("name").get<std::string>();
  }
  return std::filesystem::path("out") / name;
}

RunOutcome run_experiment(const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out_dir,
                          unsigned threads) {
  json config;
  try {
    config = read_json(config_path);
  } catch (const Error& e) {
    return failure(e, "validation", kExitConfig, out_dir.value_or(std::filesystem::path("out")));
  }
  return run_experiment(config, out_dir.value_or(default_out_dir(config)), threads);
}

RunOutcome sweep(const json& config, const std::string& param, const std::vector<double>& values,
                 const std::filesystem::path& out_dir, unsigned threads) {
  std::vector<PreparedExperiment> preps;
  try {
    require(param == "lambda" || param == "h" || param == "dt", ErrorCode::InvalidConfig,
            "sweep parameter must be lambda, h or dt (got \"" + param + "\")");
    require(!values.empty(), ErrorCode::InvalidConfig, "sweep needs at least one value");
    const ExperimentConfig base = ExperimentConfig::from_json(config);
    for (double v : values) {
      ExperimentConfig c = base;
      json src = base.source;
      if (param == "lambda") {
        c.schedule.lambda = v;
        src["solver"]["lambda"] = v;
      } else if (param == "h") {
        c.h = v;
        src["h"] = v;
      } else {
        c.solver.dt = v;
        src["solver"]["dt"] = v;
      }
      c.source = src;
      preps.push_back(prepare_experiment(c));
    }
  } catch (const Error& e) {
    return failure(e, "validation", kExitConfig, out_dir);
  }

  try {
    std::filesystem::create_directories(out_dir);
    std::filesystem::remove(out_dir / "error.json");
    Manifest manifest(out_dir);
    CsvTable table({"param", "value", "dt", "steps", "final_t", "final_dirichlet_energy", "final_gl_energy",
                    "penalty_integral", "distance_to_projected", "final_distance_to_projected", "scaled_energy"});
    json rows = json::array();
    for (std::size_t i = 0; i < preps.size(); ++i) {
      PreparedExperiment& p = preps[i];
      if (p.config.solver.mode != FlowMode::Projected) p.config.diagnostics.compare_projected = true;
      const ExperimentResult r = execute_experiment(p, threads, nullptr);
      const json& s = r.summary;
      const auto num = [&](const char* key) { return s.contains(key) ? s.at(key).get<double>() : NAN; };
      table.add_row() << param << values[i] << r.trajectory.dt << r.trajectory.records.back().step
                      << r.trajectory.end_time() << num("final_dirichlet_energy") << num("final_gl_energy")
                      << num("penalty_integral") << num("distance_to_projected") << num("final_distance_to_projected")
                      << num("probe_scaled_energy");
      rows.push_back(s);
    }
    table.write(manifest.path("sweep.csv"));
    manifest.add("sweep.csv", "sweep");
    write_json(manifest.path("sweep.json"), rows);
    manifest.add("sweep.json", "sweep");
    manifest.write({{"command", "sweep"}, {"param", param}, {"values", values}});
    return {kExitOk, out_dir, {{"param", param}, {"rows", rows}}};
  } catch (const Error& e) {
    return failure(e, "runtime", kExitRuntime, out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    return failure(Error(ErrorCode::Io, e.what()), "runtime", kExitRuntime, out_dir);
  }
}

}  // namespace sphereflow

// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sphereflow/diagnostics.hpp"
#include "sphereflow/elliptic.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/experiment.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/singular.hpp"
#include "sphereflow/stereo.hpp"

using namespace sphereflow;
using json = nlohmann::json;

namespace {

const fs::path kConfigs = SPHEREFLOW_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PreparedExperiment load(const std::string& name) {
  return prepare_experiment(ExperimentConfig::from_json(read_json(kConfigs / (name + ".json"))));
}

// ---------------------------------------------------------------------------

Outcome maximum_principle() {
  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 32.0);
  SolverConfig cfg;
  cfg.T = 0.25;
  cfg.output_stride = 50;
  PenaltySchedule sched;
  sched.lambda = 1e3;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    InitialData r;
    r.kind = InitialDataKind::Random;
    r.seed = seed;
    run_glhf(generate(r, g, 2), cfg, sched,
             [&](std::size_t, double, const SphereField& u) { worst = std::max(worst, u.max_norm()); });
  }
  return {worst <= 1.0 + 1e-12, "max |u| over 5 runs, every step = " + fmt("%.17g", worst)};
}

struct LambdaSweep {
  std::vector<double> lambdas = {1e2, 1e3, 1e4};
  std::vector<double> penalty, distance;
};

const LambdaSweep& lambda_sweep() {
  static const LambdaSweep sweep = [] {
    LambdaSweep s;
    const PreparedExperiment base = load("cap_disc");
    SolverConfig p = base.config.solver;
    p.dt = base.dt;
    p.mode = FlowMode::Projected;
    const Trajectory projected = run_flow(base.u0, p, base.config.schedule);
    for (double lambda : s.lambdas) {
      SolverConfig c = base.config.solver;
      c.dt = base.dt;
      PenaltySchedule sched = base.config.schedule;
      sched.lambda = lambda;
      const Trajectory traj = run_flow(base.u0, c, sched);
      s.penalty.push_back(penalty_integral(traj));
      s.distance.push_back(l2_spacetime_distance(traj, projected));
    }
    return s;
  }();
  return sweep;
}

Outcome penalty_decay() {
  const LambdaSweep& s = lambda_sweep();
  bool decreasing = true;
  for (std::size_t i = 1; i < s.penalty.size(); ++i) decreasing = decreasing && s.penalty[i] < s.penalty[i - 1];
  const double first = s.penalty.front() * std::log(s.lambdas.front());
  const double last = s.penalty.back() * std::log(s.lambdas.back());
  const double ratio = first / last;
  std::string d = "penalty integrals";
  for (double v : s.penalty) d += " " + fmt("%.4g", v);
  d += "; (P log lambda) ratio 1e2/1e4 = " + fmt("%.4g", ratio) + " (band [0.2, 5])";
  return {decreasing && ratio >= 0.2 && ratio <= 5.0, d};
}

Outcome lambda_convergence() {
  const LambdaSweep& s = lambda_sweep();
  bool ok = true;
  for (std::size_t i = 1; i < s.distance.size(); ++i) ok = ok && s.distance[i] <= s.distance[i - 1];
  std::string d = "L2(Q) distance to projected flow:";
  for (double v : s.distance) d += " " + fmt("%.4g", v);
  return {ok, d};
}

Outcome hedgehog_energy() {
  InitialData hh;
  hh.kind = InitialDataKind::EquatorHedgehog;
  const SphereField u0 = generate(hh, build_grid(Domain::unit_ball(3), 1.0 / 32.0), 2);
  SolverConfig cfg;
  cfg.T = 0.125;
  cfg.output_stride = 50;
  const Trajectory traj = run_projected(u0, cfg);
  const DensityCache cache(traj, DensityKind::Dirichlet);
  const Point origin = {0.0, 0.0, 0.0};
  const double a = local_scaled_energy(cache, {0.0625, origin, 0.125});
  const double b = local_scaled_energy(cache, {0.0625, origin, 0.25});
  const double target = 8.0 * M_PI;
  const double spread = std::abs(a - b) / std::max(a, b);
  const bool ok = std::abs(a - target) <= 0.15 * target && std::abs(b - target) <= 0.15 * target && spread <= 0.2;
  return {ok, "M(R=1/8) = " + fmt("%.4f", a) + ", M(R=1/4) = " + fmt("%.4f", b) + " vs 8pi = " +
                  fmt("%.4f", target) + ", spread " + fmt("%.3f", spread)};
}

Outcome singular_detector() {
  const PreparedExperiment hh = load("hedgehog_ball");
  const ExperimentResult hr = execute_experiment(hh, 1, nullptr);
  const SingularReport rep = detect_singular_set(hr.trajectory, *hh.config.diagnostics.singular, 2);
  std::size_t origin = 0;
  for (const FlaggedPoint& p : rep.flagged) {
    if (std::hypot(p.x[0], p.x[1], p.x[2]) < 1e-12) ++origin;
  }
  const std::size_t times = hr.trajectory.snapshots.size();
  const double dim = rep.box_count ? rep.box_count->dimension : NAN;

  const PreparedExperiment cap = load("cap_disc");
  const ExperimentResult cr = execute_experiment(cap, 1, nullptr);
  const std::size_t cap_flags = cr.summary["singular"]["flagged"].get<std::size_t>();

  const bool ok = origin == times && rep.flagged.size() == origin && cap_flags == 0 && dim >= 1.5 && dim <= 2.5;
  return {ok, "hedgehog origin flagged at " + std::to_string(origin) + "/" + std::to_string(times) +
                  " times (" + std::to_string(rep.flagged.size()) + " flags total), cap flags " +
                  std::to_string(cap_flags) + ", box-count dimension " + fmt("%.3f", dim)};
}

Outcome kernel_and_weights() {
  const Point x0 = {0.0, 0.0};
  const double s = 0.01, hq = 0.005;  // kernel width well resolved by hq
  double mass = 0.0;
  for (int i = -200; i <= 200; ++i) {
    for (int j = -200; j <= 200; ++j) {
      const Point x = {i * hq, j * hq};
      mass += backward_heat_kernel(1.0, x0, 1.0 - s, x) * hq * hq;
    }
  }
  const bool weights = weight_d(x0, Point{0.0, 0.0}, 2.0) == 1.0 && weight_d(x0, Point{1.0, 0.0}, 2.0) == 1.25 &&
                       weight_d(x0, Point{0.0, 2.0}, 2.0) == 2.0;

  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 16.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.0, 10.0);
  StereoField v(g, 2);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double a = normal(rng), b = normal(rng);
    const double r = radius(rng) / std::hypot(a, b);
    v.at(k)[0] = a * r;
    v.at(k)[1] = b * r;
  }
  const StereoField back = to_stereo(from_stereo(v));
  double roundtrip = 0.0;
  for (std::size_t i = 0; i < v.values().size(); ++i) {
    roundtrip = std::max(roundtrip, std::abs(back.values()[i] - v.values()[i]));
  }
  const double w1 = std::abs(stereo_w(1.0) - 0.5);
  const bool ok = std::abs(mass - 1.0) <= 1e-6 && weights && roundtrip <= 1e-12 && w1 <= 1e-12;
  return {ok, "|mass-1| = " + fmt("%.3g", std::abs(mass - 1.0)) + ", weights " + (weights ? "exact" : "WRONG") +
                  ", roundtrip " + fmt("%.3g", roundtrip) + ", |W(1)-0.5| = " + fmt("%.3g", w1)};
}

Outcome harmonic_extension() {
  const double h = 1.0 / 32.0;
  const GridPtr g = build_grid(Domain::unit_ball(2), h);
  HarmonicOptions opts;
  opts.tolerance = 1e-11;
  InitialData hh;
  hh.kind = InitialDataKind::EquatorHedgehog;  // (cos, sin, 0) on the circle
  const HarmonicExtension h0 = solve_harmonic_extension(g, 2, boundary_function(hh, g->domain(), 2), opts);
  double err = 0.0;
  for (std::size_t k : g->interior_nodes()) {
    const Point x = g->position(k);
    const auto u = h0.field.at(k);
    err = std::max({err, std::abs(u[0] - x[0]), std::abs(u[1] - x[1]), std::abs(u[2])});
  }

  const auto quartic = [](std::span<const double> x, std::span<double> out) {
    out[0] = std::pow(x[0], 4);
    out[1] = x[1] * x[1];
    out[2] = x[0] * x[1];
  };
  const HarmonicExtension hq = solve_harmonic_extension(g, 2, quartic, opts);
  const auto c = hq.field.at(static_cast<std::size_t>(g->find(std::vector<std::int64_t>{0, 0})));
  const double mv = std::max({std::abs(c[0] - 0.375), std::abs(c[1] - 0.5), std::abs(c[2])});
  const double mv_tol = 1e-6 + 5.0 * h * h;

  const double e0 = dirichlet_energy(h0.field);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-0.4, 0.4);
  double min_gain = 1e300;
  for (int trial = 0; trial < 5; ++trial) {
    const Point ctr = {uni(rng), uni(rng)};
    SphereField p = h0.field;
    for (std::size_t k : g->interior_nodes()) {
      const Point x = g->position(k);
      const double r2 = ((x[0] - ctr[0]) * (x[0] - ctr[0]) + (x[1] - ctr[1]) * (x[1] - ctr[1])) / 0.09;
      if (r2 < 1.0) p.at(k)[trial % 3] += 0.05 * (trial + 1) * (1.0 - r2) * (1.0 - r2);
    }
    min_gain = std::min(min_gain, dirichlet_energy(p) - e0);
  }
  const bool ok = err <= 5.0 * h * h && mv <= mv_tol && min_gain >= 0.0;
  return {ok, "max error " + fmt("%.3g", err) + " (limit " + fmt("%.3g", 5.0 * h * h) + "), mean-value error " +
                  fmt("%.3g", mv) + " (limit " + fmt("%.3g", mv_tol) + "), min energy gain " +
                  fmt("%.3g", min_gain)};
}

Outcome one_sided() {
  const PreparedExperiment p = load("cap_one_sided");
  const ExperimentResult r = execute_experiment(p, 1, nullptr);
  const OneSidedReport rep = one_sided_monitor(r.trajectory);
  double min_last = 1e300;
  for (const WTrackRow& row : rep.track) min_last = std::min(min_last, row.min_last_component);
  const SmallEnergySpec& se = *p.config.diagnostics.small_energy;
  const SmallEnergyCertificate cert = small_energy_certificate(r.trajectory, se.t0, se.x0, se.eps0, se.radii);
  const bool ok = r.trajectory.end_time() >= 0.5 && min_last >= 0.25 && rep.pass && cert.pass;
  return {ok, "min u^{D+1} = " + fmt("%.4f", min_last) + ", W band " + (rep.pass ? "held" : "broken") +
                  " (band " + fmt("%.3g", rep.band) + "), certificate r* = " + fmt("%.4g", cert.r_star)};
}

Outcome monotonicity() {
  const PreparedExperiment p = load("cap_disc");
  SolverConfig c = p.config.solver;
  c.dt = p.dt;
  const Trajectory traj = run_flow(p.u0, c, p.config.schedule);
  std::size_t zero = 0;
  for (const MonotonicityPair& pair : p.config.diagnostics.monotonicity) {
    const MonotonicityReport r =
        monotonicity_report(traj, pair.t0, pair.x0, pair.R1, pair.R2, p.config.diagnostics.monotonicity_form);
    if (r.defect == 0.0) ++zero;
  }

  const Trajectory constant = make_static_trajectory(generate(InitialData{}, p.grid, 2), {0.0, 0.25, 0.5});
  bool zeros = true;
  for (MonotonicityForm form : {MonotonicityForm::Main1, MonotonicityForm::Mon}) {
    const MonotonicityReport r = monotonicity_report(constant, 0.5, Point{0.0, 0.0}, 0.1, 0.2, form);
    zeros = zeros && r.annulus_R1 == 0.0 && r.annulus_R2 == 0.0 && r.speed_term == 0.0 && r.lhs == 0.0 &&
            r.defect == 0.0;
  }
  return {zero >= 3 && zeros, std::to_string(zero) + "/" + std::to_string(p.config.diagnostics.monotonicity.size()) +
                                  " cap pairs with zero defect; constant-trajectory terms " +
                                  (zeros ? "all zero" : "NONZERO")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("sphereflow_acceptance_" + std::to_string(::getpid()));
  std::size_t configs = 0, csvs = 0, mismatched = 0, failed = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    ++configs;
    const std::string name = entry.path().stem().string();
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    const RunOutcome ra = run_experiment(entry.path(), std::optional<fs::path>(a), 1);
    const RunOutcome rb = run_experiment(entry.path(), std::optional<fs::path>(b), 2);
    if (ra.exit_code != 0 || rb.exit_code != 0) {
      ++failed;
      continue;
    }
    for (const auto& f : fs::recursive_directory_iterator(a)) {
      if (f.path().extension() != ".csv") continue;
      ++csvs;
      if (slurp(f.path()) != slurp(b / fs::relative(f.path(), a))) ++mismatched;
    }
  }
  fs::remove_all(root);
  return {configs > 0 && failed == 0 && mismatched == 0,
          std::to_string(configs) + " configs, " + std::to_string(csvs) + " CSVs compared, " +
              std::to_string(mismatched) + " differ, " + std::to_string(failed) + " runs failed"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "maximum principle", 30.0, maximum_principle},
      {2, "penalty decay", 120.0, penalty_decay},
      {3, "lambda convergence", 120.0, lambda_convergence},
      {4, "hedgehog scaled energy", 60.0, hedgehog_energy},
      {5, "singular detector", 120.0, singular_detector},
      {6, "kernel and weights", 0.0, kernel_and_weights},
      {7, "harmonic extension", 0.0, harmonic_extension},
      {8, "one-sided condition", 60.0, one_sided},
      {9, "monotonicity fits", 0.0, monotonicity},
      {10, "determinism", 0.0, determinism},
  };
  int failures = 0;
  double sweep_time = 0.0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // criteria 2 and 3 share one sweep; charge it to both
    if (c.id == 2) sweep_time = secs;
    if (c.id == 3) secs += sweep_time;
    const bool in_time = c.budget_s == 0.0 || secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %2d  %-24s %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "sphereflow/errors.hpp"
#include "sphereflow/experiment.hpp"
#include "sphereflow/io.hpp"

using namespace sphereflow;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sphereflow_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_config() {
  return json::parse(R"({
    "name": "small",
    "domain": {"kind": "unit-ball", "d": 2},
    "h": 0.0625,
    "target_dim": 2,
    "initial": {"kind": "cap", "angle_deg": 60.0},
    "solver": {"mode": "glhf-simplified", "lambda": 100.0, "T": 0.1, "dt": "auto", "output_stride": 10},
    "diagnostics": {
      "cylinders": [{"t0": 0.05, "x0": [0.0, 0.0], "R": 0.125}],
      "monotonicity": [{"t0": 0.1, "x0": [0.0, 0.0], "R1": 0.125, "R2": 0.15}],
      "one_sided": true,
      "singular": {"eps0": 1.0, "space_stride": 2, "deltas": [0.5, 0.25, 0.125]},
      "reverse_poincare": [{"t0": 0.05, "x0": [0.0, 0.0], "R": 0.125}],
      "main2": {"t0": 0.1, "x0": [0.0, 0.0], "R0": 0.1},
      "small_energy": {"t0": 0.05, "x0": [0.0, 0.0]},
      "compare_projected": true
    }
  })");
}

}  // namespace

TEST_CASE("number formatting and CSV") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(1.0) == "1");

  CsvTable t({"a", "b,c"});
  t.add_row() << 1.5 << "x\"y";
  t.add_row() << std::size_t{3} << "plain";
  CHECK(t.str() == "a,\"b,c\"\n1.5,\"x\"\"y\"\n3,plain\n");

  CsvTable bad({"a", "b"});
  bad.add_row() << 1.0;
  CHECK_THROWS_AS(bad.str(), Error);
}

TEST_CASE("snapshot files and checksums") {
  const fs::path dir = scratch("snap");
  InitialData r;
  r.kind = InitialDataKind::Random;
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.125);
  const SphereField u = generate(r, g, 2);
  write_snapshot(dir / "u.bin", u, {{"D", 2}, {"t", 0.0}});
  CHECK(fs::file_size(dir / "u.bin") == u.values().size() * 8);
  CHECK(read_snapshot(dir / "u.bin", g) == u);
  // little-endian layout, node-major
  const std::string bytes = slurp(dir / "u.bin");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + b])) << (8 * b);
  CHECK(std::bit_cast<double>(bits) == u.at(0)[1]);
  CHECK_THROWS_AS(read_snapshot(dir / "u.bin", build_grid(Domain::unit_ball(2), 1.0 / 16.0)), Error);

  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream(dir / "empty.txt", std::ios::binary).close();
  CHECK(sha256_file(dir / "empty.txt") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config validation") {
  SUBCASE("well-formed config") {
    const ExperimentConfig c = ExperimentConfig::from_json(small_config());
    CHECK(c.solver.mode == FlowMode::GlhfSimplified);
    CHECK(c.schedule.lambda == 100.0);
    CHECK(c.diagnostics.harmonic);
    CHECK(c.diagnostics.singular.has_value());
    const PreparedExperiment p = prepare_experiment(c);
    CHECK(p.dt == doctest::Approx(0.9 * 0.0625 * 0.0625 / 4.0));
  }
  SUBCASE("unknown keys and bad values are config errors") {
    for (const char* patch : {R"({"solver": {"lamda": 10}})", R"({"colour": 1})", R"({"solver": {"mode": "heat"}})",
                              R"({"solver": {"dt": "fast"}})", R"({"domain": {"kind": "torus"}})"}) {
      json c = small_config();
      c.merge_patch(json::parse(patch));
      const RunOutcome o = run_experiment(c, scratch("bad"));
      CHECK(o.exit_code == kExitConfig);
      CHECK(o.document["error"] == "InvalidConfig");
      CHECK(o.document["phase"] == "validation");
    }
  }
  SUBCASE("dt above the stability bound names the bound") {
    json c = small_config();
    c["solver"]["dt"] = 0.01;
    const fs::path out = scratch("cfl");
    const RunOutcome o = run_experiment(c, out);
    CHECK(o.exit_code == kExitConfig);
    CHECK(o.document["error"] == "CFLViolated");
    CHECK(o.document["message"].get<std::string>().find("h^2/(2d)") != std::string::npos);
    CHECK(read_json(out / "error.json") == o.document);
  }
  SUBCASE("solver failure is a runtime error") {
    json c = small_config();
    c["solver"]["lambda"] = 1e9;
    c["solver"]["penalty_integration"] = "explicit";
    c["initial"] = {{"kind", "random"}};
    const RunOutcome o = run_experiment(c, scratch("blowup"));
    CHECK(o.exit_code == kExitRuntime);
    CHECK(o.document["error"] == "NormBlowup");
  }
}

TEST_CASE("experiment artifacts") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const RunOutcome ra = run_experiment(small_config(), a, 2);
  REQUIRE(ra.exit_code == kExitOk);
  const RunOutcome rb = run_experiment(small_config(), b, 1);
  REQUIRE(rb.exit_code == kExitOk);

  const json manifest = read_json(a / "manifest.json");
  std::set<std::string> listed;
  for (const json& e : manifest["artifacts"]) {
    const std::string rel = e["path"];
    listed.insert(rel);
    CHECK(e["sha256"] == sha256_file(a / rel));
    CHECK(e["bytes"].get<std::uintmax_t>() == fs::file_size(a / rel));
  }
  // every written file is listed
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), a).generic_string();
    if (rel != "manifest.json") CHECK_MESSAGE(listed.count(rel) == 1, rel);
  }
  for (const char* f : {"trajectory.csv", "energy.csv", "cylinders.csv", "monotonicity.csv", "wtrack.csv",
                        "boxcount.csv", "h0.bin", "singular.json", "one_sided.json", "summary.json"}) {
    CHECK_MESSAGE(listed.count(f) == 1, f);
  }

  // reruns, with a different thread count, are byte-identical
  for (const std::string& rel : listed) CHECK_MESSAGE(slurp(a / rel) == slurp(b / rel), rel);

  const std::string header = slurp(a / "trajectory.csv").substr(0, 62);
  CHECK(header.rfind("step,t,gl_energy,dirichlet_energy,penalty_increment,max_norm", 0) == 0);

  // the sidecar carries the grid and time
  const json side = read_json(a / "snapshots/snap_000000.json");
  CHECK(side["D"] == 2);
  CHECK(side["t"] == 0.0);
  CHECK(side["grid"]["h"] == 0.0625);
  CHECK(read_json(a / "h0.json")["tag"] == "h0");
}

TEST_CASE("diagnostics leave the trajectory untouched") {
  const PreparedExperiment p = prepare_experiment(ExperimentConfig::from_json(small_config()));
  const ExperimentResult r = execute_experiment(p, 1, nullptr);
  std::vector<std::vector<double>> before;
  for (const Snapshot& s : r.trajectory.snapshots) {
    const auto v = s.field.values();
    before.emplace_back(v.begin(), v.end());
  }
  SingularConfig sc;
  sc.space_stride = 2;
  detect_singular_set(r.trajectory, sc, 2);
  monotonicity_report(r.trajectory, 0.1, Point{0.0, 0.0}, 0.125, 0.15);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const auto v = r.trajectory.snapshots[i].field.values();
    CHECK(std::equal(v.begin(), v.end(), before[i].begin(), before[i].end()));
  }
}

TEST_CASE("sweeps") {
  SUBCASE("lambda sweep on cap data") {
    json c = small_config();
    c["diagnostics"] = json::object();
    const fs::path out = scratch("sweep_lambda");
    const RunOutcome o = sweep(c, "lambda", {1e2, 1e3, 1e4}, out);
    REQUIRE(o.exit_code == kExitOk);
    const json rows = o.document["rows"];
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i]["distance_to_projected"].get<double>() <= rows[i - 1]["distance_to_projected"].get<double>());
      CHECK(rows[i]["penalty_integral"].get<double>() < rows[i - 1]["penalty_integral"].get<double>());
    }
    const std::string csv = slurp(out / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }
  SUBCASE("invalid sweeps") {
    CHECK(sweep(small_config(), "lambda", {}, scratch("sweep_empty")).exit_code == kExitConfig);
    CHECK(sweep(small_config(), "T", {1.0}, scratch("sweep_param")).exit_code == kExitConfig);
    CHECK(sweep(small_config(), "dt", {1.0}, scratch("sweep_dt")).exit_code == kExitConfig);
  }
  SUBCASE("h sweep on the hedgehog keeps the scaled energy near 8 pi") {
    const json c = json::parse(R"({
      "name": "hh",
      "domain": {"kind": "unit-ball", "d": 3},
      "target_dim": 2,
      "initial": {"kind": "equator-hedgehog"},
      "solver": {"mode": "projected", "T": 0.125, "output_stride": 100},
      "snapshots": "none",
      "diagnostics": {"probe": {"t0": 0.0625, "x0": [0.0, 0.0, 0.0], "R": 0.25}, "probe_mode": "dirichlet"}
    })");
    const RunOutcome o = sweep(c, "h", {1.0 / 16.0, 1.0 / 32.0}, scratch("sweep_h"));
    REQUIRE(o.exit_code == kExitOk);
    for (const json& row : o.document["rows"]) {
      CHECK(row["probe_scaled_energy"].get<double>() == doctest::Approx(8.0 * M_PI).epsilon(0.15));
    }
  }
}

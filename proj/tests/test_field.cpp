#include <cmath>

#include "doctest.h"
#include "sphereflow/errors.hpp"
#include "sphereflow/field.hpp"

using namespace sphereflow;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::size_t node_at(const Grid& g, std::vector<std::int64_t> lattice) {
  const std::int64_t k = g.find(lattice);
  REQUIRE(k >= 0);
  return static_cast<std::size_t>(k);
}

}  // namespace

TEST_CASE("constant initial data") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.125);
  SphereField f = generate(InitialData{}, g, 2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    CHECK(f.at(k)[0] == 0.0);
    CHECK(f.at(k)[1] == 0.0);
    CHECK(f.at(k)[2] == 1.0);
  }
  CHECK(dirichlet_energy(f) == 0.0);

  InitialData tilted;
  tilted.value = {3.0, 0.0, 4.0};
  f = generate(tilted, g, 2);
  CHECK(f.at(0)[0] == doctest::Approx(0.6));
  CHECK(f.at(0)[2] == doctest::Approx(0.8));
}

TEST_CASE("cap initial data") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.125);
  InitialData cap;
  cap.kind = InitialDataKind::Cap;
  cap.angle_deg = 60.0;
  const SphereField f = generate(cap, g, 2);
  const std::size_t origin = node_at(*g, {0, 0});
  CHECK(f.at(origin)[2] == 1.0);
  const std::size_t half = node_at(*g, {4, 0});  // x = (0.5, 0)
  CHECK(f.at(half)[0] == doctest::Approx(std::sin(M_PI / 6.0)));
  CHECK(f.at(half)[1] == doctest::Approx(0.0));
  CHECK(f.at(half)[2] == doctest::Approx(std::cos(M_PI / 6.0)));
  double min_last = 1.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    CHECK(f.norm(k) == doctest::Approx(1.0).epsilon(1e-14));
    min_last = std::min(min_last, f.at(k)[2]);
  }
  CHECK(min_last == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("equator-hedgehog initial data") {
  const GridPtr g = build_grid(Domain::unit_ball(3), 0.125);
  InitialData hh;
  hh.kind = InitialDataKind::EquatorHedgehog;
  const SphereField f = generate(hh, g, 2);
  const std::size_t k = node_at(*g, {4, 0, 0});
  CHECK(f.at(k)[0] == 1.0);
  CHECK(f.at(k)[1] == 0.0);
  CHECK(f.at(k)[2] == 0.0);
  const std::size_t origin = node_at(*g, {0, 0, 0});
  CHECK(f.at(origin)[0] == 1.0);

  hh.center_value = {0.0, 0.0, 1.0};
  CHECK(generate(hh, g, 2).at(origin)[2] == 1.0);

  CHECK(code_of([&] { generate(hh, g, 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("boundary nodes take the value at the nearest boundary point") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.1);
  InitialData hh;
  hh.kind = InitialDataKind::EquatorHedgehog;
  const SphereField f = generate(hh, g, 1);
  for (std::size_t k : g->boundary_nodes()) {
    const Point p = g->domain().nearest_boundary_point(g->position(k));
    CHECK(f.at(k)[0] == doctest::Approx(p[0]));
    CHECK(f.at(k)[1] == doctest::Approx(p[1]));
  }
}

TEST_CASE("random initial data is reproducible and unit length") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.1);
  InitialData r;
  r.kind = InitialDataKind::Random;
  r.seed = 7;
  const SphereField a = generate(r, g, 2);
  const SphereField b = generate(r, g, 2);
  CHECK(a == b);
  r.seed = 8;
  CHECK_FALSE(a == generate(r, g, 2));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.norm(k) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("projection onto the sphere") {
  const GridPtr g = build_grid(Domain::box({0.0, 0.0}, {1.0, 1.0}), 0.125);
  SphereField f(g, 2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f.at(k)[0] = 3.0;
    f.at(k)[1] = 4.0;
    f.at(k)[2] = 0.0;
  }
  const SphereField p = project_to_sphere(f);
  CHECK(p.at(0)[0] == doctest::Approx(0.6));
  CHECK(p.at(0)[1] == doctest::Approx(0.8));
  CHECK(p.at(0)[2] == 0.0);

  f.at(3)[0] = 0.0;
  f.at(3)[1] = 0.0;
  CHECK(code_of([&] { project_to_sphere(f); }) == ErrorCode::NearZeroVector);
}

TEST_CASE("Dirichlet energy of linear data matches |A|^2 vol") {
  // u(x) = A x + b on the interior links of a box: each link quotient is exact.
  const GridPtr g = build_grid(Domain::box({0.0, 0.0}, {1.0, 1.0}), 0.0625);
  SphereField f(g, 2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Point x = g->position(k);
    f.at(k)[0] = 0.3 * x[0];
    f.at(k)[1] = -0.2 * x[1];
    f.at(k)[2] = 1.0;
  }
  // oracle: count links with an interior endpoint along each axis
  double expected = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    for (int a = 0; a < 2; ++a) {
      const std::int64_t j = g->neighbor(k, a, +1);
      if (j < 0) continue;
      if (!g->is_interior(k) && !g->is_interior(static_cast<std::size_t>(j))) continue;
      expected += (a == 0 ? 0.09 : 0.04) * g->cell_volume();
    }
  }
  CHECK(dirichlet_energy(f) == doctest::Approx(expected).epsilon(1e-12));
  // 15 interior rows, 16 links each, per axis
  CHECK(expected == doctest::Approx(0.13 * 15 * 16 * 0.0625 * 0.0625));
}

TEST_CASE("energy is invariant under a rotation of the target") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.0625);
  InitialData cap;
  cap.kind = InitialDataKind::Cap;
  const SphereField f = generate(cap, g, 2);
  SphereField r = f;
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto u = f.at(k);
    r.at(k)[0] = c * u[0] - s * u[2];
    r.at(k)[2] = s * u[0] + c * u[2];
  }
  CHECK(dirichlet_energy(r) == doctest::Approx(dirichlet_energy(f)).epsilon(1e-12));
}

TEST_CASE("hedgehog Dirichlet energy on the unit ball approaches 8 pi") {
  const GridPtr g = build_grid(Domain::unit_ball(3), 1.0 / 32.0);
  InitialData hh;
  hh.kind = InitialDataKind::EquatorHedgehog;
  const double e = dirichlet_energy(generate(hh, g, 2));
  CAPTURE(e);
  CHECK(std::abs(e - 8.0 * M_PI) <= 0.15 * 8.0 * M_PI);
}

TEST_CASE("gradient density sums to the energy") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.1);
  InitialData r;
  r.kind = InitialDataKind::Random;
  const SphereField f = generate(r, g, 1);
  double s = 0.0;
  for (double v : gradient_density(f)) s += v;
  CHECK(s * g->cell_volume() == doctest::Approx(dirichlet_energy(f)).epsilon(1e-13));
}

TEST_CASE("l2 distance") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.125);
  const SphereField a = generate(InitialData{}, g, 2);
  CHECK(l2_distance(a, a) == 0.0);
  InitialData south;
  south.value = {0.0, 0.0, -1.0};
  const SphereField b = generate(south, g, 2);
  CHECK(l2_distance(a, b) == doctest::Approx(2.0 * std::sqrt(g->size() * g->cell_volume())));

  const GridPtr other = build_grid(Domain::unit_ball(2), 0.1);
  const SphereField c = generate(InitialData{}, other, 2);
  CHECK(code_of([&] { l2_distance(a, c); }) == ErrorCode::GridMismatch);
}

TEST_CASE("nodal gradient of linear data is exact") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 0.125);
  SphereField f(g, 1);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Point x = g->position(k);
    f.at(k)[0] = 2.0 * x[0] - x[1];
    f.at(k)[1] = 0.5 * x[1];
  }
  std::vector<double> grad(4);
  for (std::size_t k = 0; k < f.size(); ++k) {
    nodal_gradient(f, k, grad);
    CHECK(grad[0] == doctest::Approx(2.0));
    CHECK(grad[1] == doctest::Approx(-1.0));
    CHECK(grad[2] == doctest::Approx(0.0));
    CHECK(grad[3] == doctest::Approx(0.5));
  }
}

TEST_CASE("initial data JSON") {
  const InitialData d = InitialData::from_json({{"kind", "cap"}, {"angle_deg", 45.0}});
  CHECK(d.kind == InitialDataKind::Cap);
  CHECK(d.angle_deg == 45.0);
  CHECK(InitialData::from_json(d.to_json()).angle_deg == 45.0);
  CHECK(code_of([] { InitialData::from_json({{"kind", "spiral"}}); }) == ErrorCode::InvalidConfig);
}

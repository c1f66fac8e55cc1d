#include <cmath>
#include <random>

#include "doctest.h"
#include "sphereflow/elliptic.hpp"
#include "sphereflow/errors.hpp"

using namespace sphereflow;

namespace {

HarmonicOptions tight() {
  HarmonicOptions o;
  o.tolerance = 1e-11;
  return o;
}

double max_error(const HarmonicExtension& h0, const std::function<void(const Point&, std::span<double>)>& exact) {
  const Grid& g = h0.field.grid();
  std::vector<double> e(h0.field.components());
  double err = 0.0;
  for (std::size_t k : g.interior_nodes()) {
    exact(g.position(k), e);
    for (int c = 0; c < h0.field.components(); ++c) err = std::max(err, std::abs(h0.field.at(k)[c] - e[c]));
  }
  return err;
}

// exp(x) (cos y, sin y) is harmonic in both components
void exp_harmonic(std::span<const double> x, std::span<double> out) {
  out[0] = std::exp(x[0]) * std::cos(x[1]);
  out[1] = std::exp(x[0]) * std::sin(x[1]);
  out[2] = 0.0;
}

}  // namespace

TEST_CASE("constant boundary data extends to the same constant") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 16.0);
  SphereField data(g, 2);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data.at(k)[0] = 0.6;
    data.at(k)[2] = -0.8;
  }
  const HarmonicExtension h0 = solve_harmonic_extension(data);
  for (std::size_t k = 0; k < h0.field.size(); ++k) {
    CHECK(h0.field.at(k)[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(h0.field.at(k)[1] == 0.0);
    CHECK(h0.field.at(k)[2] == doctest::Approx(-0.8).epsilon(1e-14));
  }
  CHECK(h0.iterations == 0);
}

TEST_CASE("first harmonic on the disc is reproduced to O(h^2)") {
  for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
    const GridPtr g = build_grid(Domain::unit_ball(2), h);
    const auto circle = [](std::span<const double> x, std::span<double> out) {
      const double th = std::atan2(x[1], x[0]);
      out[0] = std::cos(th);
      out[1] = std::sin(th);
      out[2] = 0.0;
    };
    const HarmonicExtension h0 = solve_harmonic_extension(g, 2, circle, tight());
    const double err = max_error(h0, [](const Point& x, std::span<double> e) {
      e[0] = x[0];
      e[1] = x[1];
      e[2] = 0.0;
    });
    CAPTURE(h);
    CHECK(err <= 5.0 * h * h);
    CHECK(h0.residual <= 1e-11);
  }
}

TEST_CASE("curved-boundary stencil converges at second order") {
  double previous = 0.0;
  for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    const GridPtr g = build_grid(Domain::unit_ball(2), h);
    const HarmonicExtension h0 = solve_harmonic_extension(g, 2, exp_harmonic, tight());
    const double err = max_error(h0, [](const Point& x, std::span<double> e) { exp_harmonic(x, e); });
    CAPTURE(h);
    CAPTURE(err);
    CHECK(err <= 5.0 * h * h);
    if (previous > 0.0) CHECK(previous / err >= 2.5);
    previous = err;
  }
}

TEST_CASE("centre value equals the boundary mean") {
  // boundary data (x^4, y^2, xy): circle means 3/8, 1/2, 0
  const double h = 1.0 / 32.0;
  const GridPtr g = build_grid(Domain::unit_ball(2), h);
  const auto data = [](std::span<const double> x, std::span<double> out) {
    out[0] = std::pow(x[0], 4);
    out[1] = x[1] * x[1];
    out[2] = x[0] * x[1];
  };
  const HarmonicExtension h0 = solve_harmonic_extension(g, 2, data, tight());
  const auto c = h0.field.at(static_cast<std::size_t>(g->find(std::vector<std::int64_t>{0, 0})));
  const double slack = 1e-6 + 5.0 * h * h;
  CHECK(std::abs(c[0] - 0.375) <= slack);
  CHECK(std::abs(c[1] - 0.5) <= slack);
  CHECK(std::abs(c[2]) <= slack);
}

TEST_CASE("componentwise maximum principle for node boundary data") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 16.0);
  InitialData r;
  r.kind = InitialDataKind::Random;
  r.seed = 3;
  const SphereField data = generate(r, g, 2);
  const HarmonicExtension h0 = solve_harmonic_extension(data);
  for (int c = 0; c < 3; ++c) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t k : g->boundary_nodes()) {
      lo = std::min(lo, data.at(k)[c]);
      hi = std::max(hi, data.at(k)[c]);
    }
    for (std::size_t k : g->interior_nodes()) {
      CHECK(h0.field.at(k)[c] >= lo - 1e-10);
      CHECK(h0.field.at(k)[c] <= hi + 1e-10);
    }
  }
  // boundary nodes are untouched
  for (std::size_t k : g->boundary_nodes()) {
    for (int c = 0; c < 3; ++c) CHECK(h0.field.at(k)[c] == data.at(k)[c]);
  }
}

TEST_CASE("harmonic extension minimizes the Dirichlet energy") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 32.0);
  const auto circle = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0];
    out[1] = x[1];
    out[2] = 0.0;
  };
  const HarmonicExtension h0 = solve_harmonic_extension(g, 2, circle, tight());
  const double e0 = dirichlet_energy(h0.field);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-0.4, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const Point c = {uni(rng), uni(rng)};
    const double amp = 0.05 * (trial + 1);
    SphereField p = h0.field;
    for (std::size_t k : g->interior_nodes()) {
      const Point x = g->position(k);
      const double r2 = ((x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1])) / 0.09;
      if (r2 < 1.0) p.at(k)[trial % 3] += amp * (1.0 - r2) * (1.0 - r2);
    }
    CHECK(dirichlet_energy(p) - e0 >= -1e-10);
  }
}

TEST_CASE("higher-derivative energies") {
  SUBCASE("constant field") {
    const GridPtr g = build_grid(Domain::unit_ball(3), 1.0 / 8.0);
    const SphereField f = generate(InitialData{}, g, 2);
    for (int m : {1, 2, 3}) CHECK(higher_derivative_energy(f, m) == 0.0);
  }
  SUBCASE("affine data on a box has no second derivatives") {
    const GridPtr g = build_grid(Domain::box({0.0, 0.0}, {1.0, 1.0}), 1.0 / 16.0);
    const auto affine = [](std::span<const double> x, std::span<double> out) {
      out[0] = 0.3 + 2.0 * x[0] - x[1];
      out[1] = -0.5 * x[1];
      out[2] = 1.0;
    };
    const HarmonicExtension h0 = solve_harmonic_extension(g, 2, affine, tight());
    CHECK(higher_derivative_energy(h0, 2) <= 1e-10);
  }
  SUBCASE("first-harmonic extension has gradient energy 2 pi") {
    const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 32.0);
    const auto lin = [](std::span<const double> x, std::span<double> out) {
      out[0] = x[0];
      out[1] = x[1];
      out[2] = 0.0;
    };
    const HarmonicExtension h0 = solve_harmonic_extension(g, 2, lin, tight());
    CHECK(higher_derivative_energy(h0, 1) == doctest::Approx(2.0 * M_PI).epsilon(0.10));
  }
  SUBCASE("quadratic data has the exact second-derivative energy") {
    // u = x^2 - y^2: u_xx = 2, u_yy = -2 -> |grad^2 u|^2 = 8 at every admissible node
    const GridPtr g = build_grid(Domain::box({0.0, 0.0}, {1.0, 1.0}), 1.0 / 16.0);
    SphereField f(g, 1);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const Point x = g->position(k);
      f.at(k)[0] = x[0] * x[0] - x[1] * x[1];
    }
    const double n = static_cast<double>(admissible_nodes(*g, 2).size());
    // lattice 2..14 per axis, minus the four nodes whose stencil reaches a corner
    CHECK(n == 13.0 * 13.0 - 4.0);
    CHECK(higher_derivative_energy(f, 2) == doctest::Approx(8.0 * n * g->cell_volume()));
  }
  SUBCASE("order larger than the grid") {
    const GridPtr g = build_grid(Domain::box({0.0, 0.0}, {1.0, 1.0}), 1.0 / 8.0);
    const SphereField f = generate(InitialData{}, g, 2);
    try {
      higher_derivative_energy(f, 5);
      FAIL("expected OrderTooHighForGrid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OrderTooHighForGrid);
    }
  }
  CHECK(hybrid_derivative_order(2) == 2);
  CHECK(hybrid_derivative_order(3) == 3);
}

TEST_CASE("non-convergence is reported") {
  const GridPtr g = build_grid(Domain::unit_ball(2), 1.0 / 16.0);
  HarmonicOptions o;
  o.max_sweeps = 3;
  try {
    solve_harmonic_extension(g, 2, exp_harmonic, o);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

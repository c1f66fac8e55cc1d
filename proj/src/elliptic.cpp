#include "sphereflow/elliptic.hpp"

#include <cmath>
#include <limits>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

// One row of the discrete Laplace equation at an interior node, normalized so
// that the weights sum to one: u_k = sum w_j u_j + sum w_b g_b.
struct StencilRow {
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
  std::vector<double> fixed;  // sum w_b g_b per component
};

HarmonicExtension relax(SphereField field, const std::vector<std::size_t>& unknowns,
                        const std::vector<StencilRow>& rows, const HarmonicOptions& options) {
  require(options.tolerance > 0.0, ErrorCode::InvalidArgument, "harmonic extension tolerance must be positive");
  require(options.damping > 0.0 && options.damping <= 1.0, ErrorCode::InvalidArgument,
          "Jacobi damping must lie in (0, 1]");
  const int comps = field.components();
  std::vector<double>& u = field.data();
  std::vector<double> next(unknowns.size() * static_cast<std::size_t>(comps));

  double residual = 0.0;
  std::size_t sweep = 0;
  while (true) {
    residual = 0.0;
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
      const StencilRow& row = rows[i];
      const std::size_t k = unknowns[i];
      for (int c = 0; c < comps; ++c) {
        double target = row.fixed[c];
        for (std::size_t j = 0; j < row.nodes.size(); ++j) {
          target += row.weights[j] * u[row.nodes[j] * comps + c];
        }
        const double current = u[k * comps + c];
        residual = std::max(residual, std::abs(target - current));
        next[i * comps + c] = current + options.damping * (target - current);
      }
    }
    if (residual <= options.tolerance) break;
    if (sweep >= options.max_sweeps) {
      fail(ErrorCode::NoConvergence, "harmonic extension did not converge in " + std::to_string(sweep) +
                                         " sweeps (residual " + std::to_string(residual) + ")");
    }
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
      for (int c = 0; c < comps; ++c) u[unknowns[i] * comps + c] = next[i * comps + c];
    }
    ++sweep;
  }
  return HarmonicExtension{std::move(field), residual, sweep};
}

void fill_interior_with_boundary_mean(SphereField& field) {
  const Grid& g = field.grid();
  const int comps = field.components();
  std::vector<double> mean(comps, 0.0);
  for (std::size_t k : g.boundary_nodes()) {
    for (int c = 0; c < comps; ++c) mean[c] += field.at(k)[c];
  }
  if (g.boundary_count() > 0) {
    for (double& m : mean) m /= static_cast<double>(g.boundary_count());
  }
  for (std::size_t k : g.interior_nodes()) {
    std::copy(mean.begin(), mean.end(), field.at(k).begin());
  }
}

}  // namespace

HarmonicExtension solve_harmonic_extension(const SphereField& boundary_data, const HarmonicOptions& options) {
  const Grid& g = boundary_data.grid();
  const int d = g.dim();
  const int comps = boundary_data.components();
  SphereField field = boundary_data;
  fill_interior_with_boundary_mean(field);

  std::vector<std::size_t> unknowns(g.interior_nodes().begin(), g.interior_nodes().end());
  std::vector<StencilRow> rows(unknowns.size());
  for (std::size_t i = 0; i < unknowns.size(); ++i) {
    StencilRow& row = rows[i];
    row.fixed.assign(comps, 0.0);
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        row.nodes.push_back(static_cast<std::size_t>(g.neighbor(unknowns[i], a, s)));
        row.weights.push_back(1.0 / (2.0 * d));
      }
    }
  }
  return relax(std::move(field), unknowns, rows, options);
}

HarmonicExtension solve_harmonic_extension(GridPtr grid, int target_dim, const BoundaryFunction& bf,
                                           const HarmonicOptions& options) {
  const Grid& g = *grid;
  const Domain& dom = g.domain();
  const int d = g.dim();
  const double h = g.spacing();
  SphereField field(grid, target_dim);
  const int comps = field.components();

  Point x(d);
  for (std::size_t k : g.boundary_nodes()) {
    g.position(k, x);
    bf(dom.nearest_boundary_point(x), field.at(k));
  }
  fill_interior_with_boundary_mean(field);

  std::vector<std::size_t> unknowns(g.interior_nodes().begin(), g.interior_nodes().end());
  std::vector<StencilRow> rows(unknowns.size());
  std::vector<double> gval(comps);
  Point crossing(d);
  for (std::size_t i = 0; i < unknowns.size(); ++i) {
    const std::size_t k = unknowns[i];
    g.position(k, x);
    StencilRow& row = rows[i];
    row.fixed.assign(comps, 0.0);
    std::vector<double> fixed_raw(comps, 0.0);
    double diag = 0.0;
    for (int a = 0; a < d; ++a) {
      double eta[2] = {1.0, 1.0};
      for (int side = 0; side < 2; ++side) {
        const int s = side == 0 ? -1 : 1;
        const auto j = static_cast<std::size_t>(g.neighbor(k, a, s));
        if (!g.is_interior(j)) eta[side] = dom.boundary_crossing(x, a, s, h);
      }
      for (int side = 0; side < 2; ++side) {
        const int s = side == 0 ? -1 : 1;
        // (u_j - u_k) / eta_side, scaled by 2/(eta_- + eta_+), in units of 1/h^2
        const double w = 2.0 / (eta[side] * (eta[0] + eta[1]));
        diag += w;
        const auto j = static_cast<std::size_t>(g.neighbor(k, a, s));
        if (g.is_interior(j)) {
          row.nodes.push_back(j);
          row.weights.push_back(w);
        } else {
          crossing = x;
          crossing[a] += s * eta[side] * h;
          bf(crossing, gval);
          for (int c = 0; c < comps; ++c) fixed_raw[c] += w * gval[c];
        }
      }
    }
    for (double& w : row.weights) w /= diag;
    for (int c = 0; c < comps; ++c) row.fixed[c] = fixed_raw[c] / diag;
  }
  return relax(std::move(field), unknowns, rows, options);
}

BoundaryFunction boundary_function(const InitialData& data, const Domain& domain, int target_dim) {
  require(data.has_point_evaluation(), ErrorCode::InvalidArgument,
          to_string(data.kind) + " initial data has no boundary function");
  return [data, domain, target_dim](std::span<const double> x, std::span<double> out) {
    data.evaluate(domain, x, target_dim, out);
  };
}

int hybrid_derivative_order(int d) { return (d + 1) / 2 + 1; }

std::vector<std::size_t> admissible_nodes(const Grid& g, int order) {
  const int d = g.dim();
  std::vector<std::size_t> out;
  std::vector<std::int64_t> probe(d), offset(d);
  for (std::size_t k : g.interior_nodes()) {
    const auto base = g.lattice_coords(k);
    std::fill(offset.begin(), offset.end(), -order);
    bool ok = true;
    while (ok) {
      for (int a = 0; a < d; ++a) probe[a] = base[a] + offset[a];
      if (g.find(probe) < 0) ok = false;
      int a = d - 1;
      while (a >= 0 && ++offset[a] > order) offset[a--] = -order;
      if (a < 0) break;
    }
    if (ok) out.push_back(k);
  }
  return out;
}

std::vector<double> higher_derivative_density(const SphereField& field, int order) {
  const Grid& g = field.grid();
  const int d = g.dim();
  const int comps = field.components();
  require(order >= 1, ErrorCode::InvalidArgument, "derivative order must be >= 1");
  const std::vector<std::size_t> nodes = admissible_nodes(g, order);
  if (nodes.empty()) {
    fail(ErrorCode::OrderTooHighForGrid,
         "no interior node has a full order-" + std::to_string(order) + " stencil at h=" + std::to_string(g.spacing()));
  }
  const double scale = std::pow(2.0 * g.spacing(), -order);

  // The composition of `order` central differences along axes a_1..a_m is a
  // signed sum over the 2^m sign choices of u(x + sum s_i e_{a_i}).
  std::size_t tuples = 1;
  for (int i = 0; i < order; ++i) tuples *= static_cast<std::size_t>(d);
  std::vector<int> axes(order);
  std::vector<std::int64_t> probe(d);
  std::vector<double> partial(comps);
  std::vector<double> density(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k : nodes) {
    const auto base = g.lattice_coords(k);
    double total = 0.0;
    for (std::size_t t = 0; t < tuples; ++t) {
      std::size_t rem = t;
      for (int i = 0; i < order; ++i) {
        axes[i] = static_cast<int>(rem % d);
        rem /= d;
      }
      std::fill(partial.begin(), partial.end(), 0.0);
      for (unsigned mask = 0; mask < (1u << order); ++mask) {
        std::copy(base.begin(), base.end(), probe.begin());
        double sign = 1.0;
        for (int i = 0; i < order; ++i) {
          if (mask & (1u << i)) {
            probe[axes[i]] += 1;
          } else {
            probe[axes[i]] -= 1;
            sign = -sign;
          }
        }
        const auto u = field.at(static_cast<std::size_t>(g.find(probe)));
        for (int c = 0; c < comps; ++c) partial[c] += sign * u[c];
      }
      for (int c = 0; c < comps; ++c) total += partial[c] * scale * partial[c] * scale;
    }
    density[k] = total;
  }
  return density;
}

double higher_derivative_energy(const SphereField& field, int order) {
  double total = 0.0;
  for (double v : higher_derivative_density(field, order)) {
    if (!std::isnan(v)) total += v;
  }
  return total * field.grid().cell_volume();
}

}  // namespace sphereflow

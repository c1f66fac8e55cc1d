#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "sphereflow/field.hpp"

namespace sphereflow {

/// Componentwise harmonic extension of boundary data. Not sphere-valued in
/// general.
struct HarmonicExtension {
  SphereField field;
  double residual = 0.0;  // max Jacobi correction at the last sweep
  std::size_t iterations = 0;
};

struct HarmonicOptions {
  double tolerance = 1e-8;
  std::size_t max_sweeps = 100000;
  double damping = 0.9;
};

using BoundaryFunction = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Boundary values are read from the boundary-class nodes of `boundary_data`
/// (interior entries are ignored); plain 2d+1 point stencil.
HarmonicExtension solve_harmonic_extension(const SphereField& boundary_data,
                                           const HarmonicOptions& options = {});

/// Boundary values come from a function on the boundary. Interior nodes next
/// to the boundary use the Shortley-Weller stencil with the exact crossing
/// point, which keeps the scheme second order on curved boundaries. Boundary
/// nodes store g at their nearest boundary point.
HarmonicExtension solve_harmonic_extension(GridPtr grid, int target_dim, const BoundaryFunction& g,
                                           const HarmonicOptions& options = {});

/// Boundary function of an analytic initial map.
BoundaryFunction boundary_function(const InitialData& data, const Domain& domain, int target_dim);

/// [(d+1)/2] + 1
int hybrid_derivative_order(int d);

/// Sum over admissible interior nodes of |grad^order f|^2 h^d, each partial
/// derivative taken as a composition of central differences. A node is
/// admissible when every lattice point within `order` cells (sup norm) is
/// stored.
double higher_derivative_energy(const SphereField& field, int order);
inline double higher_derivative_energy(const HarmonicExtension& h0, int order) {
  return higher_derivative_energy(h0.field, order);
}

/// Nodes admissible for higher_derivative_energy at the given order.
std::vector<std::size_t> admissible_nodes(const Grid& grid, int order);

/// Node-wise |grad^order f|^2; NaN at nodes that are not admissible.
std::vector<double> higher_derivative_density(const SphereField& field, int order);

}  // namespace sphereflow

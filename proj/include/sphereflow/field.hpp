#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sphereflow/geometry.hpp"

namespace sphereflow {

/// Per-node vectors in R^{D+1} on the stored nodes of a grid. Nominally
/// sphere-valued; the relaxed flow and the harmonic extension also use it for
/// fields off the sphere.
class SphereField {
 public:
  SphereField(GridPtr grid, int target_dim);
  SphereField(GridPtr grid, int target_dim, std::vector<double> values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int target_dim() const { return target_dim_; }
  int components() const { return target_dim_ + 1; }
  std::size_t size() const { return grid_->size(); }

  std::span<double> at(std::size_t k) {
    return {values_.data() + k * static_cast<std::size_t>(components()), static_cast<std::size_t>(components())};
  }
  std::span<const double> at(std::size_t k) const {
    return {values_.data() + k * static_cast<std::size_t>(components()), static_cast<std::size_t>(components())};
  }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

  double norm(std::size_t k) const;
  double max_norm() const;

  bool operator==(const SphereField& other) const = default;

 private:
  GridPtr grid_;
  int target_dim_;
  std::vector<double> values_;
};

enum class InitialDataKind { Constant, Cap, EquatorHedgehog, BoundaryWrap, Random, CustomSamples };

/// Initial map u0. Every analytic kind is a function of the point, so the
/// boundary value at any point of the boundary is available (evaluate()).
///
///  constant       : `value`, normalized
///  cap            : polar angle angle_deg * |z| about the north pole, z the
///                   first min(d, D) coordinates of (x - center)/radius
///  equator-hedgehog: (x - center)/|x - center| padded with zeros;
///                   `center_value` at the center itself
///  boundary-wrap  : inverse stereographic image of scale*y*(1 + bulge*(|y|^2 - 1))
///  random         : iid uniform directions per node from `seed`
///  custom-samples : `samples`, node-major, normalized
struct InitialData {
  InitialDataKind kind = InitialDataKind::Constant;
  std::vector<double> value;         // constant; empty means north pole
  double angle_deg = 60.0;           // cap
  double scale = 1.0;                // boundary-wrap
  double bulge = 0.0;                // boundary-wrap
  std::uint64_t seed = 1;            // random
  std::vector<double> center;        // empty means the domain center
  std::vector<double> center_value;  // hedgehog singular node; empty means e_1
  std::vector<double> samples;       // custom-samples

  static InitialData from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  bool has_point_evaluation() const {
    return kind != InitialDataKind::Random && kind != InitialDataKind::CustomSamples;
  }
  /// Value at an arbitrary point (unit norm). Not available for sampled kinds.
  void evaluate(const Domain& domain, std::span<const double> x, int target_dim, std::span<double> out) const;
};

std::string to_string(InitialDataKind kind);

/// Interior nodes sample u0 at the node; boundary nodes at the nearest
/// boundary point.
SphereField generate(const InitialData& data, GridPtr grid, int target_dim);

SphereField project_to_sphere(const SphereField& field);

/// sqrt(sum |a - b|^2 h^d) over stored nodes.
double l2_distance(const SphereField& a, const SphereField& b);

/// Sum over links with at least one interior endpoint of |du/h|^2 h^d.
double dirichlet_energy(const SphereField& field);

/// Node-wise |grad u|^2: every link's squared difference quotient is split
/// half to each endpoint, so sum(density) * h^d == dirichlet_energy.
std::vector<double> gradient_density(const SphereField& field);

/// Node-wise gradient by central differences (one-sided where a neighbour is
/// missing), layout [component][axis].
void nodal_gradient(const SphereField& field, std::size_t k, std::span<double> out);

void require_same_grid(const SphereField& a, const SphereField& b);

}  // namespace sphereflow

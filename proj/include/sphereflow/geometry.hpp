#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace sphereflow {

using Point = std::vector<double>;

enum class DomainKind { UnitBall, Box, HalfBall, GraphSubdomain };

std::string to_string(DomainKind kind);

/// Boundary written as a graph x_d = phi(x') over a base point, with the domain
/// lying above the graph. The chart is normalized so that phi(x0') = 0 and
/// grad phi(x0') = 0.
struct GraphDescriptor {
  std::string name;
  std::function<double(std::span<const double>)> phi;  // argument is x' (d-1 entries)
  Point base;               // x0' (d-1 entries)
  double half_width = 0.5;  // |x'_i - x0'_i| < half_width
  double height = 1.0;      // x_d < height
  double coefficient = 1.0;
};

GraphDescriptor flat_graph(int d, double half_width = 0.5, double height = 1.0);
GraphDescriptor paraboloid_graph(int d, double coefficient, double half_width = 0.5,
                                 double height = 1.0);
GraphDescriptor sphere_graph(int d, double radius, double half_width = 0.5,
                             double height = 1.0);

class Domain {
 public:
  static Domain unit_ball(int d);
  static Domain box(Point lo, Point hi);
  static Domain half_ball(int d);
  static Domain graph(int d, GraphDescriptor graph);

  static Domain from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double diameter() const { return diameter_; }
  const GraphDescriptor* graph() const { return graph_ ? graph_.get() : nullptr; }

  /// Negative strictly inside, positive strictly outside.
  double level_set(std::span<const double> x) const;
  bool contains(std::span<const double> x) const { return level_set(x) < 0.0; }

  void bounding_box(Point& lo, Point& hi) const;
  Point center() const;

  Point nearest_boundary_point(std::span<const double> x) const;
  /// Outward unit normal at the boundary point nearest to x.
  Point outward_normal(std::span<const double> x) const;

  /// Fraction eta in (0, 1] such that x + sign*eta*h*e_axis lies on the
  /// boundary, for x inside and x + sign*h*e_axis not inside.
  double boundary_crossing(std::span<const double> x, int axis, int sign, double h) const;

 private:
  Domain() = default;

  DomainKind kind_ = DomainKind::UnitBall;
  int dim_ = 2;
  double diameter_ = 2.0;
  Point lo_, hi_;
  std::shared_ptr<const GraphDescriptor> graph_;
  nlohmann::json spec_;
};

enum class NodeClass : std::uint8_t { Interior, Boundary, Exterior };

/// Uniform lattice x = k*h (k integer) over the domain's bounding box, padded
/// by one cell. Interior nodes lie strictly inside the domain; boundary nodes
/// are outside-or-on nodes with an interior axis neighbour; the rest is
/// exterior and not stored.
class Grid {
 public:
  Grid(Domain domain, double h);

  const Domain& domain() const { return domain_; }
  double spacing() const { return h_; }
  int dim() const { return domain_.dim(); }
  double cell_volume() const { return cell_volume_; }

  /// Number of stored (interior + boundary) nodes.
  std::size_t size() const { return node_class_.size(); }
  std::size_t interior_count() const { return interior_.size(); }
  std::size_t boundary_count() const { return boundary_.size(); }
  std::span<const std::size_t> interior_nodes() const { return interior_; }
  std::span<const std::size_t> boundary_nodes() const { return boundary_; }

  NodeClass node_class(std::size_t k) const { return node_class_[k]; }
  bool is_interior(std::size_t k) const { return node_class_[k] == NodeClass::Interior; }

  std::span<const std::int64_t> lattice_coords(std::size_t k) const {
    return {coords_.data() + k * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
  }
  void position(std::size_t k, std::span<double> out) const;
  Point position(std::size_t k) const;

  /// Stored neighbour along +/- axis, or -1.
  std::int64_t neighbor(std::size_t k, int axis, int sign) const {
    return neighbors_[k * 2 * static_cast<std::size_t>(dim()) + 2 * static_cast<std::size_t>(axis) +
                      (sign > 0 ? 1 : 0)];
  }
  /// Stored node at integer lattice coordinates, or -1.
  std::int64_t find(std::span<const std::int64_t> lattice) const;

  /// Classification of an arbitrary lattice point, including exterior ones.
  NodeClass classify(std::span<const std::int64_t> lattice) const;

  /// Visits stored nodes with |x - center| < radius as f(node, position).
  template <class F>
  void for_each_in_ball(std::span<const double> center, double radius, F&& f) const;

 private:
  std::size_t lattice_offset(std::span<const std::int64_t> lattice) const;

  Domain domain_;
  double h_;
  double cell_volume_;
  std::vector<std::int64_t> lo_, extent_;
  std::vector<std::int64_t> lattice_to_node_;
  std::vector<std::uint8_t> lattice_class_;
  std::vector<NodeClass> node_class_;
  std::vector<std::int64_t> coords_;
  std::vector<std::int64_t> neighbors_;
  std::vector<std::size_t> interior_, boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Requires 0 < h <= d0/8.
GridPtr build_grid(const Domain& domain, double h);

struct BoundaryFrame {
  std::vector<std::size_t> nodes;
  std::vector<double> normals;  // nodes.size() * d, outward unit normals
  int dim = 0;

  std::span<const double> normal(std::size_t i) const {
    return {normals.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  /// I - nu nu^T
  Eigen::MatrixXd tangential_projector(std::size_t i) const;
  void project_tangential(std::size_t i, std::span<const double> v, std::span<double> out) const;
};

BoundaryFrame boundary_frame(const Grid& grid);

struct ConditionBReport {
  double theta0 = 0.0;
  bool pass = false;
  std::size_t samples = 0;
  double probe_radius = 0.0;
  double threshold = 0.0;
};

/// Smallest Hessian eigenvalue of the boundary graph chart over sampled base
/// points (finite differences with step probe_radius).
ConditionBReport check_condition_b(const Domain& domain, double probe_radius, double threshold);

// ---------------------------------------------------------------------------

template <class F>
void Grid::for_each_in_ball(std::span<const double> center, double radius, F&& f) const {
  const int d = dim();
  std::vector<std::int64_t> lo(d), hi(d), cur(d);
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max<std::int64_t>(lo_[a], static_cast<std::int64_t>(std::ceil((center[a] - radius) / h_)));
    hi[a] = std::min<std::int64_t>(lo_[a] + extent_[a] - 1,
                                   static_cast<std::int64_t>(std::floor((center[a] + radius) / h_)));
    if (lo[a] > hi[a]) return;
  }
  cur = lo;
  Point x(d);
  const double r2 = radius * radius;
  while (true) {
    double dist2 = 0.0;
    for (int a = 0; a < d; ++a) {
      x[a] = static_cast<double>(cur[a]) * h_;
      dist2 += (x[a] - center[a]) * (x[a] - center[a]);
    }
    if (dist2 < r2) {
      const std::int64_t node = lattice_to_node_[lattice_offset(cur)];
      if (node >= 0) f(static_cast<std::size_t>(node), std::span<const double>(x));
    }
    int a = d - 1;
    while (a >= 0) {
      if (++cur[a] <= hi[a]) break;
      cur[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace sphereflow

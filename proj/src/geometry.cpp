#include "sphereflow/geometry.hpp"

#include <limits>
#include <random>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

constexpr double kChartTolerance = 1e-10;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Point primed(std::span<const double> x) { return Point(x.begin(), x.end() - 1); }

void check_dim(int d) {
  require(d >= 2, ErrorCode::InvalidArgument, "domain dimension must be >= 2, got " + std::to_string(d));
}

// Orthonormal basis of the complement of a unit vector, as columns.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& nu) {
  const auto d = nu.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(nu);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return q.rightCols(d - 1);
}

Eigen::MatrixXd chart_hessian(const std::function<double(const Eigen::VectorXd&)>& phi, int m,
                              double r) {
  Eigen::MatrixXd hess(m, m);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  const double f0 = phi(zero);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Unit(m, i) * r;
    hess(i, i) = (phi(ei) - 2.0 * f0 + phi(-ei)) / (r * r);
    for (int j = i + 1; j < m; ++j) {
      Eigen::VectorXd ej = Eigen::VectorXd::Unit(m, j) * r;
      const double v =
          (phi(ei + ej) - phi(ei - ej) - phi(-ei + ej) + phi(-ei - ej)) / (4.0 * r * r);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<Eigen::VectorXd> sphere_samples(int d) {
  std::vector<Eigen::VectorXd> pts;
  if (d == 2) {
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * i / n;
      Eigen::VectorXd p(2);
      p << std::cos(a), std::sin(a);
      pts.push_back(p);
    }
  } else if (d == 3) {
    const int n = 256;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double rho = std::sqrt(1.0 - z * z);
      Eigen::VectorXd p(3);
      p << rho * std::cos(golden * i), rho * std::sin(golden * i), z;
      pts.push_back(p);
    }
  } else {
    std::mt19937_64 rng(20240917);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 256; ++i) {
      Eigen::VectorXd p(d);
      for (int a = 0; a < d; ++a) p[a] = normal(rng);
      pts.push_back(p.normalized());
    }
  }
  return pts;
}

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::UnitBall: return "unit-ball";
    case DomainKind::Box: return "box";
    case DomainKind::HalfBall: return "half-ball";
    case DomainKind::GraphSubdomain: return "graph-subdomain";
  }
  return "unknown";
}

GraphDescriptor flat_graph(int d, double half_width, double height) {
  GraphDescriptor g;
  g.name = "flat";
  g.phi = [](std::span<const double>) { return 0.0; };
  g.base.assign(d - 1, 0.0);
  g.half_width = half_width;
  g.height = height;
  g.coefficient = 0.0;
  return g;
}

GraphDescriptor paraboloid_graph(int d, double coefficient, double half_width, double height) {
  GraphDescriptor g;
  g.name = "paraboloid";
  g.phi = [coefficient](std::span<const double> xp) {
    double s = 0.0;
    for (double v : xp) s += v * v;
    return coefficient * s;
  };
  g.base.assign(d - 1, 0.0);
  g.half_width = half_width;
  g.height = height;
  g.coefficient = coefficient;
  return g;
}

GraphDescriptor sphere_graph(int d, double radius, double half_width, double height) {
  require(radius > half_width * std::sqrt(static_cast<double>(d - 1)), ErrorCode::InvalidArgument,
          "sphere graph radius must exceed the chart half-diagonal");
  GraphDescriptor g;
  g.name = "sphere";
  g.phi = [radius](std::span<const double> xp) {
    double s = 0.0;
    for (double v : xp) s += v * v;
    return radius - std::sqrt(radius * radius - s);
  };
  g.base.assign(d - 1, 0.0);
  g.half_width = half_width;
  g.height = height;
  g.coefficient = radius;
  return g;
}

Domain Domain::unit_ball(int d) {
  check_dim(d);
  Domain dom;
  dom.kind_ = DomainKind::UnitBall;
  dom.dim_ = d;
  dom.diameter_ = 2.0;
  dom.lo_.assign(d, -1.0);
  dom.hi_.assign(d, 1.0);
  dom.spec_ = {{"kind", "unit-ball"}, {"d", d}};
  return dom;
}

Domain Domain::box(Point lo, Point hi) {
  require(lo.size() == hi.size(), ErrorCode::InvalidArgument, "box corners differ in dimension");
  const int d = static_cast<int>(lo.size());
  check_dim(d);
  double diag = 0.0;
  for (int a = 0; a < d; ++a) {
    require(hi[a] > lo[a], ErrorCode::InvalidArgument, "box must have positive extent on every axis");
    diag += (hi[a] - lo[a]) * (hi[a] - lo[a]);
  }
  Domain dom;
  dom.kind_ = DomainKind::Box;
  dom.dim_ = d;
  dom.diameter_ = std::sqrt(diag);
  dom.lo_ = lo;
  dom.hi_ = hi;
  dom.spec_ = {{"kind", "box"}, {"d", d}, {"lo", lo}, {"hi", hi}};
  return dom;
}

Domain Domain::half_ball(int d) {
  check_dim(d);
  Domain dom;
  dom.kind_ = DomainKind::HalfBall;
  dom.dim_ = d;
  dom.diameter_ = 2.0;
  dom.lo_.assign(d, -1.0);
  dom.hi_.assign(d, 1.0);
  dom.lo_[d - 1] = 0.0;
  dom.spec_ = {{"kind", "half-ball"}, {"d", d}};
  return dom;
}

Domain Domain::graph(int d, GraphDescriptor g) {
  check_dim(d);
  require(static_cast<int>(g.base.size()) == d - 1, ErrorCode::DimensionMismatch,
          "graph base point must have d-1 coordinates");
  require(g.half_width > 0.0 && g.height > 0.0, ErrorCode::InvalidArgument,
          "graph chart needs positive half-width and height");
  const double f0 = g.phi(g.base);
  require(std::abs(f0) <= kChartTolerance, ErrorCode::InvalidArgument,
          "graph chart must satisfy phi(x0') = 0");
  const double step = 1e-5;
  for (int i = 0; i < d - 1; ++i) {
    Point p = g.base, m = g.base;
    p[i] += step;
    m[i] -= step;
    // central difference of a C^2 function at a critical point is O(step^2)
    const double slope = (g.phi(p) - g.phi(m)) / (2.0 * step);
    require(std::abs(slope) <= std::max(kChartTolerance, 10.0 * step * step), ErrorCode::InvalidArgument,
            "graph chart must satisfy grad phi(x0') = 0");
  }
  Domain dom;
  dom.kind_ = DomainKind::GraphSubdomain;
  dom.dim_ = d;
  dom.lo_.resize(d);
  dom.hi_.resize(d);
  double phi_min = 0.0;
  {
    // sample the chart to bound it from below
    const int n = 9;
    std::vector<int> idx(d - 1, 0);
    Point xp(d - 1);
    while (true) {
      for (int i = 0; i < d - 1; ++i) xp[i] = g.base[i] - g.half_width + 2.0 * g.half_width * idx[i] / (n - 1);
      phi_min = std::min(phi_min, g.phi(xp));
      int i = 0;
      while (i < d - 1 && ++idx[i] == n) idx[i++] = 0;
      if (i == d - 1) break;
    }
  }
  double diag = 0.0;
  for (int i = 0; i < d - 1; ++i) {
    dom.lo_[i] = g.base[i] - g.half_width;
    dom.hi_[i] = g.base[i] + g.half_width;
    diag += 4.0 * g.half_width * g.half_width;
  }
  dom.lo_[d - 1] = phi_min;
  dom.hi_[d - 1] = g.height;
  diag += (g.height - phi_min) * (g.height - phi_min);
  dom.diameter_ = std::sqrt(diag);
  dom.spec_ = {{"kind", "graph-subdomain"}, {"d", d},           {"graph", g.name},
               {"coefficient", g.coefficient}, {"half_width", g.half_width}, {"height", g.height}};
  dom.graph_ = std::make_shared<const GraphDescriptor>(std::move(g));
  return dom;
}

Domain Domain::from_json(const nlohmann::json& spec) {
  require(spec.is_object() && spec.contains("kind"), ErrorCode::InvalidConfig,
          "domain spec must be an object with a \"kind\"");
  const std::string kind = spec.at("kind").get<std::string>();
  const int d = spec.value("d", 2);
  if (kind == "unit-ball") return unit_ball(d);
  if (kind == "half-ball") return half_ball(d);
  if (kind == "box") {
    Point lo = spec.contains("lo") ? spec.at("lo").get<Point>() : Point(d, 0.0);
    Point hi = spec.contains("hi") ? spec.at("hi").get<Point>() : Point(d, 1.0);
    return box(lo, hi);
  }
  if (kind == "graph-subdomain") {
    const std::string g = spec.value("graph", std::string("paraboloid"));
    const double hw = spec.value("half_width", 0.5);
    const double height = spec.value("height", 1.0);
    if (g == "flat") return graph(d, flat_graph(d, hw, height));
    if (g == "paraboloid") return graph(d, paraboloid_graph(d, spec.value("coefficient", 1.0), hw, height));
    if (g == "sphere") return graph(d, sphere_graph(d, spec.value("coefficient", 1.0), hw, height));
    fail(ErrorCode::InvalidConfig, "unknown boundary graph \"" + g + "\"");
  }
  fail(ErrorCode::InvalidConfig, "unknown domain kind \"" + kind + "\"");
}

nlohmann::json Domain::to_json() const { return spec_; }

double Domain::level_set(std::span<const double> x) const {
  switch (kind_) {
    case DomainKind::UnitBall:
      return norm(x) - 1.0;
    case DomainKind::Box: {
      double v = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < dim_; ++a) v = std::max({v, lo_[a] - x[a], x[a] - hi_[a]});
      return v;
    }
    case DomainKind::HalfBall:
      return std::max(norm(x) - 1.0, -x[dim_ - 1]);
    case DomainKind::GraphSubdomain: {
      const Point xp = primed(x);
      double v = std::max(graph_->phi(xp) - x[dim_ - 1], x[dim_ - 1] - graph_->height);
      for (int i = 0; i < dim_ - 1; ++i) v = std::max(v, std::abs(x[i] - graph_->base[i]) - graph_->half_width);
      return v;
    }
  }
  return 0.0;
}

void Domain::bounding_box(Point& lo, Point& hi) const {
  lo = lo_;
  hi = hi_;
}

Point Domain::center() const {
  if (kind_ == DomainKind::UnitBall) return Point(dim_, 0.0);
  Point c(dim_);
  for (int a = 0; a < dim_; ++a) c[a] = 0.5 * (lo_[a] + hi_[a]);
  return c;
}

Point Domain::nearest_boundary_point(std::span<const double> x) const {
  const int d = dim_;
  switch (kind_) {
    case DomainKind::UnitBall: {
      const double r = norm(x);
      Point p(d, 0.0);
      if (r == 0.0) {
        p[0] = 1.0;
        return p;
      }
      for (int a = 0; a < d; ++a) p[a] = x[a] / r;
      return p;
    }
    case DomainKind::Box: {
      Point p(x.begin(), x.end());
      if (contains(x)) {
        int best_axis = 0;
        double best = std::numeric_limits<double>::infinity();
        double face = 0.0;
        for (int a = 0; a < d; ++a) {
          if (x[a] - lo_[a] < best) { best = x[a] - lo_[a]; best_axis = a; face = lo_[a]; }
          if (hi_[a] - x[a] < best) { best = hi_[a] - x[a]; best_axis = a; face = hi_[a]; }
        }
        p[best_axis] = face;
      } else {
        for (int a = 0; a < d; ++a) p[a] = std::clamp(x[a], lo_[a], hi_[a]);
      }
      return p;
    }
    case DomainKind::HalfBall: {
      Point xp = primed(x);
      const double rp = norm(xp);
      Point rim(d, 0.0);
      if (rp > 0.0) {
        for (int a = 0; a < d - 1; ++a) rim[a] = xp[a] / rp;
      } else {
        rim[0] = 1.0;
      }
      Point cap = rim;
      const double r = norm(x);
      if (x[d - 1] >= 0.0 && r > 0.0) {
        for (int a = 0; a < d; ++a) cap[a] = x[a] / r;
      }
      Point flat(d, 0.0);
      const double scale = rp > 1.0 ? 1.0 / rp : 1.0;
      for (int a = 0; a < d - 1; ++a) flat[a] = xp[a] * scale;
      return distance(x, cap) <= distance(x, flat) ? cap : flat;
    }
    case DomainKind::GraphSubdomain: {
      const GraphDescriptor& g = *graph_;
      Point xc(x.begin(), x.end());
      for (int i = 0; i < d - 1; ++i) xc[i] = std::clamp(x[i], g.base[i] - g.half_width, g.base[i] + g.half_width);
      std::vector<Point> candidates;
      Point bottom = xc;
      bottom[d - 1] = g.phi(primed(xc));
      candidates.push_back(bottom);
      Point top = xc;
      top[d - 1] = g.height;
      candidates.push_back(top);
      for (int i = 0; i < d - 1; ++i) {
        for (int s : {-1, 1}) {
          Point side = xc;
          side[i] = g.base[i] + s * g.half_width;
          side[d - 1] = std::clamp(x[d - 1], g.phi(primed(side)), g.height);
          candidates.push_back(side);
        }
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < candidates.size(); ++c) {
        if (distance(x, candidates[c]) < distance(x, candidates[best])) best = c;
      }
      return candidates[best];
    }
  }
  return Point(x.begin(), x.end());
}

Point Domain::outward_normal(std::span<const double> x) const {
  const int d = dim_;
  Point n(d, 0.0);
  switch (kind_) {
    case DomainKind::UnitBall:
      return nearest_boundary_point(x);
    case DomainKind::Box: {
      if (contains(x)) {
        const Point p = nearest_boundary_point(x);
        for (int a = 0; a < d; ++a) {
          if (p[a] != x[a]) n[a] = p[a] == lo_[a] ? -1.0 : 1.0;
        }
        return n;
      }
      for (int a = 0; a < d; ++a) {
        if (x[a] <= lo_[a]) n[a] = -1.0;
        else if (x[a] >= hi_[a]) n[a] = 1.0;
      }
      break;
    }
    case DomainKind::HalfBall: {
      const Point p = nearest_boundary_point(x);
      const bool on_flat = std::abs(p[d - 1]) < 1e-14;
      const bool on_sphere = std::abs(norm(p) - 1.0) < 1e-14;
      if (on_sphere) n = p;
      if (on_flat) n[d - 1] -= 1.0;
      break;
    }
    case DomainKind::GraphSubdomain: {
      const GraphDescriptor& g = *graph_;
      const Point p = nearest_boundary_point(x);
      const Point pp = primed(p);
      if (std::abs(p[d - 1] - g.phi(pp)) < 1e-12) {
        const double step = 1e-6;
        for (int i = 0; i < d - 1; ++i) {
          Point a = pp, b = pp;
          a[i] += step;
          b[i] -= step;
          n[i] += (g.phi(a) - g.phi(b)) / (2.0 * step);
        }
        n[d - 1] -= 1.0;
      } else if (std::abs(p[d - 1] - g.height) < 1e-14) {
        n[d - 1] = 1.0;
      } else {
        for (int i = 0; i < d - 1; ++i) {
          if (std::abs(p[i] - (g.base[i] - g.half_width)) < 1e-14) n[i] = -1.0;
          if (std::abs(p[i] - (g.base[i] + g.half_width)) < 1e-14) n[i] = 1.0;
        }
      }
      break;
    }
  }
  const double len = norm(n);
  if (len == 0.0) {
    n.assign(d, 0.0);
    n[d - 1] = 1.0;
    return n;
  }
  for (double& v : n) v /= len;
  return n;
}

double Domain::boundary_crossing(std::span<const double> x, int axis, int sign, double h) const {
  Point y(x.begin(), x.end());
  auto f = [&](double eta) {
    y[axis] = x[axis] + sign * eta * h;
    return level_set(y);
  };
  if (f(1.0) == 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------

Grid::Grid(Domain domain, double h) : domain_(std::move(domain)), h_(h) {
  const int d = domain_.dim();
  cell_volume_ = std::pow(h_, d);
  Point blo, bhi;
  domain_.bounding_box(blo, bhi);
  lo_.resize(d);
  extent_.resize(d);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    const auto first = static_cast<std::int64_t>(std::floor(blo[a] / h_)) - 1;
    const auto last = static_cast<std::int64_t>(std::ceil(bhi[a] / h_)) + 1;
    lo_[a] = first;
    extent_[a] = last - first + 1;
    total *= static_cast<std::size_t>(extent_[a]);
  }

  // inside flags, in lattice order (last axis fastest)
  std::vector<std::uint8_t> inside(total, 0);
  std::vector<std::int64_t> cur(lo_);
  Point x(d);
  for (std::size_t off = 0; off < total; ++off) {
    for (int a = 0; a < d; ++a) x[a] = static_cast<double>(cur[a]) * h_;
    inside[off] = domain_.contains(x) ? 1 : 0;
    for (int a = d - 1; a >= 0; --a) {
      if (++cur[a] < lo_[a] + extent_[a]) break;
      cur[a] = lo_[a];
    }
  }

  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<std::size_t>(extent_[a + 1]);

  lattice_class_.assign(total, static_cast<std::uint8_t>(NodeClass::Exterior));
  lattice_to_node_.assign(total, -1);
  cur = lo_;
  for (std::size_t off = 0; off < total; ++off) {
    NodeClass cls = NodeClass::Exterior;
    if (inside[off]) {
      cls = NodeClass::Interior;
    } else {
      for (int a = 0; a < d && cls == NodeClass::Exterior; ++a) {
        if (cur[a] > lo_[a] && inside[off - stride[a]]) cls = NodeClass::Boundary;
        if (cur[a] < lo_[a] + extent_[a] - 1 && inside[off + stride[a]]) cls = NodeClass::Boundary;
      }
    }
    lattice_class_[off] = static_cast<std::uint8_t>(cls);
    if (cls != NodeClass::Exterior) {
      const std::size_t node = node_class_.size();
      lattice_to_node_[off] = static_cast<std::int64_t>(node);
      node_class_.push_back(cls);
      coords_.insert(coords_.end(), cur.begin(), cur.end());
      (cls == NodeClass::Interior ? interior_ : boundary_).push_back(node);
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++cur[a] < lo_[a] + extent_[a]) break;
      cur[a] = lo_[a];
    }
  }

  neighbors_.assign(node_class_.size() * 2 * static_cast<std::size_t>(d), -1);
  std::vector<std::int64_t> nb(d);
  for (std::size_t k = 0; k < node_class_.size(); ++k) {
    const auto c = lattice_coords(k);
    for (int a = 0; a < d; ++a) {
      for (int s : {-1, 1}) {
        std::copy(c.begin(), c.end(), nb.begin());
        nb[a] += s;
        neighbors_[k * 2 * static_cast<std::size_t>(d) + 2 * static_cast<std::size_t>(a) + (s > 0 ? 1 : 0)] = find(nb);
      }
    }
  }
}

std::size_t Grid::lattice_offset(std::span<const std::int64_t> lattice) const {
  std::size_t off = 0;
  for (int a = 0; a < dim(); ++a) off = off * static_cast<std::size_t>(extent_[a]) + static_cast<std::size_t>(lattice[a] - lo_[a]);
  return off;
}

std::int64_t Grid::find(std::span<const std::int64_t> lattice) const {
  for (int a = 0; a < dim(); ++a) {
    if (lattice[a] < lo_[a] || lattice[a] >= lo_[a] + extent_[a]) return -1;
  }
  return lattice_to_node_[lattice_offset(lattice)];
}

NodeClass Grid::classify(std::span<const std::int64_t> lattice) const {
  for (int a = 0; a < dim(); ++a) {
    if (lattice[a] < lo_[a] || lattice[a] >= lo_[a] + extent_[a]) return NodeClass::Exterior;
  }
  return static_cast<NodeClass>(lattice_class_[lattice_offset(lattice)]);
}

void Grid::position(std::size_t k, std::span<double> out) const {
  const auto c = lattice_coords(k);
  for (int a = 0; a < dim(); ++a) out[a] = static_cast<double>(c[a]) * h_;
}

Point Grid::position(std::size_t k) const {
  Point p(dim());
  position(k, p);
  return p;
}

GridPtr build_grid(const Domain& domain, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorCode::InvalidArgument, "grid spacing must be positive");
  if (domain.diameter() / h < 8.0 - 1e-12) {
    fail(ErrorCode::SpacingTooCoarse, "spacing h=" + std::to_string(h) + " gives fewer than 8 cells across diameter " +
                                          std::to_string(domain.diameter()));
  }
  return std::make_shared<const Grid>(domain, h);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd BoundaryFrame::tangential_projector(std::size_t i) const {
  Eigen::Map<const Eigen::VectorXd> nu(normals.data() + i * static_cast<std::size_t>(dim), dim);
  return Eigen::MatrixXd::Identity(dim, dim) - nu * nu.transpose();
}

void BoundaryFrame::project_tangential(std::size_t i, std::span<const double> v, std::span<double> out) const {
  const auto nu = normal(i);
  double dot = 0.0;
  for (int a = 0; a < dim; ++a) dot += nu[a] * v[a];
  for (int a = 0; a < dim; ++a) out[a] = v[a] - dot * nu[a];
}

BoundaryFrame boundary_frame(const Grid& grid) {
  BoundaryFrame frame;
  frame.dim = grid.dim();
  const auto nodes = grid.boundary_nodes();
  frame.nodes.assign(nodes.begin(), nodes.end());
  frame.normals.reserve(nodes.size() * static_cast<std::size_t>(frame.dim));
  for (std::size_t k : nodes) {
    const Point n = grid.domain().outward_normal(grid.position(k));
    frame.normals.insert(frame.normals.end(), n.begin(), n.end());
  }
  return frame;
}

ConditionBReport check_condition_b(const Domain& domain, double probe_radius, double threshold) {
  require(probe_radius > 0.0, ErrorCode::InvalidArgument, "probe radius must be positive");
  ConditionBReport report;
  report.probe_radius = probe_radius;
  report.threshold = threshold;
  const int d = domain.dim();
  const int m = d - 1;

  if (domain.kind() == DomainKind::Box || domain.kind() == DomainKind::HalfBall) {
    fail(ErrorCode::NoGraphAvailable, to_string(domain.kind()) + " boundary has corners; no C^2 graph chart");
  }

  double theta = std::numeric_limits<double>::infinity();
  if (domain.kind() == DomainKind::GraphSubdomain) {
    const GraphDescriptor& g = *domain.graph();
    auto phi = [&](const Eigen::VectorXd& y) {
      Point xp(g.base);
      for (int i = 0; i < m; ++i) xp[i] += y[i];
      return g.phi(xp);
    };
    theta = min_eigenvalue(chart_hessian(phi, m, probe_radius));
    report.samples = 1;
  } else {
    require(probe_radius <= 0.1 * domain.diameter(), ErrorCode::InvalidArgument,
            "probe radius too large for the boundary chart");
    const double reach = 0.25 * domain.diameter();
    for (const Eigen::VectorXd& base : sphere_samples(d)) {
      const Eigen::VectorXd nu = base;  // outward normal of the unit sphere
      const Eigen::MatrixXd tangents = tangent_basis(nu);
      // phi(y') is the inward offset s with p + T y' - s nu on the boundary
      auto phi = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd q0 = base + tangents * y;
        Point q(d);
        auto level = [&](double s) {
          for (int a = 0; a < d; ++a) q[a] = q0[a] - s * nu[a];
          return domain.level_set(q);
        };
        double lo = -reach, hi = reach;  // level(lo) > 0 > level(hi)
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (level(mid) > 0.0) lo = mid;
          else hi = mid;
        }
        return 0.5 * (lo + hi);
      };
      theta = std::min(theta, min_eigenvalue(chart_hessian(phi, m, probe_radius)));
      ++report.samples;
    }
  }
  report.theta0 = std::max(0.0, theta);
  report.pass = report.theta0 >= threshold;
  return report;
}

}  // namespace sphereflow

#include "sphereflow/field.hpp"

#include <cmath>
#include <random>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

void normalize_in_place(std::span<double> v, std::size_t node) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n < 1e-14) {
    fail(ErrorCode::NearZeroVector, "cannot project node " + std::to_string(node) + " with |u| = " + std::to_string(n));
  }
  for (double& x : v) x /= n;
}

double model_radius(const Domain& domain) { return 0.5 * domain.diameter(); }

}  // namespace

SphereField::SphereField(GridPtr grid, int target_dim)
    : grid_(std::move(grid)), target_dim_(target_dim) {
  require(grid_ != nullptr, ErrorCode::InvalidArgument, "field needs a grid");
  require(target_dim_ >= 1, ErrorCode::InvalidArgument, "target dimension D must be >= 1");
  values_.assign(grid_->size() * static_cast<std::size_t>(components()), 0.0);
}

SphereField::SphereField(GridPtr grid, int target_dim, std::vector<double> values)
    : SphereField(std::move(grid), target_dim) {
  require(values.size() == values_.size(), ErrorCode::DimensionMismatch,
          "field has " + std::to_string(values.size()) + " values, expected " + std::to_string(values_.size()));
  values_ = std::move(values);
}

double SphereField::norm(std::size_t k) const {
  double s = 0.0;
  for (double v : at(k)) s += v * v;
  return std::sqrt(s);
}

double SphereField::max_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < size(); ++k) m = std::max(m, norm(k));
  return m;
}

void require_same_grid(const SphereField& a, const SphereField& b) {
  if (a.grid_ptr() != b.grid_ptr() && !(a.grid().spacing() == b.grid().spacing() && a.size() == b.size() &&
                                        a.grid().domain().to_json() == b.grid().domain().to_json())) {
    fail(ErrorCode::GridMismatch, "fields live on different grids");
  }
  require(a.target_dim() == b.target_dim(), ErrorCode::GridMismatch, "fields have different target dimensions");
}

// ---------------------------------------------------------------------------

std::string to_string(InitialDataKind kind) {
  switch (kind) {
    case InitialDataKind::Constant: return "constant";
    case InitialDataKind::Cap: return "cap";
    case InitialDataKind::EquatorHedgehog: return "equator-hedgehog";
    case InitialDataKind::BoundaryWrap: return "boundary-wrap";
    case InitialDataKind::Random: return "random";
    case InitialDataKind::CustomSamples: return "custom-samples";
  }
  return "unknown";
}

InitialData InitialData::from_json(const nlohmann::json& spec) {
  require(spec.is_object() && spec.contains("kind"), ErrorCode::InvalidConfig,
          "initial-data spec must be an object with a \"kind\"");
  InitialData data;
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "constant") data.kind = InitialDataKind::Constant;
  else if (kind == "cap") data.kind = InitialDataKind::Cap;
  else if (kind == "equator-hedgehog" || kind == "hedgehog") data.kind = InitialDataKind::EquatorHedgehog;
  else if (kind == "boundary-wrap") data.kind = InitialDataKind::BoundaryWrap;
  else if (kind == "random") data.kind = InitialDataKind::Random;
  else if (kind == "custom-samples") data.kind = InitialDataKind::CustomSamples;
  else fail(ErrorCode::InvalidConfig, "unknown initial-data kind \"" + kind + "\"");
  data.value = spec.value("value", std::vector<double>{});
  data.angle_deg = spec.value("angle_deg", data.angle_deg);
  data.scale = spec.value("scale", data.scale);
  data.bulge = spec.value("bulge", data.bulge);
  data.seed = spec.value("seed", data.seed);
  data.center = spec.value("center", std::vector<double>{});
  data.center_value = spec.value("center_value", std::vector<double>{});
  if (spec.contains("samples")) {
    for (const auto& row : spec.at("samples")) {
      for (const auto& v : row) data.samples.push_back(v.get<double>());
    }
  }
  return data;
}

nlohmann::json InitialData::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind)}};
  switch (kind) {
    case InitialDataKind::Constant:
      if (!value.empty()) j["value"] = value;
      break;
    case InitialDataKind::Cap:
      j["angle_deg"] = angle_deg;
      break;
    case InitialDataKind::EquatorHedgehog:
      if (!center_value.empty()) j["center_value"] = center_value;
      break;
    case InitialDataKind::BoundaryWrap:
      j["scale"] = scale;
      j["bulge"] = bulge;
      break;
    case InitialDataKind::Random:
      j["seed"] = seed;
      break;
    case InitialDataKind::CustomSamples:
      j["sample_count"] = samples.size();
      break;
  }
  if (!center.empty()) j["center"] = center;
  return j;
}

void InitialData::evaluate(const Domain& domain, std::span<const double> x, int target_dim,
                           std::span<double> out) const {
  const int d = domain.dim();
  const int comps = target_dim + 1;
  std::fill(out.begin(), out.end(), 0.0);
  const Point c = center.empty() ? domain.center() : center;
  require(static_cast<int>(c.size()) == d, ErrorCode::DimensionMismatch, "initial-data center has wrong dimension");

  switch (kind) {
    case InitialDataKind::Constant: {
      if (value.empty()) {
        out[comps - 1] = 1.0;
        return;
      }
      require(static_cast<int>(value.size()) == comps, ErrorCode::DimensionMismatch,
              "constant value must have D+1 components");
      std::copy(value.begin(), value.end(), out.begin());
      normalize_in_place(out, 0);
      return;
    }
    case InitialDataKind::Cap: {
      const int m = std::min(d, target_dim);
      const double radius = model_radius(domain);
      double z2 = 0.0;
      for (int i = 0; i < m; ++i) z2 += ((x[i] - c[i]) / radius) * ((x[i] - c[i]) / radius);
      const double zn = std::sqrt(z2);
      const double alpha = angle_deg * M_PI / 180.0;
      const double theta = alpha * zn;
      // sin(alpha r)/r is smooth in r^2
      const double ratio = zn > 0.0 ? std::sin(theta) / zn : alpha;
      for (int i = 0; i < m; ++i) out[i] = ratio * (x[i] - c[i]) / radius;
      out[comps - 1] = std::cos(theta);
      return;
    }
    case InitialDataKind::EquatorHedgehog: {
      require(comps >= d, ErrorCode::DimensionMismatch,
              "equator-hedgehog needs D+1 >= d (got d=" + std::to_string(d) + ", D=" + std::to_string(target_dim) + ")");
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
      const double r = std::sqrt(r2);
      if (r <= 1e-12) {
        if (center_value.empty()) {
          out[0] = 1.0;
        } else {
          require(static_cast<int>(center_value.size()) == comps, ErrorCode::DimensionMismatch,
                  "center_value must have D+1 components");
          std::copy(center_value.begin(), center_value.end(), out.begin());
          normalize_in_place(out, 0);
        }
        return;
      }
      for (int i = 0; i < d; ++i) out[i] = (x[i] - c[i]) / r;
      return;
    }
    case InitialDataKind::BoundaryWrap: {
      const int m = std::min(d, target_dim);
      const double radius = model_radius(domain);
      std::vector<double> v(target_dim, 0.0);
      double y2 = 0.0;
      for (int i = 0; i < m; ++i) {
        v[i] = (x[i] - c[i]) / radius;
        y2 += v[i] * v[i];
      }
      const double factor = scale * (1.0 + bulge * (y2 - 1.0));
      double v2 = 0.0;
      for (double& vi : v) {
        vi *= factor;
        v2 += vi * vi;
      }
      for (int i = 0; i < target_dim; ++i) out[i] = 2.0 * v[i] / (1.0 + v2);
      out[comps - 1] = (1.0 - v2) / (1.0 + v2);
      return;
    }
    case InitialDataKind::Random:
    case InitialDataKind::CustomSamples:
      fail(ErrorCode::InvalidArgument, to_string(kind) + " initial data has no point evaluation");
  }
}

SphereField generate(const InitialData& data, GridPtr grid, int target_dim) {
  SphereField field(grid, target_dim);
  const Grid& g = *grid;
  const int comps = field.components();
  switch (data.kind) {
    case InitialDataKind::Random: {
      std::mt19937_64 rng(data.seed);
      std::normal_distribution<double> normal;
      for (std::size_t k = 0; k < g.size(); ++k) {
        auto u = field.at(k);
        double s = 0.0;
        do {
          s = 0.0;
          for (int c = 0; c < comps; ++c) {
            u[c] = normal(rng);
            s += u[c] * u[c];
          }
        } while (s < 1e-20);
      }
      break;
    }
    case InitialDataKind::CustomSamples: {
      require(data.samples.size() == field.values().size(), ErrorCode::DimensionMismatch,
              "custom samples hold " + std::to_string(data.samples.size()) + " values, grid needs " +
                  std::to_string(field.values().size()));
      field.data() = data.samples;
      break;
    }
    default: {
      Point x(g.dim());
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.position(k, x);
        if (g.is_interior(k)) {
          data.evaluate(g.domain(), x, target_dim, field.at(k));
        } else {
          data.evaluate(g.domain(), g.domain().nearest_boundary_point(x), target_dim, field.at(k));
        }
      }
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) normalize_in_place(field.at(k), k);
  return field;
}

SphereField project_to_sphere(const SphereField& field) {
  SphereField out = field;
  for (std::size_t k = 0; k < out.size(); ++k) normalize_in_place(out.at(k), k);
  return out;
}

double l2_distance(const SphereField& a, const SphereField& b) {
  require_same_grid(a, b);
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += (va[i] - vb[i]) * (va[i] - vb[i]);
  return std::sqrt(s * a.grid().cell_volume());
}

std::vector<double> gradient_density(const SphereField& field) {
  const Grid& g = field.grid();
  const int d = g.dim();
  const int comps = field.components();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> density(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto uk = field.at(k);
    for (int a = 0; a < d; ++a) {
      const std::int64_t j = g.neighbor(k, a, +1);
      if (j < 0) continue;
      const auto nj = static_cast<std::size_t>(j);
      if (!g.is_interior(k) && !g.is_interior(nj)) continue;
      const auto uj = field.at(nj);
      double q = 0.0;
      for (int c = 0; c < comps; ++c) q += (uj[c] - uk[c]) * (uj[c] - uk[c]);
      q *= inv_h2;
      density[k] += 0.5 * q;
      density[nj] += 0.5 * q;
    }
  }
  return density;
}

double dirichlet_energy(const SphereField& field) {
  double s = 0.0;
  for (double v : gradient_density(field)) s += v;
  return s * field.grid().cell_volume();
}

void nodal_gradient(const SphereField& field, std::size_t k, std::span<double> out) {
  const Grid& g = field.grid();
  const int d = g.dim();
  const int comps = field.components();
  const double h = g.spacing();
  const auto u = field.at(k);
  for (int a = 0; a < d; ++a) {
    const std::int64_t jp = g.neighbor(k, a, +1);
    const std::int64_t jm = g.neighbor(k, a, -1);
    for (int c = 0; c < comps; ++c) {
      double v = 0.0;
      if (jp >= 0 && jm >= 0) {
        v = (field.at(static_cast<std::size_t>(jp))[c] - field.at(static_cast<std::size_t>(jm))[c]) / (2.0 * h);
      } else if (jp >= 0) {
        v = (field.at(static_cast<std::size_t>(jp))[c] - u[c]) / h;
      } else if (jm >= 0) {
        v = (u[c] - field.at(static_cast<std::size_t>(jm))[c]) / h;
      }
      out[static_cast<std::size_t>(c * d + a)] = v;
    }
  }
}

}  // namespace sphereflow

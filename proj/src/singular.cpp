#include "sphereflow/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

double local_scaled_energy(const DensityCache& cache, const CylinderSpec& cyl) {
  const Grid& g = cache.trajectory().grid();
  if (cyl.R < 2.0 * g.spacing() * (1.0 - 1e-12)) {
    fail(ErrorCode::KernelUnderresolved,
         "radius " + std::to_string(cyl.R) + " is below 2h = " + std::to_string(2.0 * g.spacing()));
  }
  const double scale = cache.kind() == DensityKind::Dirichlet ? 0.5 : 1.0;
  return scale * cylinder_integral(cache, cyl) / std::pow(cyl.R, g.dim());
}

double local_scaled_energy(const Trajectory& traj, const CylinderSpec& cyl, DensityKind mode) {
  const DensityCache cache(traj, mode);
  return local_scaled_energy(cache, cyl);
}

DensityKind density_kind_from_string(const std::string& s) {
  if (s == "gl" || s == "ginzburg_landau") return DensityKind::GinzburgLandau;
  if (s == "dirichlet") return DensityKind::Dirichlet;
  fail(ErrorCode::InvalidConfig, "unknown energy mode '" + s + "' (expected gl or dirichlet)");
}

std::string to_string(DensityKind kind) { return kind == DensityKind::Dirichlet ? "dirichlet" : "gl"; }

SingularConfig SingularConfig::from_json(const nlohmann::json& j) {
  SingularConfig c;
  c.eps0 = j.value("eps0", c.eps0);
  c.radii = j.value("radii", c.radii);
  c.time_stride = j.value("time_stride", c.time_stride);
  c.space_stride = j.value("space_stride", c.space_stride);
  c.mode = density_kind_from_string(j.value("mode", std::string("gl")));
  c.deltas = j.value("deltas", c.deltas);
  require(c.eps0 > 0.0, ErrorCode::InvalidConfig, "eps0 must be positive");
  require(c.time_stride >= 1 && c.space_stride >= 1, ErrorCode::InvalidConfig, "strides must be at least 1");
  return c;
}

nlohmann::json SingularConfig::to_json() const {
  return {{"eps0", eps0},
          {"radii", radii},
          {"time_stride", time_stride},
          {"space_stride", space_stride},
          {"mode", to_string(mode)},
          {"deltas", deltas}};
}

nlohmann::json BoxCount::to_json() const {
  return {{"deltas", deltas},
          {"counts", counts},
          {"dimension", std::isnan(dimension) ? nlohmann::json(nullptr) : nlohmann::json(dimension)}};
}

std::vector<SpacetimePoint> SingularReport::points() const {
  std::vector<SpacetimePoint> out;
  out.reserve(flagged.size());
  for (const FlaggedPoint& p : flagged) out.push_back({p.t, p.x});
  return out;
}

nlohmann::json SingularReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const FlaggedPoint& p : flagged) {
    pts.push_back({{"snapshot", p.snapshot},
                   {"node", p.node},
                   {"t", p.t},
                   {"x", p.x},
                   {"values", p.values},
                   {"sup_density", p.sup_density},
                   {"sup_density_times_r2", p.sup_density * radii.front() * radii.front()}});
  }
  nlohmann::json j = {{"eps0", eps0},       {"radii", radii},           {"mode", to_string(mode)},
                      {"scanned", scanned}, {"flagged_count", flagged.size()}, {"flagged", pts}};
  j["box_count"] = box_count ? box_count->to_json() : nlohmann::json(nullptr);
  return j;
}

namespace {

void check_deltas(const std::vector<double>& deltas) {
  if (deltas.size() < 3) {
    fail(ErrorCode::TooFewScales, "box counting needs at least 3 scales, got " + std::to_string(deltas.size()));
  }
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    require(deltas[i] > 0.0, ErrorCode::InvalidArgument, "box sizes must be positive");
    if (i > 0) require(deltas[i] < deltas[i - 1], ErrorCode::InvalidArgument, "box sizes must be decreasing");
  }
}

}  // namespace

SingularReport detect_singular_set(const Trajectory& traj, const SingularConfig& cfg, unsigned threads) {
  require(!traj.snapshots.empty(), ErrorCode::InvalidArgument, "empty trajectory");
  require(cfg.eps0 > 0.0, ErrorCode::InvalidArgument, "eps0 must be positive");
  require(cfg.time_stride >= 1 && cfg.space_stride >= 1, ErrorCode::InvalidArgument, "strides must be at least 1");
  const Grid& g = traj.grid();
  const double h = g.spacing();

  SingularReport rep;
  rep.eps0 = cfg.eps0;
  rep.mode = cfg.mode;
  rep.radii = cfg.radii.empty() ? std::vector<double>{4.0 * h, 8.0 * h, 16.0 * h} : cfg.radii;
  std::sort(rep.radii.begin(), rep.radii.end());
  for (double R : rep.radii) {
    if (R < 2.0 * h * (1.0 - 1e-12)) {
      fail(ErrorCode::KernelUnderresolved, "scan radius " + std::to_string(R) + " is below 2h");
    }
  }
  if (!cfg.deltas.empty()) {
    check_deltas(cfg.deltas);
    for (double delta : cfg.deltas) {
      if (delta < 2.0 * h * (1.0 - 1e-12)) {
        fail(ErrorCode::InvalidArgument, "box size " + std::to_string(delta) + " is below 2h");
      }
    }
  }

  std::vector<std::size_t> nodes;
  const auto stride = static_cast<std::int64_t>(cfg.space_stride);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto lc = g.lattice_coords(k);
    if (std::all_of(lc.begin(), lc.end(), [&](std::int64_t c) { return c % stride == 0; })) nodes.push_back(k);
  }
  std::vector<std::size_t> times;
  for (std::size_t s = 0; s < traj.snapshots.size(); s += cfg.time_stride) times.push_back(s);
  rep.scanned = nodes.size() * times.size();

  const DensityCache cache(traj, cfg.mode);
  const DensityCache gl(traj, DensityKind::GinzburgLandau);
  std::vector<std::optional<FlaggedPoint>> results(rep.scanned);
  parallel_for(rep.scanned, threads, [&](std::size_t i) {
    const std::size_t snap = times[i / nodes.size()];
    const std::size_t node = nodes[i % nodes.size()];
    FlaggedPoint p;
    p.snapshot = snap;
    p.node = node;
    p.t = traj.snapshots[snap].t;
    p.x = g.position(node);
    for (double R : rep.radii) {
      const double v = local_scaled_energy(cache, {p.t, p.x, R});
      if (v < cfg.eps0) return;
      p.values.push_back(v);
    }
    const double R = rep.radii.front();
    for (const TimeSegment& seg : clip_time(traj, p.t - R * R, p.t + R * R)) {
      const auto& e = gl.at(seg.snapshot);
      g.for_each_in_ball(p.x, R, [&](std::size_t k, std::span<const double>) {
        p.sup_density = std::max(p.sup_density, e[k]);
      });
    }
    results[i] = std::move(p);
  });
  for (auto& r : results) {
    if (r) rep.flagged.push_back(std::move(*r));
  }
  if (!cfg.deltas.empty()) rep.box_count = parabolic_box_count(rep.points(), cfg.deltas);
  return rep;
}

BoxCount parabolic_box_count(std::vector<SpacetimePoint> points, const std::vector<double>& deltas) {
  check_deltas(deltas);
  std::sort(points.begin(), points.end(), [](const SpacetimePoint& a, const SpacetimePoint& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.x < b.x;
  });

  BoxCount out;
  out.deltas = deltas;
  for (double delta : deltas) {
    const double span_t = delta * delta, half = 0.5 * delta;
    std::vector<const SpacetimePoint*> boxes;  // anchors of boxes still open in time
    std::size_t count = 0;
    for (const SpacetimePoint& p : points) {
      std::erase_if(boxes, [&](const SpacetimePoint* b) { return p.t > b->t + span_t; });
      const bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const SpacetimePoint* b) {
        for (std::size_t a = 0; a < p.x.size(); ++a) {
          if (std::abs(p.x[a] - b->x[a]) > half) return false;
        }
        return true;
      });
      if (!covered) {
        boxes.push_back(&p);
        ++count;
      }
    }
    out.counts.push_back(count);
  }
  // greedy covers are not monotone in delta; keep the tighter bound
  for (std::size_t i = out.counts.size() - 1; i-- > 0;) out.counts[i] = std::min(out.counts[i], out.counts[i + 1]);

  if (points.empty()) {
    out.dimension = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double x = std::log(1.0 / deltas[i]), y = std::log(static_cast<double>(out.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.dimension = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

nlohmann::json SmallEnergyCertificate::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const CertificateRow& r : rows) {
    rows_json.push_back({{"r", r.r}, {"integral", r.integral}, {"bound", r.bound}, {"pass", r.pass}});
  }
  return {{"eps0", eps0}, {"rows", rows_json}, {"r_star", r_star}, {"pass", pass}};
}

std::vector<double> dyadic_radii(const Grid& grid) {
  std::vector<double> out;
  const double d0 = grid.domain().diameter();
  for (double r = d0 / 2.0; r >= 2.0 * grid.spacing() * (1.0 - 1e-12); r /= 2.0) out.push_back(r);
  return out;
}

SmallEnergyCertificate small_energy_certificate(const Trajectory& traj, double t0, std::span<const double> x0,
                                                double eps0, std::vector<double> radii) {
  require(eps0 > 0.0, ErrorCode::InvalidArgument, "eps0 must be positive");
  const Grid& g = traj.grid();
  if (radii.empty()) radii = dyadic_radii(g);
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const DensityCache cache(traj, DensityKind::Dirichlet);
  SmallEnergyCertificate cert;
  cert.eps0 = eps0;
  const Point center(x0.begin(), x0.end());
  for (double r : radii) {
    CertificateRow row;
    row.r = r;
    row.integral = cylinder_integral(cache, {t0, center, r});
    row.bound = 0.5 * eps0 * eps0 * std::pow(r, g.dim());
    row.pass = row.integral < row.bound;
    cert.rows.push_back(row);
  }
  for (auto it = cert.rows.rbegin(); it != cert.rows.rend() && it->pass; ++it) cert.r_star = it->r;
  cert.pass = cert.r_star > 0.0;
  return cert;
}

}  // namespace sphereflow

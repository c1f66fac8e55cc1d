#include "sphereflow/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <algorithm>

#include "sphereflow/elliptic.hpp"
#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<std::size_t> nodes_in_ball(const Grid& g, std::span<const double> x0, double R) {
  std::vector<std::size_t> out;
  g.for_each_in_ball(x0, R, [&](std::size_t k, std::span<const double>) { out.push_back(k); });
  return out;
}

void check_point(const Grid& g, std::span<const double> x0) {
  require(static_cast<int>(x0.size()) == g.dim(), ErrorCode::DimensionMismatch,
          "spacetime point has " + std::to_string(x0.size()) + " space coordinates, grid has " +
              std::to_string(g.dim()));
}

void check_window(const Trajectory& traj, double lo, double hi) {
  const double eps = 1e-12 * std::max(1.0, traj.end_time());
  if (lo < traj.start_time() - eps || hi > traj.end_time() + eps) {
    fail(ErrorCode::WindowOutsideTrajectory, "time window (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                                 ") is not covered by the trajectory [" +
                                                 std::to_string(traj.start_time()) + ", " +
                                                 std::to_string(traj.end_time()) + "]");
  }
}

void check_resolution(const Grid& g, double R, bool require_resolved) {
  if (require_resolved && 2.0 * R < 4.0 * g.spacing()) {
    fail(ErrorCode::KernelUnderresolved,
         "kernel width 2R = " + std::to_string(2.0 * R) + " is below 4h = " + std::to_string(4.0 * g.spacing()));
  }
}

std::vector<double> node_positions(const Grid& g) {
  const int d = g.dim();
  std::vector<double> pos(g.size() * static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < g.size(); ++k) g.position(k, std::span<double>(pos.data() + k * d, d));
  return pos;
}

// Simpson rule on a log-spaced variable for int_{s_lo}^{s_hi} f(s) ds.
double log_simpson(const std::function<double(double)>& f, double s_lo, double s_hi, int intervals = 256) {
  const double a = std::log(s_lo), b = std::log(s_hi);
  const double h = (b - a) / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double sigma = a + i * h;
    const double s = std::exp(sigma);
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * f(s) * s;
  }
  return sum * h / 3.0;
}

double deviation_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

}  // namespace

double backward_heat_kernel(double t0, std::span<const double> x0, double t, std::span<const double> x) {
  if (!(t < t0)) {
    fail(ErrorCode::TimeNotBeforeCenter,
         "kernel needs t < t0 (t = " + std::to_string(t) + ", t0 = " + std::to_string(t0) + ")");
  }
  const double s = t0 - t;
  const double d = static_cast<double>(x.size());
  return std::pow(4.0 * M_PI * s, -0.5 * d) * std::exp(-dist2(x, x0) / (4.0 * s));
}

double weight_d(std::span<const double> x0, std::span<const double> x, double d0) {
  require(d0 > 0.0, ErrorCode::InvalidArgument, "diameter must be positive");
  return 1.0 + dist2(x, x0) / (d0 * d0);
}

nlohmann::json CylinderSpec::to_json() const { return {{"t0", t0}, {"x0", x0}, {"R", R}}; }

EnergyReport energy_report(const SphereField& u, double strength) {
  EnergyReport r;
  r.density = energy_density(u, strength);
  const double vol = u.grid().cell_volume();
  r.dirichlet_energy = dirichlet_energy(u);
  double total = 0.0;
  for (double e : r.density) total += e;
  r.gl_energy = total * vol;
  double pen = 0.0;
  if (strength > 0.0) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double w = u.norm(k) * u.norm(k) - 1.0;
      pen += w * w;
    }
  }
  r.penalty_part = 0.25 * strength * pen * vol;
  return r;
}

std::vector<TimeSegment> clip_time(const Trajectory& traj, double lo, double hi) {
  std::vector<TimeSegment> out;
  for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
    const double a = std::max(traj.snapshots[k].t, lo);
    const double b = std::min(traj.snapshots[k + 1].t, hi);
    if (b > a) out.push_back({k, a, b});
  }
  return out;
}

// ---------------------------------------------------------------------------

DensityCache::DensityCache(const Trajectory& traj, DensityKind kind, double scale)
    : traj_(traj),
      kind_(kind),
      scale_(scale),
      cache_(traj.snapshots.size()),
      filled_(std::make_unique<std::once_flag[]>(traj.snapshots.size())) {}

const std::vector<double>& DensityCache::at(std::size_t snapshot) const {
  std::call_once(filled_[snapshot], [&] {
    const Snapshot& s = traj_.snapshots[snapshot];
    std::vector<double> v = kind_ == DensityKind::Dirichlet ? gradient_density(s.field)
                                                            : energy_density(s.field, traj_.penalty_strength(s.t));
    if (scale_ != 1.0) {
      for (double& x : v) x *= scale_;
    }
    cache_[snapshot] = std::move(v);
  });
  return cache_[snapshot];
}

double cylinder_integral(const DensityCache& cache, const CylinderSpec& cyl) {
  const Trajectory& traj = cache.trajectory();
  const Grid& g = traj.grid();
  check_point(g, cyl.x0);
  require(cyl.R > 0.0, ErrorCode::InvalidArgument, "cylinder radius must be positive");
  const auto segments = clip_time(traj, cyl.t0 - cyl.R * cyl.R, cyl.t0 + cyl.R * cyl.R);
  const auto nodes = nodes_in_ball(g, cyl.x0, cyl.R);
  if (segments.empty() || nodes.empty()) {
    fail(ErrorCode::EmptyIntersection, "P_R(z0) ∩ Q is empty for t0 = " + std::to_string(cyl.t0) +
                                           ", R = " + std::to_string(cyl.R));
  }
  double total = 0.0;
  for (const TimeSegment& seg : segments) {
    const auto& e = cache.at(seg.snapshot);
    double s = 0.0;
    for (std::size_t k : nodes) s += e[k];
    total += s * seg.length();
  }
  return total * g.cell_volume();
}

double weighted_annulus_energy(const DensityCache& cache, double t0, std::span<const double> x0, double R,
                               bool require_resolved) {
  const Trajectory& traj = cache.trajectory();
  const Grid& g = traj.grid();
  check_point(g, x0);
  require(R > 0.0, ErrorCode::InvalidArgument, "radius must be positive");
  const double lo = t0 - 4.0 * R * R, hi = t0 - R * R;
  check_window(traj, lo, hi);
  check_resolution(g, R, require_resolved);
  const int d = g.dim();
  const std::vector<double> pos = node_positions(g);
  double total = 0.0;
  for (const TimeSegment& seg : clip_time(traj, lo, hi)) {
    const auto& e = cache.at(seg.snapshot);
    const double s = t0 - seg.mid();
    const double pre = std::pow(4.0 * M_PI * s, -0.5 * d);
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (e[k] == 0.0) continue;
      const double r2 = dist2(std::span<const double>(pos.data() + k * d, d), x0);
      acc += e[k] * std::exp(-r2 / (4.0 * s));
    }
    total += pre * acc * seg.length();
  }
  return total * g.cell_volume();
}

double weighted_annulus_energy(const Trajectory& traj, double t0, std::span<const double> x0, double R,
                               bool require_resolved) {
  const DensityCache cache(traj, DensityKind::GinzburgLandau);
  return weighted_annulus_energy(cache, t0, x0, R, require_resolved);
}

// ---------------------------------------------------------------------------

std::string to_string(MonotonicityForm form) {
  return form == MonotonicityForm::Main1 ? "main1" : "mon";
}

std::vector<double> FitGrid::logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::pow(10.0, e);
  }
  return out;
}

nlohmann::json MonotonicityReport::to_json() const {
  return {{"t0", t0},         {"x0", x0},         {"R1", R1},   {"R2", R2},   {"form", to_string(form)},
          {"annulus_R1", annulus_R1}, {"speed_term", speed_term}, {"annulus_R2", annulus_R2},
          {"lhs", lhs},       {"mu", mu},         {"C", C},     {"rhs", rhs}, {"defect", defect},
          {"kernel_resolved", kernel_resolved}};
}

double speed_window(const Trajectory& traj, double t0, std::span<const double> x0, double R, MonotonicityForm form) {
  const Grid& g = traj.grid();
  const int d = g.dim();
  const int comps = traj.target_dim() + 1;
  const double lo = t0 - 4.0 * R * R, hi = t0 - R * R;
  check_window(traj, lo, hi);
  const std::vector<double> pos = node_positions(g);
  std::vector<double> grad(static_cast<std::size_t>(comps * d));
  double total = 0.0;
  for (const TimeSegment& seg : clip_time(traj, lo, hi)) {
    const Snapshot& s0 = traj.snapshots[seg.snapshot];
    const Snapshot& s1 = traj.snapshots[seg.snapshot + 1];
    const double dt = s1.t - s0.t;
    const double tm = seg.mid();
    const double s = t0 - tm;
    const double drift_scale = form == MonotonicityForm::Main1 ? 1.0 / (2.0 * std::sqrt(s)) : 1.0 / (2.0 * (tm - t0));
    const double pre = std::pow(4.0 * M_PI * s, -0.5 * d);
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::span<const double> x(pos.data() + k * d, d);
      const double kernel = std::exp(-dist2(x, x0) / (4.0 * s));
      if (kernel == 0.0) continue;
      nodal_gradient(s0.field, k, grad);
      const auto u0 = s0.field.at(k);
      const auto u1 = s1.field.at(k);
      double q = 0.0;
      for (int c = 0; c < comps; ++c) {
        double drift = 0.0;
        for (int a = 0; a < d; ++a) drift += (x[a] - x0[a]) * drift_scale * grad[c * d + a];
        const double dev = (u1[c] - u0[c]) / dt - drift;
        q += dev * dev;
      }
      acc += q * kernel;
    }
    total += pre * acc * seg.length();
  }
  return total * g.cell_volume();
}

double monotonicity_rhs(const MonotonicityReport& rep, double mu, double C) {
  const double growth = std::pow(rep.R2, mu) - std::pow(rep.R1, mu);
  const double factor = rep.form == MonotonicityForm::Main1 ? growth : std::exp(growth);
  return C * factor * rep.annulus_R2 + C * (rep.R2 - rep.R1);
}

MonotonicityReport monotonicity_report(const Trajectory& traj, double t0, std::span<const double> x0, double R1,
                                       double R2, MonotonicityForm form, const FitGrid& grid, std::size_t r_samples) {
  const Grid& g = traj.grid();
  check_point(g, x0);
  if (!(R1 > 0.0 && R1 <= R2 && R2 < std::sqrt(t0 / 4.0))) {
    fail(ErrorCode::InvalidArgument, "monotonicity pair needs 0 < R1 <= R2 < sqrt(t0/4) (R1 = " + std::to_string(R1) +
                                         ", R2 = " + std::to_string(R2) + ", t0 = " + std::to_string(t0) + ")");
  }
  require(!grid.mu.empty() && !grid.C.empty(), ErrorCode::InvalidArgument, "fit grid is empty");
  require(r_samples >= 2, ErrorCode::InvalidArgument, "need at least two R samples");

  MonotonicityReport rep;
  rep.t0 = t0;
  rep.x0.assign(x0.begin(), x0.end());
  rep.R1 = R1;
  rep.R2 = R2;
  rep.form = form;
  rep.kernel_resolved = 2.0 * R1 >= 4.0 * g.spacing();

  const DensityCache cache(traj, DensityKind::GinzburgLandau);
  rep.annulus_R1 = weighted_annulus_energy(cache, t0, x0, R1, false);
  rep.annulus_R2 = weighted_annulus_energy(cache, t0, x0, R2, false);
  if (R2 > R1) {
    double integral = 0.0;
    double prev_r = R1, prev_v = speed_window(traj, t0, x0, R1, form);
    for (std::size_t i = 1; i < r_samples; ++i) {
      const double r = R1 + (R2 - R1) * static_cast<double>(i) / static_cast<double>(r_samples - 1);
      const double v = speed_window(traj, t0, x0, r, form);
      integral += 0.5 * (v + prev_v) * (r - prev_r);
      prev_r = r;
      prev_v = v;
    }
    rep.speed_term = (form == MonotonicityForm::Main1 ? 2.0 : 1.0) * integral;
  }
  rep.lhs = rep.annulus_R1 + rep.speed_term;

  double best = std::numeric_limits<double>::infinity();
  for (double mu : grid.mu) {
    for (double C : grid.C) {
      const double rhs = monotonicity_rhs(rep, mu, C);
      const double defect = std::max(0.0, rep.lhs - rhs);
      const bool better = defect < best || (defect == best && (C < rep.C || (C == rep.C && mu > rep.mu)));
      if (better) {
        best = defect;
        rep.mu = mu;
        rep.C = C;
        rep.rhs = rhs;
        rep.defect = defect;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json Main2Report::to_json() const {
  return {{"interior_term", interior_term}, {"boundary_term", boundary_term}, {"bracket", bracket}, {"value", value}};
}

Main2Report main2_lhs(const SphereField& u0, double t0, std::span<const double> x0, double R0, double mu, double C,
                      Main2Variant variant) {
  const Grid& g = u0.grid();
  check_point(g, x0);
  require(t0 > 0.0 && R0 > 0.0 && R0 < std::sqrt(t0) / 2.0, ErrorCode::InvalidArgument,
          "criterion needs 0 < R0 < sqrt(t0)/2");
  const int d = g.dim();
  const double d0 = g.domain().diameter();
  const int comps = u0.components();

  Main2Report rep;
  const double energy = dirichlet_energy(u0);
  if (variant == Main2Variant::Criterion) {
    rep.interior_term = std::exp(-4.0 * (d - 2) / (d0 * d0)) / std::pow(t0, 0.5 * (d - 2)) * energy;
  } else {
    rep.interior_term =
        std::exp(-4.0 * (d - 2) * (t0 - R0 * R0) / (d0 * d0)) / std::pow(2.0 * std::sqrt(t0), d) * energy;
  }

  const BoundaryFrame frame = boundary_frame(g);
  std::vector<double> grad(static_cast<std::size_t>(comps * d)), col(d), proj(d);
  const double surface = std::pow(g.spacing(), d - 1);
  double boundary = 0.0;
  for (std::size_t i = 0; i < frame.nodes.size(); ++i) {
    const std::size_t k = frame.nodes[i];
    nodal_gradient(u0, k, grad);
    double tangential = 0.0;
    for (int c = 0; c < comps; ++c) {
      for (int a = 0; a < d; ++a) col[a] = grad[c * d + a];
      frame.project_tangential(i, col, proj);
      for (double p : proj) tangential += p * p;
    }
    if (tangential == 0.0) continue;
    const Point x = g.position(k);
    const double r2 = dist2(x, x0);
    const double dw = weight_d(x0, x, d0);
    // s = t0 - t runs over [R0^2, t0]
    const auto integrand = [&](double s) {
      const double kernel = std::pow(4.0 * M_PI * s, -0.5 * d) * std::exp(-r2 / (4.0 * s));
      return variant == Main2Variant::Criterion ? kernel * (dw + 4.0 * s / (d0 * d0)) : kernel;
    };
    boundary += tangential * log_simpson(integrand, R0 * R0, t0) * surface;
  }
  rep.boundary_term = boundary;
  rep.bracket = rep.interior_term + rep.boundary_term;
  if (variant == Main2Variant::Criterion) {
    rep.value = std::exp(std::pow(4.0 * R0, mu)) / (R0 * R0) * rep.bracket + C * R0;
  } else {
    rep.value = rep.interior_term + C * rep.boundary_term;
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Integral over P_R(z0) ∩ Q of |u - h0|^2 and the measure of that set.
void deviation_integral(const Trajectory& traj, const SphereField& h0, const CylinderSpec& cyl, double& integral,
                        double& measure) {
  const Grid& g = traj.grid();
  require_same_grid(traj.snapshots.front().field, h0);
  const auto segments = clip_time(traj, cyl.t0 - cyl.R * cyl.R, cyl.t0 + cyl.R * cyl.R);
  const auto nodes = nodes_in_ball(g, cyl.x0, cyl.R);
  if (segments.empty() || nodes.empty()) {
    fail(ErrorCode::EmptyIntersection, "P_R(z0) ∩ Q is empty for R = " + std::to_string(cyl.R));
  }
  integral = 0.0;
  double time = 0.0;
  for (const TimeSegment& seg : segments) {
    const SphereField& u = traj.snapshots[seg.snapshot].field;
    double s = 0.0;
    for (std::size_t k : nodes) s += deviation_sq(u.at(k), h0.at(k));
    integral += s * seg.length();
    time += seg.length();
  }
  integral *= g.cell_volume();
  measure = time * static_cast<double>(nodes.size()) * g.cell_volume();
}

// Sum over admissible nodes in B_R(x0) of |grad^m h0|^2 + |grad h0|^2, and their count.
void derivative_sum(const SphereField& h0, std::span<const double> x0, double R, int order, double& sum,
                    std::size_t& count) {
  const Grid& g = h0.grid();
  const std::vector<double> high = higher_derivative_density(h0, order);
  const std::vector<double> first = higher_derivative_density(h0, 1);
  sum = 0.0;
  count = 0;
  g.for_each_in_ball(x0, R, [&](std::size_t k, std::span<const double>) {
    if (std::isnan(high[k])) return;
    sum += high[k] + first[k];
    ++count;
  });
  if (count == 0) {
    fail(ErrorCode::OrderTooHighForGrid, "no node in B_" + std::to_string(R) + " admits order-" +
                                             std::to_string(order) + " differences");
  }
}

}  // namespace

nlohmann::json ReversePoincareReport::to_json() const {
  return {{"lhs", lhs}, {"deviation_term", deviation_term}, {"derivative_term", derivative_term},
          {"rhs", rhs}, {"order", order}};
}

ReversePoincareReport reverse_poincare_ratio(const Trajectory& traj, const SphereField& h0, const CylinderSpec& cyl) {
  const Grid& g = traj.grid();
  check_point(g, cyl.x0);
  ReversePoincareReport rep;
  rep.order = hybrid_derivative_order(g.dim());
  const DensityCache grad(traj, DensityKind::Dirichlet, 0.5);
  rep.lhs = cylinder_integral(grad, cyl) / std::pow(cyl.R, g.dim());

  const CylinderSpec outer{cyl.t0, cyl.x0, 2.0 * cyl.R};
  double integral = 0.0, measure = 0.0;
  deviation_integral(traj, h0, outer, integral, measure);
  rep.deviation_term = integral / measure;
  double sum = 0.0;
  std::size_t count = 0;
  derivative_sum(h0, outer.x0, outer.R, rep.order, sum, count);
  rep.derivative_term = sum / static_cast<double>(count);
  rep.rhs = rep.deviation_term + rep.derivative_term;
  return rep;
}

nlohmann::json HybridReport::to_json() const {
  return {{"inner", inner},
          {"outer", outer},
          {"deviation", deviation},
          {"derivative", derivative},
          {"data", data},
          {"eps0", eps0},
          {"fitted_C", fit_found ? nlohmann::json(fitted_C) : nlohmann::json(nullptr)},
          {"fit_found", fit_found}};
}

HybridReport hybrid_report(const Trajectory& traj, const SphereField& h0, const CylinderSpec& cyl, double eps0,
                           const std::vector<double>& C_grid) {
  const Grid& g = traj.grid();
  check_point(g, cyl.x0);
  HybridReport rep;
  rep.eps0 = eps0;
  const DensityCache e(traj, DensityKind::GinzburgLandau);
  rep.inner = cylinder_integral(e, cyl);
  const CylinderSpec outer{cyl.t0, cyl.x0, 2.0 * cyl.R};
  rep.outer = cylinder_integral(e, outer);

  double integral = 0.0, measure = 0.0;
  deviation_integral(traj, h0, outer, integral, measure);
  rep.deviation = integral / (cyl.R * cyl.R);
  const auto segments = clip_time(traj, outer.t0 - outer.R * outer.R, outer.t0 + outer.R * outer.R);
  double time = 0.0;
  for (const TimeSegment& s : segments) time += s.length();
  double sum = 0.0;
  std::size_t count = 0;
  derivative_sum(h0, outer.x0, outer.R, hybrid_derivative_order(g.dim()), sum, count);
  rep.derivative = time * sum * g.cell_volume();
  rep.data = rep.deviation + rep.derivative;

  std::vector<double> sorted = C_grid;
  std::sort(sorted.begin(), sorted.end());
  for (double C : sorted) {
    if (rep.inner <= eps0 * rep.outer + C * rep.data) {
      rep.fitted_C = C;
      rep.fit_found = true;
      break;
    }
  }
  return rep;
}

}  // namespace sphereflow

#include "sphereflow/stereo.hpp"

#include <cmath>
#include <random>

#include "sphereflow/errors.hpp"

namespace sphereflow {

namespace {

constexpr double kPoleMargin = 1e-6;

Eigen::MatrixXd alignment_rotation(const SphereField& u0, bool& found) {
  const int n = u0.components();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < u0.size(); ++k) {
    for (int c = 0; c < n; ++c) mean[c] += u0.at(k)[c];
  }
  const double norm = mean.norm();
  found = norm > 1e-8 * static_cast<double>(u0.size());
  if (!found) return Eigen::MatrixXd::Identity(n, n);
  mean /= norm;
  Eigen::VectorXd w = mean;
  w[n - 1] -= 1.0;
  if (w.norm() < 1e-10) return Eigen::MatrixXd::Identity(n, n);
  // Householder reflection sending mean to e_{D+1}, then a reflection of the
  // first axis so that the determinant is +1 (e_{D+1} stays fixed).
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) - 2.0 * w * w.transpose() / w.squaredNorm();
  H.row(0) *= -1.0;
  return H;
}

// Rotated last component and |v|^2 of one node.
void rotated_node(const Eigen::MatrixXd& R, std::span<const double> u, double& last, double& v2) {
  const int n = static_cast<int>(u.size());
  Eigen::Map<const Eigen::VectorXd> uv(u.data(), n);
  const Eigen::VectorXd r = R * uv;
  last = r[n - 1];
  double s = 0.0;
  for (int i = 0; i + 1 < n; ++i) s += r[i] * r[i];
  const double denom = 1.0 + last;
  v2 = s / (denom * denom);
}

void track_state(const Eigen::MatrixXd& R, const SphereField& u, double& max_w, double& min_last, double& max_v2,
                 bool& near_pole) {
  max_w = 0.0;
  min_last = 1e300;
  max_v2 = 0.0;
  near_pole = false;
  for (std::size_t k = 0; k < u.size(); ++k) {
    double last, v2;
    rotated_node(R, u.at(k), last, v2);
    min_last = std::min(min_last, last);
    if (last <= -1.0 + kPoleMargin) {
      near_pole = true;
      continue;
    }
    max_v2 = std::max(max_v2, v2);
    max_w = std::max(max_w, stereo_w(v2));
  }
}

}  // namespace

StereoField::StereoField(GridPtr grid, int target_dim) : grid_(std::move(grid)), target_dim_(target_dim) {
  require(grid_ != nullptr, ErrorCode::InvalidArgument, "stereo field needs a grid");
  values_.assign(grid_->size() * static_cast<std::size_t>(target_dim_), 0.0);
}

StereoField to_stereo(const SphereField& u) {
  const int D = u.target_dim();
  StereoField v(u.grid_ptr(), D);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto uk = u.at(k);
    if (uk[D] <= -1.0 + kPoleMargin) {
      fail(ErrorCode::PoleProximity, "node " + std::to_string(k) + " is within 1e-6 of the south pole");
    }
    auto vk = v.at(k);
    for (int i = 0; i < D; ++i) vk[i] = uk[i] / (1.0 + uk[D]);
  }
  return v;
}

SphereField from_stereo(const StereoField& v) {
  const int D = v.target_dim();
  SphereField u(v.grid_ptr(), D);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto vk = v.at(k);
    double s = 0.0;
    for (double x : vk) s += x * x;
    auto uk = u.at(k);
    for (int i = 0; i < D; ++i) uk[i] = 2.0 * vk[i] / (1.0 + s);
    uk[D] = (1.0 - s) / (1.0 + s);
  }
  return u;
}

double stereo_w(double x) { return x / (1.0 + x * x); }

double stereo_w_integrand(double t) {
  const double q = 1.0 + t * t;
  return (1.0 - t * t) / (q * q);
}

nlohmann::json OneSidedReport::to_json() const {
  nlohmann::json rot = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rotation.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < rotation.cols(); ++j) row.push_back(rotation(i, j));
    rot.push_back(row);
  }
  nlohmann::json j = {{"rotation_found", rotation_found},
                      {"rotation", rot},
                      {"min_last_component", min_last_component},
                      {"theta0", theta0},
                      {"pass", pass},
                      {"band", band},
                      {"failure", failure},
                      {"identity_residual_max", identity_residual_max},
                      {"identity_residual_mean", identity_residual_mean},
                      {"identity_samples", identity_samples},
                      {"track_length", track.size()}};
  j["failed_step"] = failed_step ? nlohmann::json(*failed_step) : nlohmann::json(nullptr);
  if (!track.empty()) {
    j["initial_max_w"] = track.front().max_w;
    double peak = 0.0, low = 1e300;
    for (const WTrackRow& r : track) {
      peak = std::max(peak, r.max_w);
      low = std::min(low, r.min_last_component);
    }
    j["peak_max_w"] = peak;
    j["min_last_component_over_run"] = low;
  }
  return j;
}

OneSidedReport one_sided_check(const SphereField& u0) {
  OneSidedReport rep;
  rep.rotation = alignment_rotation(u0, rep.rotation_found);
  double max_w, min_last, max_v2;
  bool near_pole;
  track_state(rep.rotation, u0, max_w, min_last, max_v2, near_pole);
  rep.min_last_component = min_last;
  rep.pass = rep.rotation_found && min_last > 0.0;
  rep.theta0 = rep.pass ? 0.5 * (1.0 - std::sqrt(max_v2)) : 0.0;
  if (!rep.rotation_found) rep.failure = "no rotation found: mean direction of the data vanishes";
  else if (!rep.pass) rep.failure = "rotated data leaves the open upper hemisphere";
  return rep;
}

OneSidedMonitor::OneSidedMonitor(const SphereField& u0, double dt, double band_factor) {
  report_ = one_sided_check(u0);
  report_.band = 1e-6 + band_factor * dt;
}

void OneSidedMonitor::observe(std::size_t step, double t, const SphereField& u) {
  double max_w, min_last, max_v2;
  bool near_pole;
  track_state(report_.rotation, u, max_w, min_last, max_v2, near_pole);
  report_.track.push_back({step, t, max_w, min_last});
  if (!started_) {
    initial_max_w_ = max_w;
    started_ = true;
  }
  if (!report_.pass || report_.failed_step) return;
  if (near_pole) {
    report_.pass = false;
    report_.failed_step = step;
    report_.failure = "pole proximity";
  } else if (min_last <= 0.0) {
    report_.pass = false;
    report_.failed_step = step;
    report_.failure = "left the upper hemisphere";
  } else if (max_w > initial_max_w_ + report_.band) {
    report_.pass = false;
    report_.failed_step = step;
    report_.failure = "max W(|v|^2) exceeded its initial value plus the band";
  }
}

OneSidedReport one_sided_monitor(const Trajectory& traj, double band_factor, std::size_t identity_samples,
                                 std::uint64_t seed) {
  require(!traj.snapshots.empty(), ErrorCode::InvalidArgument, "empty trajectory");
  OneSidedMonitor monitor(traj.snapshots.front().field, traj.dt, band_factor);
  for (const Snapshot& s : traj.snapshots) monitor.observe(s.step, s.t, s.field);
  OneSidedReport rep = monitor.report();
  if (!rep.pass || traj.snapshots.size() < 2 || identity_samples == 0) return rep;

  // residual of dW/dt - Lap W + 4 |grad v|^2/(1 + |v|^2)^2 at random interior
  // nodes whose axis neighbours are all interior
  const Grid& g = traj.grid();
  const int d = g.dim();
  const double h = g.spacing();
  std::vector<std::size_t> candidates;
  for (std::size_t k : g.interior_nodes()) {
    bool ok = true;
    for (int a = 0; a < d && ok; ++a) {
      for (int s : {-1, 1}) ok = ok && g.is_interior(static_cast<std::size_t>(g.neighbor(k, a, s)));
    }
    if (ok) candidates.push_back(k);
  }
  if (candidates.empty()) return rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_time(0, traj.snapshots.size() - 2);
  std::uniform_int_distribution<std::size_t> pick_node(0, candidates.size() - 1);
  const int D = traj.target_dim();
  auto v_at = [&](const SphereField& u, std::size_t k, std::vector<double>& v) {
    const Eigen::Map<const Eigen::VectorXd> uv(u.at(k).data(), D + 1);
    const Eigen::VectorXd r = rep.rotation * uv;
    v.resize(D);
    for (int i = 0; i < D; ++i) v[i] = r[i] / (1.0 + r[D]);
  };
  auto w_at = [&](const SphereField& u, std::size_t k) {
    std::vector<double> v;
    v_at(u, k, v);
    double s = 0.0;
    for (double x : v) s += x * x;
    return stereo_w(s);
  };
  double sum = 0.0, peak = 0.0;
  std::vector<double> vp, vm, v0;
  for (std::size_t n = 0; n < identity_samples; ++n) {
    const std::size_t i = pick_time(rng);
    const std::size_t k = candidates[pick_node(rng)];
    const SphereField& u = traj.snapshots[i].field;
    const SphereField& un = traj.snapshots[i + 1].field;
    const double dt = traj.snapshots[i + 1].t - traj.snapshots[i].t;
    const double w0 = w_at(u, k);
    double lap = 0.0, grad2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const auto kp = static_cast<std::size_t>(g.neighbor(k, a, +1));
      const auto km = static_cast<std::size_t>(g.neighbor(k, a, -1));
      lap += (w_at(u, kp) + w_at(u, km) - 2.0 * w0) / (h * h);
      v_at(u, kp, vp);
      v_at(u, km, vm);
      for (int c = 0; c < D; ++c) grad2 += std::pow((vp[c] - vm[c]) / (2.0 * h), 2);
    }
    v_at(u, k, v0);
    double v2 = 0.0;
    for (double x : v0) v2 += x * x;
    const double residual = (w_at(un, k) - w0) / dt - lap + 4.0 * grad2 / std::pow(1.0 + v2, 2);
    sum += std::abs(residual);
    peak = std::max(peak, std::abs(residual));
  }
  rep.identity_residual_max = peak;
  rep.identity_residual_mean = sum / static_cast<double>(identity_samples);
  rep.identity_samples = identity_samples;
  return rep;
}

}  // namespace sphereflow

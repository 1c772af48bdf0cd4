#include "uwbsel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace uwbsel {

TrajectoryProfile::TrajectoryProfile(const Vec3& start,
                                     std::vector<TrajectorySegment> segments,
                                     double yaw_rate_rad_s)
    : start_(start), segments_(std::move(segments)), yaw_rate_(yaw_rate_rad_s) {
  if (!start_.allFinite() || !std::isfinite(yaw_rate_)) {
    throw ScenarioError("trajectory: nonfinite start or yaw rate");
  }
  if (segments_.empty()) {
    throw ScenarioError("trajectory: needs at least one segment");
  }
  seg_start_.reserve(segments_.size());
  for (const auto& seg : segments_) {
    if (!seg.to.allFinite()) {
      throw ScenarioError("trajectory: nonfinite waypoint");
    }
    if (!(seg.duration_s > 0.0) || !std::isfinite(seg.duration_s)) {
      // A zero-duration waypoint change is a velocity discontinuity.
      throw ScenarioError(
          "trajectory: segment duration must be positive "
          "(instantaneous moves make velocity discontinuous)");
    }
    seg_start_.push_back(total_);
    total_ += seg.duration_s;
  }
}

TrajectoryProfile TrajectoryProfile::hover(const Vec3& position,
                                           double duration_s) {
  return TrajectoryProfile(position, {{position, duration_s}});
}

TrajectoryProfile TrajectoryProfile::default_flight() {
  const double z = 2.0;
  const double amp = 1.5;
  std::vector<TrajectorySegment> segs = {
      {Vec3(0, 0, z), 1.0},     // takeoff
      {Vec3(0, 0, z), 2.0},     // hover
      {Vec3(0, amp, z), 2.0},   // lateral sweep along y
      {Vec3(0, -amp, z), 4.0},  //
      {Vec3(0, 0, z), 2.0},     //
      {Vec3(0, 0, 0), 1.0},     // land at the origin
  };
  return TrajectoryProfile(Vec3::Zero(), std::move(segs));
}

TruthState TrajectoryProfile::sample(double t) const {
  TruthState s;
  s.t = t;

  const double tc = std::clamp(t, 0.0, total_);
  auto it = std::upper_bound(seg_start_.begin(), seg_start_.end(), tc);
  const std::size_t k = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, (it - seg_start_.begin()) - 1));
  const Vec3 from = (k == 0) ? start_ : segments_[k - 1].to;
  const Vec3 d = segments_[k].to - from;
  const double T = segments_[k].duration_s;
  const double tau = (tc - seg_start_[k]) / T;

  s.x = from + d * (tau * tau * (3.0 - 2.0 * tau));
  s.v = d * (6.0 * tau * (1.0 - tau) / T);
  s.a = d * ((6.0 - 12.0 * tau) / (T * T));
  if (t >= total_) {
    s.x = segments_.back().to;
    s.v.setZero();
    s.a.setZero();
  }

  s.R = rotvec_to_rotation(Vec3(0.0, 0.0, yaw_rate_ * t));
  s.omega = Vec3(0.0, 0.0, yaw_rate_);
  return s;
}

std::vector<TruthState> generate_trajectory(const TrajectoryProfile& profile,
                                            double dt, double duration) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ScenarioError("generate_trajectory: dt must be positive");
  }
  if (duration < 0.0) {
    duration = profile.total_duration();
  }
  const long n = std::lround(duration / dt);
  std::vector<TruthState> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    out.push_back(profile.sample(static_cast<double>(i) * dt));
  }
  return out;
}

ImuSample synth_imu(const TruthState& truth, const NoiseParams& noise,
                    GaussianRng& rng) {
  ImuSample s;
  s.t = truth.t;
  s.alpha_m =
      truth.R.inverse() * (truth.a - kGravity) + rng.gaussian3(noise.sigma_alpha);
  s.gamma = truth.omega + rng.gaussian3(noise.sigma_gamma);
  return s;
}

RangeMeasurement synth_range(const TruthState& truth, const Anchor& anchor,
                             const NoiseParams& noise, GaussianRng& rng) {
  RangeMeasurement m;
  m.t = truth.t;
  m.anchor_id = anchor.id;
  m.rho = std::max(0.0, (truth.x - anchor.p).norm() +
                            rng.gaussian(noise.sigma_rho));
  return m;
}

}  // namespace uwbsel

#pragma once

#include <vector>

#include "uwbsel/errors.hpp"
#include "uwbsel/rng.hpp"
#include "uwbsel/so3.hpp"

namespace uwbsel {

/// World-frame gravity, z-up convention.
inline const Vec3 kGravity{0.0, 0.0, -9.81};

/// Per-axis measurement noise standard deviations. Used both to corrupt
/// synthesized sensor outputs and as the filter's process/measurement noise.
struct NoiseParams {
  double sigma_alpha = 0.05;  // accelerometer, m/s^2
  double sigma_gamma = 0.01;  // rate gyroscope, rad/s
  double sigma_rho = 0.1;     // range, m

  double range_variance() const { return sigma_rho * sigma_rho; }
  bool valid() const {
    return std::isfinite(sigma_alpha) && sigma_alpha >= 0.0 &&
           std::isfinite(sigma_gamma) && sigma_gamma >= 0.0 &&
           std::isfinite(sigma_rho) && sigma_rho >= 0.0;
  }
};

struct ImuSample {
  double t = 0.0;
  Vec3 alpha_m = Vec3::Zero();  // proper acceleration, body frame
  Vec3 gamma = Vec3::Zero();    // angular velocity, body frame
};

struct RangeMeasurement {
  double t = 0.0;
  int anchor_id = -1;
  double rho = 0.0;  // m, >= 0
};

struct Anchor {
  int id = -1;
  Vec3 p = Vec3::Zero();  // fixed world position
};

/// Ground-truth rigid-body state at one instant.
struct TruthState {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  Rotation R;
  Vec3 omega = Vec3::Zero();  // body frame
};

/// One smooth move to a waypoint. A segment whose endpoint equals the
/// previous waypoint is a hover.
struct TrajectorySegment {
  Vec3 to = Vec3::Zero();
  double duration_s = 0.0;
};

/// Piecewise cubic (smoothstep) path through waypoints: position and
/// velocity are continuous everywhere, velocity is zero at segment joins,
/// acceleration is bounded within each segment. Attitude is level with an
/// optional constant yaw rate.
class TrajectoryProfile {
 public:
  TrajectoryProfile(const Vec3& start, std::vector<TrajectorySegment> segments,
                    double yaw_rate_rad_s = 0.0);

  static TrajectoryProfile hover(const Vec3& position, double duration_s);

  /// The flight shape used throughout: 1 s vertical takeoff to z = 2 m,
  /// 2 s hover, 8 s lateral sweep along y (+-1.5 m) in the x = 0 plane,
  /// 1 s landing at the origin. 12 s total.
  static TrajectoryProfile default_flight();

  double total_duration() const { return total_; }
  double yaw_rate() const { return yaw_rate_; }
  const Vec3& start() const { return start_; }
  const std::vector<TrajectorySegment>& segments() const { return segments_; }

  /// Exact analytic sample; beyond the last waypoint the position holds
  /// with zero velocity and acceleration.
  TruthState sample(double t) const;

 private:
  Vec3 start_;
  std::vector<TrajectorySegment> segments_;
  std::vector<double> seg_start_;  // start time of each segment
  double total_ = 0.0;
  double yaw_rate_ = 0.0;
};

/// Uniform sampling of a profile at step dt over [0, duration]
/// (duration < 0 means the profile's own length).
std::vector<TruthState> generate_trajectory(const TrajectoryProfile& profile,
                                            double dt, double duration = -1.0);

/// alpha_m = R^-1 (a - g) + nu_alpha, gamma = omega + nu_gamma.
/// Consumes exactly six Gaussian draws (3 accel, then 3 gyro).
ImuSample synth_imu(const TruthState& truth, const NoiseParams& noise,
                    GaussianRng& rng);

/// rho = |x - p_i| + nu_rho, clamped below at zero. One Gaussian draw.
RangeMeasurement synth_range(const TruthState& truth, const Anchor& anchor,
                             const NoiseParams& noise, GaussianRng& rng);

}  // namespace uwbsel

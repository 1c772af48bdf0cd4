#pragma once

#include "uwbsel/errors.hpp"
#include "uwbsel/sim.hpp"
#include "uwbsel/so3.hpp"

namespace uwbsel {

/// Below this estimate-to-anchor distance the range direction is undefined
/// and an update/score is rejected.
inline constexpr double kMinAnchorDistance = 1e-6;  // m

/// Regularization floors applied to the filter's own noise model (never to
/// the synthesized measurements). An exactly zero process/measurement noise
/// collapses the covariance to a numerically singular matrix within a few
/// dozen updates and the scalar innovation variance becomes roundoff junk.
/// The accelerometer floor is sized to the second-order integration error
/// of the 500 Hz discretization for aggressive indoor motion, so the filter
/// stays consistent when fed perfect sensors.
inline constexpr double kMinFilterSigmaAlpha = 0.02;   // m/s^2
inline constexpr double kMinFilterSigmaGamma = 1e-5;   // rad/s
inline constexpr double kMinFilterRangeVar = 1e-12;    // m^2

struct FilterParams {
  NoiseParams noise;  // process noise from the IMU terms, range variance r

  // Initial covariance diagonal. Yaw (the gravity-axis component) starts
  // much larger than roll/pitch: it is unobservable until horizontal motion.
  double init_sigma_pos = 0.5;   // m
  double init_sigma_vel = 0.1;   // m/s
  double init_sigma_att = 0.1;   // rad, roll/pitch
  double init_sigma_yaw = 1.0;   // rad

  /// Innovation gate in standard deviations; 0 disables (the default —
  /// matching the reference setup, which uses no outlier rejection).
  double innovation_gate = 0.0;

  /// Scale on the random initial-position perturbation applied by the
  /// harness; 0 starts the filter exactly on the truth.
  double init_perturbation_scale = 1.0;

  /// When true, reset_attitude() also rotates the attitude-error covariance
  /// block by the first-order reset Jacobian I - 0.5 skew(delta). Off by
  /// default: with a strongly anisotropic attitude covariance (yaw sigma
  /// 1 rad against cm-grade roll/pitch) the noise-driven reset sequence
  /// leaks 30-80% of the yaw variance while the vehicle hovers, i.e. it
  /// manufactures observability that is not there. The classical reset
  /// (covariance untouched; the omitted terms are second order in the
  /// per-update |delta|, here sub-milliradian) keeps hover yaw variance
  /// within 2%.
  bool reset_covariance_adjustment = false;

  Vec3 gravity = kGravity;

  bool valid() const {
    return noise.valid() && init_sigma_pos >= 0.0 && init_sigma_vel >= 0.0 &&
           init_sigma_att >= 0.0 && init_sigma_yaw >= 0.0 &&
           innovation_gate >= 0.0 && init_perturbation_scale >= 0.0 &&
           gravity.allFinite();
  }
};

/// Estimator mean: position, velocity, reference attitude and the attitude
/// error vector. delta_hat is zero at every filter-step boundary;
/// reset_attitude() folds it into R_ref.
struct StateEstimate {
  Vec3 x_hat = Vec3::Zero();
  Vec3 v_hat = Vec3::Zero();
  Rotation R_ref;
  Vec3 delta_hat = Vec3::Zero();
};

/// R_hat = R_ref (I + skew(delta_hat)), re-orthonormalized. Returns R_ref
/// exactly when delta_hat is zero.
Rotation composed_attitude(const StateEstimate& state);

/// Symmetric 9x9 covariance with (x, v, delta) ordering and named 3x3
/// blocks.
class Covariance {
 public:
  static constexpr int kDim = 9;

  Covariance() : m_(Mat9::Zero()) {}
  explicit Covariance(const Mat9& m) : m_(m) {}

  Mat9& full() { return m_; }
  const Mat9& full() const { return m_; }

  auto sigma_xx() const { return m_.block<3, 3>(0, 0); }
  auto sigma_xv() const { return m_.block<3, 3>(0, 3); }
  auto sigma_xd() const { return m_.block<3, 3>(0, 6); }
  auto sigma_vv() const { return m_.block<3, 3>(3, 3); }
  auto sigma_vd() const { return m_.block<3, 3>(3, 6); }
  auto sigma_dd() const { return m_.block<3, 3>(6, 6); }

  double trace() const { return m_.trace(); }

  void symmetrize() { m_ = (0.5 * (m_ + m_.transpose())).eval(); }

  bool is_symmetric(double rel_tol = 1e-9) const {
    const double scale = std::max(m_.cwiseAbs().maxCoeff(), 1e-300);
    return (m_ - m_.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Mat9> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Eigenvalue floor at -rel_tol * trace.
  bool is_psd(double rel_tol = 1e-9) const {
    return min_eigenvalue() >= -rel_tol * std::max(trace(), 0.0);
  }

 private:
  Mat9 m_;
};

struct EkfStats {
  long updates_applied = 0;
  long updates_gated = 0;
  long large_delta_warnings = 0;  // reset with |delta_hat| > 0.5 rad
};

/// Full state/covariance snapshot for logging.
struct Snapshot {
  Vec3 x_hat;
  Vec3 v_hat;
  Rotation attitude;  // composed
  Mat9 covariance;
};

/// 9-state error-state EKF: IMU-driven prediction, scalar range updates,
/// attitude-error reset. Angular velocity is never a state; the gyro
/// output enters the prediction directly.
class Ekf {
 public:
  static constexpr int kStateDim = Covariance::kDim;

  Ekf(const FilterParams& params, const StateEstimate& init_state,
      const Covariance& init_cov);

  static Covariance initial_covariance(const FilterParams& params);

  /// Mean: second-order position, first-order velocity, exponential-map
  /// attitude. Covariance: F Sigma F^T + Q with the first-order discrete
  /// Jacobian of the (x, v, delta) error dynamics.
  void predict(const ImuSample& imu, double dt);

  /// Scalar Kalman correction from one range. Leaves delta_hat set; callers
  /// follow with reset_attitude(). Returns false when the innovation gate
  /// (if enabled) rejects the measurement.
  bool range_update(const RangeMeasurement& meas, const Anchor& anchor);

  /// Folds delta_hat into R_ref and applies the first-order reset Jacobian
  /// to the covariance. Exact no-op when delta_hat is zero.
  void reset_attitude();

  Rotation composed_attitude() const {
    return uwbsel::composed_attitude(state_);
  }

  const StateEstimate& state() const { return state_; }
  const Covariance& covariance() const { return cov_; }
  const FilterParams& params() const { return params_; }
  const EkfStats& stats() const { return stats_; }

  Snapshot snapshot() const {
    return Snapshot{state_.x_hat, state_.v_hat, composed_attitude(),
                    cov_.full()};
  }

 private:
  FilterParams params_;
  double range_var_;
  StateEstimate state_;
  Covariance cov_;
  EkfStats stats_;
};

}  // namespace uwbsel

#include "uwbsel/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace uwbsel {

static_assert(Ekf::kStateDim == 9,
              "stochastic state is (x, v, delta), nothing else");

Rotation composed_attitude(const StateEstimate& state) {
  if (state.delta_hat.isZero()) {
    return state.R_ref;
  }
  return Rotation::orthonormalized(
      state.R_ref.matrix() * (Mat3::Identity() + skew(state.delta_hat)));
}

Ekf::Ekf(const FilterParams& params, const StateEstimate& init_state,
         const Covariance& init_cov)
    : params_(params),
      range_var_(
          std::max(params.noise.range_variance(), kMinFilterRangeVar)),
      state_(init_state),
      cov_(init_cov) {
  if (!params_.valid()) {
    throw FilterError("ekf: invalid filter parameters");
  }
  params_.noise.sigma_alpha =
      std::max(params_.noise.sigma_alpha, kMinFilterSigmaAlpha);
  params_.noise.sigma_gamma =
      std::max(params_.noise.sigma_gamma, kMinFilterSigmaGamma);
  if (!state_.x_hat.allFinite() || !state_.v_hat.allFinite() ||
      !state_.R_ref.is_valid() || !state_.delta_hat.allFinite()) {
    throw FilterError("ekf: invalid initial state");
  }
}

Covariance Ekf::initial_covariance(const FilterParams& params) {
  Mat9 m = Mat9::Zero();
  m.block<3, 3>(0, 0) =
      params.init_sigma_pos * params.init_sigma_pos * Mat3::Identity();
  m.block<3, 3>(3, 3) =
      params.init_sigma_vel * params.init_sigma_vel * Mat3::Identity();
  m(6, 6) = params.init_sigma_att * params.init_sigma_att;
  m(7, 7) = params.init_sigma_att * params.init_sigma_att;
  m(8, 8) = params.init_sigma_yaw * params.init_sigma_yaw;
  return Covariance(m);
}

void Ekf::predict(const ImuSample& imu, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw FilterError("predict: dt must be positive");
  }
  if (!imu.alpha_m.allFinite() || !imu.gamma.allFinite()) {
    throw FilterError("predict: nonfinite IMU sample");
  }

  // delta_hat is zero between steps, so the composed attitude is R_ref.
  const Mat3 R = state_.R_ref.matrix();
  const Vec3 acc_w = R * imu.alpha_m + params_.gravity;

  state_.x_hat += state_.v_hat * dt + (0.5 * dt * dt) * acc_w;
  state_.v_hat += acc_w * dt;
  state_.R_ref = state_.R_ref * rotvec_to_rotation(imu.gamma * dt);

  // First-order discretization of the error dynamics:
  //   d(x)/dt = v,  d(v)/dt = -R skew(alpha_m) delta + R nu_alpha,
  //   d(delta)/dt = -skew(gamma) delta - nu_gamma.
  Mat9 F = Mat9::Identity();
  F.block<3, 3>(0, 3) = dt * Mat3::Identity();
  F.block<3, 3>(3, 6) = -dt * (R * skew(imu.alpha_m));
  F.block<3, 3>(6, 6) = Mat3::Identity() - dt * skew(imu.gamma);

  // Per-sample IMU noise enters velocity as R nu_alpha dt (isotropic, so
  // the R conjugation drops) and attitude as nu_gamma dt.
  const double qv = params_.noise.sigma_alpha * dt;
  const double qd = params_.noise.sigma_gamma * dt;
  Mat9 Q = Mat9::Zero();
  Q.block<3, 3>(3, 3) = qv * qv * Mat3::Identity();
  Q.block<3, 3>(6, 6) = qd * qd * Mat3::Identity();

  cov_.full() = F * cov_.full() * F.transpose() + Q;
  cov_.symmetrize();
}

bool Ekf::range_update(const RangeMeasurement& meas, const Anchor& anchor) {
  if (!std::isfinite(meas.rho)) {
    throw FilterError("range_update: nonfinite measurement");
  }
  const Vec3 d = state_.x_hat - anchor.p;
  const double dist = d.norm();
  if (dist <= kMinAnchorDistance) {
    throw FilterError("range_update: estimate coincides with anchor " +
                      std::to_string(anchor.id));
  }
  const Vec3 e = d / dist;  // measurement sensitivity: H = [e^T 0 0]

  const Mat9& S = cov_.full();
  const Vec9 cov_ht = S.block<9, 3>(0, 0) * e;  // Sigma H^T
  const double s = e.dot(S.block<3, 3>(0, 0) * e) + range_var_;
  if (s <= 0.0) {
    throw FilterError("range_update: zero innovation variance for anchor " +
                      std::to_string(anchor.id));
  }

  const double innovation = meas.rho - dist;
  if (params_.innovation_gate > 0.0 &&
      innovation * innovation > params_.innovation_gate *
                                    params_.innovation_gate * s) {
    ++stats_.updates_gated;
    return false;
  }

  const Vec9 gain = cov_ht / s;
  state_.x_hat += gain.segment<3>(0) * innovation;
  state_.v_hat += gain.segment<3>(3) * innovation;
  state_.delta_hat += gain.segment<3>(6) * innovation;

  // Sigma <- (I - K H) Sigma, then symmetrize. H Sigma == (Sigma H^T)^T
  // because Sigma is symmetric. Joseph form is the test oracle.
  cov_.full() -= gain * cov_ht.transpose();
  cov_.symmetrize();

  ++stats_.updates_applied;
  return true;
}

void Ekf::reset_attitude() {
  const Vec3 delta = state_.delta_hat;
  if (delta.isZero()) {
    return;
  }
  if (delta.norm() > 0.5) {
    ++stats_.large_delta_warnings;
  }

  state_.R_ref = state_.R_ref * rotvec_to_rotation(delta);
  state_.delta_hat = Vec3::Zero();

  if (params_.reset_covariance_adjustment) {
    // First-order basis rotation of the attitude-error block: rotating the
    // reference by delta maps the remaining error as
    // delta' = (I - 0.5 skew(delta)) (delta_old - delta); position and
    // velocity errors are untouched.
    Mat9 J = Mat9::Identity();
    J.block<3, 3>(6, 6) = Mat3::Identity() - 0.5 * skew(delta);
    cov_.full() = J * cov_.full() * J.transpose();
    cov_.symmetrize();
  }
}

}  // namespace uwbsel

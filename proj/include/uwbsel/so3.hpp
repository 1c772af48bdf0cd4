#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbsel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

inline constexpr double kPi = 3.14159265358979323846;

inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }
inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }

/// Skew-symmetric matrix of v, so that skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  // clang-format off
  m <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return m;
}

/// A 3x3 matrix constrained to SO(3): orthonormal, determinant +1.
/// Products, transposes and the exponential map stay on the manifold;
/// arbitrary matrices enter only through from_matrix() (validating) or
/// orthonormalized() (projecting).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Wraps a matrix that must already satisfy the SO(3) invariants
  /// (orthonormal and det +1 within `tol` elementwise).
  static Rotation from_matrix(const Mat3& m, double tol = 1e-9) {
    if (!m.allFinite()) {
      throw std::invalid_argument("Rotation: matrix has nonfinite entries");
    }
    const double ortho_err =
        (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det_err = std::abs(m.determinant() - 1.0);
    if (ortho_err > tol || det_err > tol) {
      throw std::invalid_argument("Rotation: matrix is not in SO(3)");
    }
    return Rotation(m);
  }

  /// Caller guarantees orthonormality (e.g. product of valid rotations).
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }

  /// Nearest rotation to an arbitrary matrix, by polar decomposition.
  static Rotation orthonormalized(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
      u.col(2) = -u.col(2);
    }
    return Rotation(u * v.transpose());
  }

  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose()); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }

  bool is_valid(double tol = 1e-9) const {
    return m_.allFinite() &&
           (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff() <=
               tol &&
           std::abs(m_.determinant() - 1.0) <= tol;
  }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Exponential map: exact Rodrigues formula, with a second-order series
/// below 1e-7 rad where sin(theta)/theta loses accuracy.
inline Rotation rotvec_to_rotation(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = skew(phi);
  Mat3 m;
  if (theta < 1e-7) {
    m = Mat3::Identity() + w + 0.5 * w * w;
  } else {
    m = Mat3::Identity() + (std::sin(theta) / theta) * w +
        ((1.0 - std::cos(theta)) / theta2) * (w * w);
  }
  return Rotation::from_matrix_unchecked(m);
}

/// Geodesic angle between two rotations in degrees, in [0, 180].
inline double rotation_angle_deg(const Rotation& a, const Rotation& b) {
  const double tr = (a.matrix().transpose() * b.matrix()).trace();
  const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

/// ZYX Euler angles (roll, pitch, yaw) in degrees. Logging helper only;
/// all estimation runs on rotation matrices.
inline Vec3 rotation_to_rpy_deg(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double roll = std::atan2(m(2, 1), m(2, 2));
  const double pitch = std::asin(std::clamp(-m(2, 0), -1.0, 1.0));
  const double yaw = std::atan2(m(1, 0), m(0, 0));
  return Vec3(rad_to_deg(roll), rad_to_deg(pitch), rad_to_deg(yaw));
}

}  // namespace uwbsel

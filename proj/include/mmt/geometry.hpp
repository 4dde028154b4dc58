#pragma once

#include <Eigen/Core>
#include <stdexcept>

// Poses, camera intrinsics, projection, local pose variation, and the
// analytic Jacobians shared by all modalities. All operations are pure;
// all types are immutable values.

namespace mmt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat2x3 = Eigen::Matrix<double, 2, 3>;
using Mat3x6 = Eigen::Matrix<double, 3, 6>;

struct BehindCameraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double px = 0.0;
  double py = 0.0;
  int width = 0;
  int height = 0;
};

// Rigid transform, by convention body/model frame -> camera frame.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return R * p + t; }
  Pose operator*(const Pose& other) const {
    return {R * other.R, R * other.t + t};
  }
  Pose inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
};

// Local pose perturbation in the model frame: rotation (axis-angle, rad)
// stacked over translation (m).
struct Variation {
  Vec3 rot = Vec3::Zero();
  Vec3 trans = Vec3::Zero();

  static Variation from_vec6(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  Vec6 to_vec6() const {
    Vec6 v;
    v << rot, trans;
    return v;
  }
};

Mat3 skew(const Vec3& v);

// exp([w]x) via Rodrigues' formula; second-order series below 1e-8 rad.
Mat3 rotation_exp(const Vec3& w);

// Inverse of rotation_exp: axis-angle vector with angle in [0, pi].
Vec3 rotation_log(const Mat3& r);

// acos((trace(R1^T R2) - 1) / 2) with the argument clamped to [-1, 1].
double geodesic_angle(const Mat3& r1, const Mat3& r2);

// Nearest rotation matrix (polar decomposition via SVD).
Mat3 orthonormalize(const Mat3& r);

inline Vec3 transform(const Pose& pose, const Vec3& p) { return pose * p; }

// Pinhole projection of a camera-frame point (Z > 0).
Vec2 project(const Vec3& p_camera, const Intrinsics& k);

// pose * [exp([theta_r]x), theta_t]; re-orthonormalizes on drift.
Pose apply_variation(const Pose& pose, const Variation& theta);

// d(project)/d(camera point): [[Z*fx, 0, -X*fx], [0, Z*fy, -Y*fy]] / Z².
Mat2x3 projection_jacobian(const Vec3& p_camera, const Intrinsics& k);

// d(camera point)/d(theta) at theta = 0: R * [-[p_model]x, I3].
Mat3x6 variation_jacobian(const Vec3& p_model, const Pose& pose);

}  // namespace mmt

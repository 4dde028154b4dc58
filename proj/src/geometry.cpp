#include "mmt/geometry.hpp"

#include <Eigen/SVD>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace mmt {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  const Mat3 wx = skew(w);
  if (angle < 1e-8) {
    return Mat3::Identity() + wx + 0.5 * (wx * wx);
  }
  const double s = std::sin(angle) / angle;
  const double c = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + s * wx + c * (wx * wx);
}

Vec3 rotation_log(const Mat3& r) {
  const double arg = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double angle = std::acos(arg);
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (angle < 1e-8) return 0.5 * vee;
  if (angle > std::numbers::pi - 1e-6) {
    // Near pi the vee part vanishes; (R + I)/2 approaches the axis outer
    // product a a^T, so the axis is the dominant column.
    const Mat3 m = 0.5 * (r + Mat3::Identity());
    int k = 0;
    if (m(1, 1) > m(k, k)) k = 1;
    if (m(2, 2) > m(k, k)) k = 2;
    Vec3 axis = m.col(k) / std::sqrt(std::max(m(k, k), 1e-12));
    return axis.normalized() * angle;
  }
  return vee * (angle / (2.0 * std::sin(angle)));
}

double geodesic_angle(const Mat3& r1, const Mat3& r2) {
  const double arg = ((r1.transpose() * r2).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(arg, -1.0, 1.0));
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 result = svd.matrixU() * svd.matrixV().transpose();
  if (result.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    result = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return result;
}

Vec2 project(const Vec3& p, const Intrinsics& k) {
  if (p.z() <= 0.0) throw BehindCameraError("project: point has Z <= 0");
  return {p.x() / p.z() * k.fx + k.px, p.y() / p.z() * k.fy + k.py};
}

Pose apply_variation(const Pose& pose, const Variation& theta) {
  Pose result{pose.R * rotation_exp(theta.rot), pose.R * theta.trans + pose.t};
  const Mat3 drift = result.R.transpose() * result.R - Mat3::Identity();
  if (drift.cwiseAbs().maxCoeff() > 1e-9) {
    result.R = orthonormalize(result.R);
  }
  return result;
}

Mat2x3 projection_jacobian(const Vec3& p, const Intrinsics& k) {
  if (p.z() <= 0.0)
    throw BehindCameraError("projection_jacobian: point has Z <= 0");
  const double z2 = p.z() * p.z();
  Mat2x3 j;
  j << p.z() * k.fx, 0.0, -p.x() * k.fx,  //
      0.0, p.z() * k.fy, -p.y() * k.fy;
  return j / z2;
}

Mat3x6 variation_jacobian(const Vec3& p_model, const Pose& pose) {
  Mat3x6 j;
  j.leftCols<3>() = -skew(p_model);
  j.rightCols<3>() = Mat3::Identity();
  return pose.R * j;
}

}  // namespace mmt

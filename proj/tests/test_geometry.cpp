#include <doctest.h>

#include <numbers>
#include <random>

#include "mmt/geometry.hpp"

using namespace mmt;

TEST_SUITE_BEGIN("geometry");

namespace {

Intrinsics make_k(double f, double px, double py) {
  return {f, f, px, py, 640, 480};
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Pose pose;
  pose.R = rotation_exp(Vec3(uni(rng), uni(rng), uni(rng)));
  pose.t = Vec3(0.2 * uni(rng), 0.2 * uni(rng), 1.0 + 0.5 * uni(rng));
  return pose;
}

}  // namespace

TEST_CASE("project matches the pinhole formula") {
  CHECK(project({0, 0, 1}, make_k(1, 0, 0)) == Vec2(0, 0));
  const Intrinsics k = make_k(600, 320, 240);
  CHECK(project({0.1, 0.2, 0.5}, k).isApprox(Vec2(440, 480), 1e-12));
  CHECK(project({-0.1, 0.2, 0.5}, k).isApprox(Vec2(200, 480), 1e-12));
  CHECK_THROWS_AS(project({0, 0, -1}, k), BehindCameraError);
  CHECK_THROWS_AS(project({0, 0, 0}, k), BehindCameraError);
}

TEST_CASE("transform applies R p + t") {
  CHECK(transform(Pose::identity(), {1, 2, 3}) == Vec3(1, 2, 3));
  Pose lift;
  lift.t = Vec3(0, 0, 1);
  CHECK(transform(lift, {0, 0, 0}) == Vec3(0, 0, 1));
  Pose quarter;  // 90 degrees about z, via the Rodrigues oracle
  quarter.R = rotation_exp(Vec3(0, 0, std::numbers::pi / 2));
  CHECK(transform(quarter, {1, 0, 0}).isApprox(Vec3(0, 1, 0), 1e-12));
}

TEST_CASE("apply_variation composes on the right") {
  std::mt19937_64 rng(1);
  const Pose pose = random_pose(rng);
  SUBCASE("zero variation is the identity") {
    const Pose same = apply_variation(pose, {});
    CHECK(same.R.isApprox(pose.R, 1e-15));
    CHECK(same.t.isApprox(pose.t, 1e-15));
  }
  SUBCASE("quarter turn about z maps x to y") {
    const Pose turned =
        apply_variation(Pose::identity(), {{0, 0, std::numbers::pi / 2}, {}});
    CHECK((turned * Vec3(1, 0, 0)).isApprox(Vec3(0, 1, 0), 1e-12));
  }
  SUBCASE("small angles match the linearized model") {
    const Vec3 w(1e-6, 0, 0);
    const Pose varied = apply_variation(Pose::identity(), {w, {}});
    const Mat3 linear = Mat3::Identity() + skew(w);
    CHECK((varied.R - linear).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("projection_jacobian closed form and finite differences") {
  CHECK(projection_jacobian({0, 0, 1}, make_k(1, 0, 0))
            .isApprox((Mat2x3() << 1, 0, 0, 0, 1, 0).finished(), 1e-15));

  const Intrinsics k = make_k(600, 320, 240);
  const Vec3 p(0.1, 0.2, 0.5);
  const Mat2x3 analytic = projection_jacobian(p, k);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec3 dp = Vec3::Zero();
    dp[i] = h;
    const Vec2 fd = (project(p + dp, k) - project(p - dp, k)) / (2 * h);
    CHECK((analytic.col(i) - fd).cwiseAbs().maxCoeff() < 1e-3);
  }

  // Homogeneity: scaling the point by s scales the Jacobian by 1/s.
  const double s = 3.7;
  CHECK((projection_jacobian(s * p, k) - analytic / s).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("variation_jacobian closed form") {
  CHECK(variation_jacobian(Vec3::Zero(), Pose::identity())
            .isApprox((Mat3x6() << Mat3::Zero(), Mat3::Identity()).finished(),
                      1e-15));

  // pose = identity, p = (0,0,1): first column of the rotation block.
  const Mat3x6 j = variation_jacobian({0, 0, 1}, Pose::identity());
  CHECK(j.col(0).isApprox(Vec3(0, -1, 0), 1e-15));

  std::mt19937_64 rng(2);
  const Pose pose = random_pose(rng);
  const Vec3 p(0.03, -0.05, 0.08);
  const Mat3x6 analytic = variation_jacobian(p, pose);
  const double h = 1e-7;
  for (int i = 0; i < 6; ++i) {
    Vec6 dv = Vec6::Zero();
    dv[i] = h;
    const Vec3 fd = (transform(apply_variation(pose, Variation::from_vec6(dv)), p) -
                     transform(apply_variation(pose, Variation::from_vec6(-dv)), p)) /
                    (2 * h);
    CHECK((analytic.col(i) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("variation round trip returns to the start") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = random_pose(rng);
    Variation theta;
    theta.rot = Vec3(uni(rng), uni(rng), uni(rng)).normalized() *
                (0.5 * std::abs(uni(rng)));
    theta.trans = 0.3 * Vec3(uni(rng), uni(rng), uni(rng));
    Variation inverse;
    inverse.rot = -theta.rot;
    // Right-composition: the exact inverse variation also un-rotates the
    // translation offset.
    inverse.trans = -(rotation_exp(theta.rot).transpose() * theta.trans);
    const Pose back = apply_variation(apply_variation(pose, theta), inverse);
    CHECK(geodesic_angle(back.R, pose.R) < 1e-6);
    CHECK((back.t - pose.t).norm() < 1e-9);
  }
}

TEST_CASE("composed pixel-vs-variation jacobian matches finite differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const Intrinsics k = make_k(600, 320, 240);
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    const Pose pose = random_pose(rng);
    Vec3 p_model(0.1 * uni(rng), 0.1 * uni(rng), 0.1 * uni(rng));
    const Vec3 p_camera = pose * p_model;
    if (p_camera.z() < 0.2 || p_camera.z() > 2.0) continue;

    const Eigen::Matrix<double, 2, 6> analytic =
        projection_jacobian(p_camera, k) * variation_jacobian(p_model, pose);
    for (int i = 0; i < 6; ++i) {
      Vec6 dv = Vec6::Zero();
      dv[i] = h;
      const Vec2 fd =
          (project(apply_variation(pose, Variation::from_vec6(dv)) * p_model, k) -
           project(apply_variation(pose, Variation::from_vec6(-dv)) * p_model, k)) /
          (2 * h);
      const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-6);
      CHECK((analytic.col(i) - fd).cwiseAbs().maxCoeff() / scale < 1e-4);
    }
  }
}

TEST_CASE("rotation stays orthonormal over chained variations") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Pose pose = Pose::identity();
  for (int i = 0; i < 100000; ++i) {
    Variation theta;
    theta.rot = 1e-2 * Vec3(uni(rng), uni(rng), uni(rng));
    theta.trans = 1e-3 * Vec3(uni(rng), uni(rng), uni(rng));
    pose = apply_variation(pose, theta);
  }
  CHECK((pose.R.transpose() * pose.R - Mat3::Identity()).cwiseAbs().maxCoeff() <
        1e-6);
  CHECK(std::abs(pose.R.determinant() - 1.0) < 1e-9);
}

TEST_CASE("rotation_log inverts rotation_exp") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 w = Vec3(uni(rng), uni(rng), uni(rng)).normalized() *
                   (3.1 * std::abs(uni(rng)));
    CHECK((rotation_log(rotation_exp(w)) - w).norm() < 1e-6);
  }
  CHECK(rotation_log(Mat3::Identity()).norm() == 0.0);
}

TEST_SUITE_END();

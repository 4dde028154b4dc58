#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <numbers>
#include <random>

#include "mmt/rasterizer.hpp"
#include "mmt/selfcheck.hpp"
#include "mmt/texture_modality.hpp"

using namespace mmt;

TEST_SUITE_BEGIN("texture");

namespace {

const Intrinsics kCam{600, 600, 320, 240, 640, 480};

ImageU8 uniform_image(int w, int h, std::uint8_t value) {
  return ImageU8(w, h, value);
}

BinaryDescriptor descriptor_with_bits(int bits) {
  BinaryDescriptor d;
  for (int i = 0; i < bits; ++i) d.words[i / 64] |= std::uint64_t(1) << (i % 64);
  return d;
}

bool negative_semidefinite(const Mat6& h) {
  Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
  return eig.eigenvalues().maxCoeff() < 1e-9;
}

}  // namespace

TEST_CASE("tukey norm values") {
  CHECK(tukey(0.0, 20.0) == 0.0);
  CHECK(tukey(20.0, 20.0) == doctest::Approx(400.0 / 6.0).epsilon(1e-12));
  CHECK(tukey(40.0, 20.0) == doctest::Approx(400.0 / 6.0).epsilon(1e-12));
  // x = c/2: (400/6) * (1 - (3/4)^3)
  CHECK(tukey(10.0, 20.0) ==
        doctest::Approx(400.0 / 6.0 * (1.0 - 0.421875)).epsilon(1e-12));
}

TEST_CASE("IRLS weights: surrogate equality below c, zero at and beyond") {
  const double c = 20.0;
  for (double r = 2e-6; r < c; r *= 1.37) {
    CHECK(std::abs(tukey_weight(r, c) * r * r - tukey(r, c)) < 1e-12);
  }
  CHECK(tukey_weight(c, c) == 0.0);
  CHECK(tukey_weight(5 * c, c) == 0.0);
  CHECK(tukey_weight(1e-9, c) == 0.5);  // analytic limit of tukey(r)/r²
  CHECK(selfcheck::max_tukey_consistency_error(c) < 1e-12);
}

TEST_CASE("detector on synthetic images") {
  OrbLikeExtractor extractor;
  SUBCASE("uniform image yields no keypoints") {
    const auto obs =
        extractor.detect_and_describe(uniform_image(300, 300, 128),
                                      {0, 0, 300, 300});
    CHECK(obs.empty());
  }
  SUBCASE("degenerate roi yields no keypoints") {
    ImageU8 img = uniform_image(300, 300, 128);
    CHECK(extractor.detect_and_describe(img, {50, 50, 50, 50}).empty());
  }
  SUBCASE("single high-contrast corner is found within 3 px") {
    ImageU8 img = uniform_image(200, 200, 40);
    for (int y = 100; y < 200; ++y)
      for (int x = 100; x < 200; ++x) img(x, y) = 220;
    const auto obs = extractor.detect_and_describe(img, {0, 0, 200, 200});
    REQUIRE(!obs.empty());
    bool near_corner = false;
    for (const auto& o : obs)
      near_corner |= (o.keypoint.pixel - Vec2(100, 100)).norm() <= 3.0;
    CHECK(near_corner);
  }
  SUBCASE("checkerboard with many corners caps at the maximum") {
    ImageU8 img(260, 260);
    for (int y = 0; y < 260; ++y)
      for (int x = 0; x < 260; ++x)
        img(x, y) = (((x / 10) + (y / 10)) % 2) ? 230 : 30;
    const auto obs = extractor.detect_and_describe(img, {0, 0, 260, 260});
    CHECK(obs.size() == 300);
  }
}

TEST_CASE("descriptors are rotation-steered") {
  // The same pattern rotated by 90 degrees should match itself closely.
  ImageU8 img(240, 240, 100);
  std::mt19937_64 rng(17);
  for (int y = 100; y < 140; ++y)
    for (int x = 100; x < 140; ++x)
      img(x, y) = std::uint8_t(40 + (rng() % 160));

  ImageU8 rotated(240, 240, 100);
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 240; ++x) {
      // rotate by 90 degrees about the image center
      const int rx = 120 + (y - 120);
      const int ry = 120 - (x - 120);
      if (rx >= 0 && rx < 240 && ry >= 0 && ry < 240)
        rotated(rx, ry) = img(x, y);
    }

  OrbLikeExtractor extractor({300, 1, 1.2, 20, 240});
  const auto a = extractor.detect_and_describe(img, {0, 0, 240, 240});
  const auto b = extractor.detect_and_describe(rotated, {0, 0, 240, 240});
  REQUIRE(!a.empty());
  REQUIRE(!b.empty());

  // For each keypoint in `a`, its rotated location should carry a similar
  // descriptor; random descriptors differ by ~128 bits.
  int compared = 0;
  double mean_distance = 0.0;
  for (const auto& oa : a) {
    const Vec2 target(120 + (oa.keypoint.pixel.y() - 120),
                      120 - (oa.keypoint.pixel.x() - 120));
    for (const auto& ob : b) {
      if ((ob.keypoint.pixel - target).norm() < 2.0) {
        mean_distance += hamming_distance(oa.descriptor, ob.descriptor);
        ++compared;
        break;
      }
    }
  }
  REQUIRE(compared >= 3);
  CHECK(mean_distance / compared < 60.0);
}

TEST_CASE("matching applies the ratio test against all keyframes") {
  TextureParams params;
  KeyframeStore store(params.max_keyframes);

  Keyframe kf;
  kf.orientation = Mat3::Identity();
  kf.entries.push_back({descriptor_with_bits(0), Vec3(0, 0, 1)});
  kf.entries.push_back({descriptor_with_bits(20), Vec3(0.01, 0, 1)});
  store.add(kf);

  auto query_with = [](BinaryDescriptor d) {
    std::vector<FeatureObservation> q(1);
    q[0].descriptor = d;
    q[0].keypoint.pixel = Vec2(11, 17);
    return q;
  };

  SUBCASE("best 10 vs second 20: ratio 0.5 valid") {
    const auto matches =
        match_features(query_with(descriptor_with_bits(10)), store, params);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].model_point == Vec3(0, 0, 1));
    CHECK(matches[0].observed == Vec2(11, 17));
  }
  SUBCASE("best 15 vs second 20: ratio 0.75 rejected") {
    KeyframeStore tight(params.max_keyframes);
    Keyframe kf2;
    kf2.orientation = Mat3::Identity();
    kf2.entries.push_back({descriptor_with_bits(0), Vec3(0, 0, 1)});
    kf2.entries.push_back({descriptor_with_bits(35), Vec3(0.01, 0, 1)});
    tight.add(kf2);
    // query has the low 15 bits set: distances 15 and 20
    const auto matches =
        match_features(query_with(descriptor_with_bits(15)), tight, params);
    CHECK(matches.empty());
  }
  SUBCASE("identical descriptor: ratio 0 valid") {
    const auto matches =
        match_features(query_with(descriptor_with_bits(0)), store, params);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].model_point == Vec3(0, 0, 1));
  }
  SUBCASE("empty store matches nothing") {
    KeyframeStore empty(params.max_keyframes);
    CHECK(match_features(query_with(descriptor_with_bits(3)), empty, params)
              .empty());
  }
  SUBCASE("each keyframe entry is used at most once; best query wins") {
    std::vector<FeatureObservation> queries(2);
    queries[0].descriptor = descriptor_with_bits(4);   // d0 = 4
    queries[0].keypoint.pixel = Vec2(1, 1);
    queries[1].descriptor = descriptor_with_bits(2);   // d0 = 2 (better)
    queries[1].keypoint.pixel = Vec2(2, 2);
    const auto matches = match_features(queries, store, params);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].observed == Vec2(2, 2));
  }
}

TEST_CASE("keyframe bookkeeping") {
  TextureParams params;
  KeyframeStore store(params.max_keyframes);
  Keyframe kf;
  kf.orientation = Mat3::Identity();
  kf.entries.push_back({descriptor_with_bits(1), Vec3(0, 0, 1)});
  store.add(kf);

  SUBCASE("same orientation is not new") {
    CHECK(!store.orientation_is_new(Mat3::Identity(), 10.0));
  }
  SUBCASE("15 degrees apart is new, 5 degrees is not") {
    const Mat3 r15 =
        rotation_exp(Vec3(0, 15.0 * std::numbers::pi / 180.0, 0));
    const Mat3 r5 = rotation_exp(Vec3(0, 5.0 * std::numbers::pi / 180.0, 0));
    CHECK(store.orientation_is_new(r15, 10.0));
    CHECK(!store.orientation_is_new(r5, 10.0));
  }
  SUBCASE("empty store accepts any orientation") {
    KeyframeStore empty(params.max_keyframes);
    CHECK(empty.orientation_is_new(Mat3::Identity(), 10.0));
  }
  SUBCASE("oldest keyframe evicted beyond capacity") {
    KeyframeStore small(2);
    for (int i = 0; i < 3; ++i) {
      Keyframe k2;
      k2.orientation = rotation_exp(Vec3(0, 0.5 * i, 0));
      k2.entries.push_back({descriptor_with_bits(i), Vec3(0, 0, 1)});
      small.add(k2);
    }
    CHECK(small.size() == 2);
    CHECK(small.entry_count() == 2);
    // the first keyframe (0.0 rad) is gone
    CHECK(small.orientation_is_new(Mat3::Identity(), 10.0));
  }
}

TEST_CASE("maybe_add_keyframe reconstructs unoccluded silhouette points") {
  // Textured plane rendered synthetically; keyframe points must reproject
  // onto their detected keypoints exactly.
  auto mesh = std::make_shared<TriangleMesh>(make_quad(0.3, 0.3));
  auto texture = std::make_shared<ImageRgb8>(128, 128);
  std::mt19937_64 rng(23);
  for (int by = 0; by < 128; by += 8)
    for (int bx = 0; bx < 128; bx += 8) {
      const Rgb8 c{std::uint8_t(rng()), std::uint8_t(rng()),
                   std::uint8_t(rng())};
      for (int y = by; y < by + 8; ++y)
        for (int x = bx; x < bx + 8; ++x) (*texture)(x, y) = c;
    }
  mesh->texture = texture;

  Pose pose;
  pose.t = Vec3(0, 0, 0.6);
  const RgbdFrame rendered =
      render_synthetic_rgbd({{mesh, pose, 1, 0, {}}}, kCam, {}, {0, 0, 1});

  TextureParams params;
  KeyframeStore store(params.max_keyframes);
  OrbLikeExtractor extractor(params.features);
  const ImageU8 gray = to_gray(rendered.color);

  REQUIRE(maybe_add_keyframe(pose, gray, rendered.depth, store, params, mesh,
                             extractor, kCam));
  REQUIRE(store.size() == 1);
  REQUIRE(!store.keyframes()[0].entries.empty());

  // Capture-pose reprojection lands on the silhouette; model points sit on
  // the plane z=0 in the model frame.
  for (const auto& entry : store.keyframes()[0].entries)
    REQUIRE(std::abs(entry.model_point.z()) < 1e-6);

  SUBCASE("same orientation: store unchanged") {
    CHECK(!maybe_add_keyframe(pose, gray, rendered.depth, store, params, mesh,
                              extractor, kCam));
    CHECK(store.size() == 1);
  }
  SUBCASE("occluded points are dropped") {
    // Fake measurement 50 mm in front of the render everywhere.
    ImageF closer = rendered.depth;
    for (auto& d : closer.data())
      if (d > 0) d -= 0.05f;
    Pose rotated = pose;
    rotated.R = rotation_exp(Vec3(0, 0.4, 0));
    KeyframeStore store2(params.max_keyframes);
    CHECK(!maybe_add_keyframe(pose, gray, closer, store2, params, mesh,
                              extractor, kCam));
    CHECK(store2.empty());
  }
}

TEST_CASE("keyframe entries reproject within 0.5 px of their keypoints") {
  auto mesh = std::make_shared<TriangleMesh>(make_box(0.1, 0.08, 0.06));
  auto texture = std::make_shared<ImageRgb8>(256, 256);
  std::mt19937_64 rng(29);
  for (int by = 0; by < 256; by += 10)
    for (int bx = 0; bx < 256; bx += 10) {
      const Rgb8 c{std::uint8_t(rng()), std::uint8_t(rng()),
                   std::uint8_t(rng())};
      for (int y = by; y < std::min(256, by + 10); ++y)
        for (int x = bx; x < std::min(256, bx + 10); ++x) (*texture)(x, y) = c;
    }
  mesh->texture = texture;

  Pose pose;
  pose.R = rotation_exp(Vec3(0.3, -0.2, 0.1));
  pose.t = Vec3(0.01, -0.02, 0.55);
  const RgbdFrame rendered =
      render_synthetic_rgbd({{mesh, pose, 1, 0, {}}}, kCam, {}, {0, 0, 1});

  TextureParams params;
  KeyframeStore store(params.max_keyframes);
  OrbLikeExtractor extractor(params.features);
  const ImageU8 gray = to_gray(rendered.color);
  const Roi roi = roi_from_points(mesh->vertices, pose, kCam);
  const auto observations = extractor.detect_and_describe(gray, roi);
  REQUIRE(maybe_add_keyframe(pose, gray, rendered.depth, store, params, mesh,
                             extractor, kCam, &observations));

  std::size_t checked = 0;
  for (const auto& entry : store.keyframes()[0].entries) {
    const Vec2 reprojected = project(pose * entry.model_point, kCam);
    // match against the observation it came from
    double best = 1e9;
    for (const auto& o : observations)
      best = std::min(best, (o.keypoint.pixel - reprojected).norm());
    REQUIRE(best < 0.5);
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("texture normal equations") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Pose pose;
  pose.t = Vec3(0, 0, 0.7);
  TextureParams params;

  SUBCASE("zero residuals: g = 0, H nonzero negative semidefinite") {
    std::vector<Match> matches(10);
    for (auto& m : matches) {
      m.model_point = Vec3(0.05 * uni(rng), 0.05 * uni(rng), 0.05 * uni(rng));
      m.observed = project(pose * m.model_point, kCam);
    }
    const NormalEquations ne =
        texture_normal_equations(matches, pose, kCam, params, 0);
    CHECK(ne.g.norm() < 1e-9);
    CHECK(ne.H.norm() > 0.0);
    CHECK((ne.H - ne.H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(negative_semidefinite(ne.H));
    for (const auto& m : matches) CHECK(m.weight == 0.5);
  }
  SUBCASE("saturated residual contributes nothing") {
    std::vector<Match> matches(1);
    matches[0].model_point = Vec3(0, 0, 0);
    matches[0].observed =
        project(pose * matches[0].model_point, kCam) + Vec2(50, 0);
    const NormalEquations ne =
        texture_normal_equations(matches, pose, kCam, params, 0);
    CHECK(matches[0].weight == 0.0);
    CHECK(matches[0].residual == doctest::Approx(50.0));
    CHECK(ne.g.norm() == 0.0);
    CHECK(ne.H.norm() == 0.0);
  }
  SUBCASE("behind-camera match is skipped") {
    std::vector<Match> matches(2);
    matches[0].model_point = Vec3(0, 0, 0);
    matches[0].observed = project(pose * matches[0].model_point, kCam);
    matches[1].model_point = Vec3(0, 0, -1.0);  // behind the camera
    matches[1].observed = Vec2(0, 0);
    CHECK_NOTHROW(texture_normal_equations(matches, pose, kCam, params, 0));
  }
  SUBCASE("gradient matches finite differences over random configurations") {
    CHECK(selfcheck::max_texture_gradient_error(100, 777) < 1e-4);
  }
  SUBCASE("output is invariant to match ordering") {
    std::vector<Match> matches(20);
    for (auto& m : matches) {
      m.model_point = Vec3(0.05 * uni(rng), 0.05 * uni(rng), 0.05 * uni(rng));
      m.observed =
          project(pose * m.model_point, kCam) + Vec2(3 * uni(rng), 3 * uni(rng));
    }
    auto reversed = matches;
    std::reverse(reversed.begin(), reversed.end());
    const NormalEquations a =
        texture_normal_equations(matches, pose, kCam, params, 0);
    const NormalEquations b =
        texture_normal_equations(reversed, pose, kCam, params, 0);
    CHECK((a.g - b.g).norm() < 1e-12);
    CHECK((a.H - b.H).norm() < 1e-10);
  }
  SUBCASE("doubling sigma scales g and H by exactly 1/4") {
    std::vector<Match> matches(15);
    for (auto& m : matches) {
      m.model_point = Vec3(0.05 * uni(rng), 0.05 * uni(rng), 0.05 * uni(rng));
      m.observed =
          project(pose * m.model_point, kCam) + Vec2(4 * uni(rng), 4 * uni(rng));
    }
    TextureParams narrow = params, wide = params;
    narrow.sigma_schedule = {5.0};
    wide.sigma_schedule = {10.0};
    const NormalEquations a =
        texture_normal_equations(matches, pose, kCam, narrow, 0);
    const NormalEquations b =
        texture_normal_equations(matches, pose, kCam, wide, 0);
    CHECK((a.g - 4.0 * b.g).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a.H - 4.0 * b.H).cwiseAbs().maxCoeff() < 1e-6);

    // Undamped Newton step is invariant to sigma (argmax invariance).
    OptimizerConfig cfg;
    cfg.lambda_r = cfg.lambda_t = 0.0;
    const Vec6 sa = solve_step(a, cfg).to_vec6();
    const Vec6 sb = solve_step(b, cfg).to_vec6();
    CHECK((sa - sb).norm() < 1e-9);
  }
  SUBCASE("sigma schedule uses the last value for remaining iterations") {
    std::vector<Match> matches(5);
    for (auto& m : matches) {
      m.model_point = Vec3(0.03 * uni(rng), 0.03 * uni(rng), 0.0);
      m.observed =
          project(pose * m.model_point, kCam) + Vec2(2 * uni(rng), uni(rng));
    }
    // schedule {10, 10, 3}: iterations 2 and 9 use sigma = 3.
    const NormalEquations at2 =
        texture_normal_equations(matches, pose, kCam, params, 2);
    const NormalEquations at9 =
        texture_normal_equations(matches, pose, kCam, params, 9);
    CHECK((at2.g - at9.g).norm() == 0.0);
  }
}

TEST_SUITE_END();

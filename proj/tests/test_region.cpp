#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <numbers>
#include <random>

#include "mmt/region_modality.hpp"
#include "mmt/selfcheck.hpp"
#include "mmt/tracker.hpp"

using namespace mmt;

TEST_SUITE_BEGIN("region");

namespace {

const Intrinsics kCam{600, 600, 320, 240, 640, 480};

std::shared_ptr<TriangleMesh> shared(TriangleMesh mesh) {
  return std::make_shared<TriangleMesh>(std::move(mesh));
}

Pose at_z(double z) {
  Pose pose;
  pose.t = Vec3(0, 0, z);
  return pose;
}

// Flat color image: `fg` inside the projected square silhouette of a quad of
// side `a` at depth z, `bg` outside, optionally shifted in x by px pixels.
ImageRgb8 two_color_image(double a, double z, Rgb8 fg, Rgb8 bg,
                          double shift_px = 0.0) {
  ImageRgb8 img(kCam.width, kCam.height, bg);
  const double half = a / 2.0 * kCam.fx / z;
  for (int y = 0; y < kCam.height; ++y)
    for (int x = 0; x < kCam.width; ++x) {
      const double dx = (x + 0.5) - kCam.px - shift_px;
      const double dy = (y + 0.5) - kCam.py;
      if (std::abs(dx) <= half && std::abs(dy) <= half) img(x, y) = fg;
    }
  return img;
}

ColorHistogramPair trained_histograms(Rgb8 fg, Rgb8 bg) {
  ColorHistogramPair hist;
  hist.update({fg}, {bg}, 1.0);
  return hist;
}

struct QuadFixture {
  std::shared_ptr<TriangleMesh> mesh = shared(make_quad(0.1, 0.1));
  SparseViewpointModel model;
  Pose pose = at_z(0.5);

  QuadFixture() {
    ModelGenConfig config;
    config.sphere_subdivisions = 1;
    model = generate_region_model(mesh, {}, 1, config);
  }
};

}  // namespace

TEST_CASE("histogram binning and posterior") {
  const Rgb8 red{220, 30, 20}, green{20, 210, 40};
  SUBCASE("two-color update concentrates mass") {
    ColorHistogramPair hist = trained_histograms(red, green);
    CHECK(hist.posterior_foreground(red) > 0.999);
    CHECK(hist.posterior_foreground(green) < 0.001);
    // unseen color: both histograms zero, smoothing gives 0.5
    CHECK(hist.posterior_foreground({128, 128, 255}) ==
          doctest::Approx(0.5));
  }
  SUBCASE("learning rate 0 leaves histograms unchanged") {
    ColorHistogramPair hist = trained_histograms(red, green);
    const auto fg_before = hist.foreground();
    hist.update({green}, {red}, 0.0);
    CHECK(hist.foreground() == fg_before);
  }
  SUBCASE("identical fg and bg colors: posterior 0.5") {
    ColorHistogramPair hist = trained_histograms(red, red);
    CHECK(hist.posterior_foreground(red) == doctest::Approx(0.5));
  }
  SUBCASE("histograms sum to one once initialized") {
    ColorHistogramPair hist = trained_histograms(red, green);
    double fg_sum = 0.0, bg_sum = 0.0;
    for (double v : hist.foreground()) fg_sum += v;
    for (double v : hist.background()) bg_sum += v;
    CHECK(fg_sum == doctest::Approx(1.0));
    CHECK(bg_sum == doctest::Approx(1.0));
  }
}

TEST_CASE("update_histograms learns the scene colors") {
  QuadFixture fix;
  const Rgb8 red{220, 30, 20}, green{20, 210, 40};
  const ImageRgb8 frame = two_color_image(0.1, 0.5, red, green);
  ColorHistogramPair hist;
  const int used =
      update_histograms(frame, fix.pose, fix.model, kCam, hist, 1.0);
  CHECK(used > 50);
  CHECK(hist.posterior_foreground(red) > 0.99);
  CHECK(hist.posterior_foreground(green) < 0.01);
}

TEST_CASE("correspondence line construction") {
  QuadFixture fix;
  const Rgb8 red{220, 30, 20}, green{20, 210, 40};
  const ColorHistogramPair hist = trained_histograms(red, green);
  RegionModalityConfig config;

  SUBCASE("perfect step at the contour: argmax at the center offset") {
    const ImageRgb8 frame = two_color_image(0.1, 0.5, red, green);
    const auto lines = build_correspondence_lines(frame, fix.pose, fix.model,
                                                  kCam, hist, config, 4);
    REQUIRE(int(lines.size()) >= config.min_lines);
    int centered = 0;
    for (const auto& line : lines) {
      REQUIRE(line.informative);
      const auto argmax =
          std::max_element(line.distribution.begin(), line.distribution.end()) -
          line.distribution.begin();
      centered += std::abs(int(argmax) - kLineHalf) <= 1;
      double sum = 0.0;
      for (double p : line.distribution) sum += p;
      REQUIRE(sum == doctest::Approx(1.0));
      REQUIRE(std::abs(line.mean_px) <= 1.5);
    }
    CHECK(centered >= int(lines.size() * 0.9));
  }
  SUBCASE("uninformative posteriors produce a uniform distribution") {
    // Unseen color everywhere: posterior 0.5 at every sample.
    const ImageRgb8 frame(kCam.width, kCam.height, Rgb8{128, 128, 255});
    const auto lines = build_correspondence_lines(frame, fix.pose, fix.model,
                                                  kCam, hist, config, 4);
    REQUIRE(!lines.empty());
    for (const auto& line : lines) {
      CHECK(!line.informative);
      for (double p : line.distribution)
        REQUIRE(p == doctest::Approx(1.0 / kLinePositions));
    }
  }
  SUBCASE("short free distances reject the line") {
    // Inflate the gate well beyond the stored cap.
    RegionModalityConfig strict = config;
    strict.min_continuous_segments = 1e6;
    const ImageRgb8 frame = two_color_image(0.1, 0.5, red, green);
    CHECK(build_correspondence_lines(frame, fix.pose, fix.model, kCam, hist,
                                     strict, 4)
              .empty());
  }
  SUBCASE("distribution is permutation-covariant under direction reversal") {
    // Reversing the line direction walks the same pixels in opposite order;
    // in the flipped frame the foreground posterior of each sample is the
    // background posterior of its mirror. The distribution must mirror.
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::array<double, kLinePositions> posteriors;
      for (auto& p : posteriors) p = uni(rng);
      std::array<double, kLinePositions> reversed;
      for (int i = 0; i < kLinePositions; ++i)
        reversed[i] = 1.0 - posteriors[kLinePositions - 1 - i];
      const auto forward = contour_location_distribution(posteriors, 0.36);
      const auto backward = contour_location_distribution(reversed, 0.36);
      for (int d = 0; d < kLinePositions; ++d)
        REQUIRE(backward[d] ==
                doctest::Approx(forward[kLinePositions - 1 - d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("region normal equations") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const Pose pose = at_z(0.6);
  RegionModalityConfig config;

  auto make_line = [&](const Vec3& model_point, double mean_px) {
    CorrespondenceLine line;
    line.model_point = model_point;
    line.center = project(pose * model_point, kCam);
    const double angle = std::numbers::pi * uni(rng);
    line.normal2d = Vec2(std::cos(angle), std::sin(angle));
    line.mean_px = mean_px;
    line.sigma2_px = 1.0;
    line.informative = true;
    return line;
  };

  SUBCASE("all lines peaked at zero offset: g = 0") {
    std::vector<CorrespondenceLine> lines;
    for (int i = 0; i < 12; ++i)
      lines.push_back(make_line(
          Vec3(0.04 * uni(rng), 0.04 * uni(rng), 0.02 * uni(rng)), 0.0));
    const NormalEquations ne =
        region_normal_equations(lines, pose, kCam, config);
    CHECK(ne.g.norm() < 1e-10);
    CHECK(ne.H.norm() > 0.0);
    Eigen::SelfAdjointEigenSolver<Mat6> eig(ne.H);
    CHECK(eig.eigenvalues().maxCoeff() < 1e-9);
  }
  SUBCASE("uniform (uninformative) lines contribute nothing") {
    std::vector<CorrespondenceLine> lines(5);
    for (auto& line : lines) {
      line = make_line(Vec3(0.02, 0.01, 0.0), 2.0);
      line.informative = false;
    }
    const NormalEquations ne =
        region_normal_equations(lines, pose, kCam, config);
    CHECK(ne.g.norm() == 0.0);
    CHECK(ne.H.norm() == 0.0);
  }
  SUBCASE("gradient matches finite differences") {
    CHECK(selfcheck::max_region_gradient_error(100, 888) < 1e-4);
  }
  SUBCASE("one-pixel target shift flips the translation gradient sign") {
    // Fronto-parallel: all normals along +x, target transition at +1 px
    // versus -1 px.
    std::vector<CorrespondenceLine> plus, minus;
    for (int i = 0; i < 10; ++i) {
      const Vec3 p(0.03 * uni(rng), 0.03 * uni(rng), 0.0);
      CorrespondenceLine line;
      line.model_point = p;
      line.center = project(pose * p, kCam);
      line.normal2d = Vec2(1, 0);
      line.sigma2_px = 1.0;
      line.informative = true;
      line.mean_px = 1.0;
      plus.push_back(line);
      line.mean_px = -1.0;
      minus.push_back(line);
    }
    const NormalEquations a = region_normal_equations(plus, pose, kCam, config);
    const NormalEquations b = region_normal_equations(minus, pose, kCam, config);
    CHECK(a.g[3] != 0.0);
    CHECK((a.g + b.g).norm() < 1e-9);  // exact antisymmetry of residuals
    CHECK((a.H - b.H).norm() < 1e-9);
  }
}

TEST_CASE("two identical modalities assemble to exactly double") {
  QuadFixture fix;
  const Rgb8 red{220, 30, 20}, green{20, 210, 40};
  const ImageRgb8 frame = two_color_image(0.1, 0.5, red, green);
  const ColorHistogramPair hist = trained_histograms(red, green);
  RegionModalityConfig config;

  const auto lines = build_correspondence_lines(frame, fix.pose, fix.model,
                                                kCam, hist, config, 4);
  REQUIRE(!lines.empty());
  const NormalEquations one = region_normal_equations(lines, fix.pose, kCam,
                                                      config);
  const NormalEquations both = assemble({one, one});
  CHECK((both.g - 2.0 * one.g).norm() == 0.0);
  CHECK((both.H - 2.0 * one.H).norm() == 0.0);
}

TEST_CASE("built lines only use stored (validation-surviving) points") {
  // The model never stores invalidated contour points, so every line's
  // model point must be one of the stored points of the closest view.
  QuadFixture fix;
  const Rgb8 red{220, 30, 20}, green{20, 210, 40};
  const ImageRgb8 frame = two_color_image(0.1, 0.5, red, green);
  const ColorHistogramPair hist = trained_histograms(red, green);
  const auto lines = build_correspondence_lines(
      frame, fix.pose, fix.model, kCam, hist, RegionModalityConfig{}, 0);
  const ViewpointView& view = closest_view(fix.model, fix.pose);
  for (const auto& line : lines) {
    bool stored = false;
    for (const auto& cp : view.contour_points)
      stored |= (cp.point == line.model_point);
    REQUIRE(stored);
  }
}

TEST_SUITE_END();

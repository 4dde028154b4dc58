#include <doctest.h>

#include <fstream>
#include <numbers>
#include <random>

#include "mmt/viewpoint_model.hpp"

using namespace mmt;

TEST_SUITE_BEGIN("model");

namespace {

std::shared_ptr<TriangleMesh> shared(TriangleMesh mesh) {
  return std::make_shared<TriangleMesh>(std::move(mesh));
}

TriangleMesh shifted(TriangleMesh mesh, const Vec3& offset) {
  for (auto& v : mesh.vertices) v += offset;
  return mesh;
}

ModelGenConfig small_config() {
  ModelGenConfig config;
  config.sphere_subdivisions = 1;  // 42 views, fast for unit tests
  return config;
}

// Fronto-parallel validation scene: bodies at given depths, viewed by a
// camera at the origin looking along +z.
struct FlatScene {
  RenderedFrame frame;
  BodyClassMap classes;
  Intrinsics k{600, 600, 160, 120, 320, 240};
};

FlatScene render_flat(const std::vector<std::tuple<TriangleMesh, BodyClass,
                                                   double>>& bodies) {
  FlatScene scene;
  std::vector<SceneBody> scene_bodies;
  std::uint8_t id = 1;
  for (const auto& [mesh, cls, z] : bodies) {
    Pose pose;
    pose.t = Vec3(0, 0, z);
    scene_bodies.push_back({shared(mesh), pose, id, 0, {}});
    scene.classes[id] = cls;
    ++id;
  }
  scene.frame = rasterize(scene_bodies, scene.k);
  return scene;
}

// Contour pixels of body 1 with outward normals, restricted to those whose
// normal points roughly along `direction` (unit 2D); empty direction = all.
struct ContourSample {
  Eigen::Vector2i px;
  Vec2 normal;
};

std::vector<ContourSample> main_contour(const FlatScene& scene,
                                        const Vec2& direction = Vec2::Zero()) {
  std::vector<ContourSample> out;
  for (const auto& contour : trace_contours(scene.frame, 1)) {
    for (std::size_t i = 0; i < contour.size(); ++i) {
      const Vec2 n = contour_normal(contour, i, scene.frame, 1);
      if (n.isZero()) continue;
      if (!direction.isZero() && n.dot(direction) < 0.9) continue;
      out.push_back({contour[i], n});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("icosphere direction counts") {
  CHECK(icosphere_directions(0).size() == 12);
  CHECK(icosphere_directions(1).size() == 42);
  CHECK(icosphere_directions(2).size() == 162);
  CHECK(icosphere_directions(3).size() == 642);
  for (const auto& d : icosphere_directions(2))
    REQUIRE(std::abs(d.norm() - 1.0) < 1e-12);
}

TEST_CASE("look_at_origin builds a valid camera pose") {
  for (const auto& dir : icosphere_directions(1)) {
    const Pose pose = look_at_origin(dir, 0.8);
    // Origin projects to the optical axis at the configured distance.
    const Vec3 origin_cam = pose * Vec3::Zero();
    REQUIRE(origin_cam.head<2>().norm() < 1e-12);
    REQUIRE(origin_cam.z() == doctest::Approx(0.8));
    REQUIRE((pose.R.transpose() * pose.R - Mat3::Identity())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("sphere region model: contour points on the sphere surface") {
  const double radius = 0.05;
  const auto model = generate_region_model(shared(make_sphere(radius, 2)), {},
                                           1, small_config());
  REQUIRE(model.views.size() == 42);
  const double tolerance = 2.0 * small_config().sphere_radius /
                           small_config().focal_length;  // 2 px footprint
  for (const auto& view : model.views) {
    REQUIRE(!view.contour_points.empty());
    for (const auto& cp : view.contour_points) {
      REQUIRE(std::abs(cp.point.norm() - radius) < tolerance);
      REQUIRE(std::abs(cp.normal.norm() - 1.0) < 1e-6);
      REQUIRE(cp.foreground_distance >= 0.0);
      REQUIRE(cp.background_distance >= 0.0);
    }
  }
}

TEST_CASE("single-region generation validates every candidate") {
  // No other bodies: every traced contour point must pass validation.
  const FlatScene scene =
      render_flat({{make_quad(0.12, 0.09), BodyClass::kMain, 0.5}});
  const auto samples = main_contour(scene);
  REQUIRE(samples.size() > 100);
  for (const auto& s : samples)
    REQUIRE(validate_contour_point(s.px, s.normal, scene.frame, scene.classes,
                                   ModelGenConfig{}));
}

TEST_CASE("coplanar FIXED neighbor is accepted, elevated one rejected") {
  const double a = 0.1;
  // MAIN on the right, FIXED plate adjacent on the left.
  const TriangleMesh main_quad = shifted(make_quad(a, a), {a / 2, 0, 0});
  const TriangleMesh fixed_quad = shifted(make_quad(a, a), {-a / 2, 0, 0});

  SUBCASE("flat transition: depth difference 0") {
    const FlatScene scene = render_flat({{main_quad, BodyClass::kMain, 0.5},
                                         {fixed_quad, BodyClass::kFixed, 0.5}});
    const auto seam = main_contour(scene, Vec2(-1, 0));
    REQUIRE(seam.size() > 10);
    for (const auto& s : seam)
      REQUIRE(validate_contour_point(s.px, s.normal, scene.frame,
                                     scene.classes, ModelGenConfig{}));
  }
  SUBCASE("10 mm step edge at 0.5 m, fx = 600: rejected") {
    // footprint 0.83 mm, slope threshold ~2.3 mm < 10 mm
    const FlatScene scene = render_flat({{main_quad, BodyClass::kMain, 0.5},
                                         {fixed_quad, BodyClass::kFixed, 0.49}});
    const auto seam = main_contour(scene, Vec2(-1, 0));
    REQUIRE(seam.size() > 10);
    for (const auto& s : seam)
      REQUIRE(!validate_contour_point(s.px, s.normal, scene.frame,
                                      scene.classes, ModelGenConfig{}));
  }
}

TEST_CASE("free silhouette accepted; MOVABLE and SAME_REGION reject") {
  const double a = 0.1;
  const TriangleMesh main_quad = shifted(make_quad(a, a), {a / 2, 0, 0});

  SUBCASE("background neighborhood accepts") {
    const FlatScene scene =
        render_flat({{make_quad(a, a), BodyClass::kMain, 0.5}});
    for (const auto& s : main_contour(scene))
      REQUIRE(validate_contour_point(s.px, s.normal, scene.frame,
                                     scene.classes, ModelGenConfig{}));
  }
  SUBCASE("movable shell around the whole contour rejects everything") {
    const FlatScene scene =
        render_flat({{make_quad(a, a), BodyClass::kMain, 0.5},
                     {make_quad(3 * a, 3 * a), BodyClass::kMovable, 0.55}});
    const auto samples = main_contour(scene);
    REQUIRE(samples.size() > 100);
    for (const auto& s : samples)
      REQUIRE(!validate_contour_point(s.px, s.normal, scene.frame,
                                      scene.classes, ModelGenConfig{}));
  }
  SUBCASE("same-region neighbor rejects the shared seam") {
    const TriangleMesh left = shifted(make_quad(a, a), {-a / 2, 0, 0});
    const FlatScene scene =
        render_flat({{main_quad, BodyClass::kMain, 0.5},
                     {left, BodyClass::kSameRegion, 0.5}});
    const auto seam = main_contour(scene, Vec2(-1, 0));
    REQUIRE(seam.size() > 10);
    for (const auto& s : seam)
      REQUIRE(!validate_contour_point(s.px, s.normal, scene.frame,
                                      scene.classes, ModelGenConfig{}));
  }
}

TEST_CASE("foreground/background distances against the ray-march oracle") {
  const double a = 0.1, z = 0.5;
  const double footprint = z / 600.0;
  const ModelGenConfig config;

  SUBCASE("isolated square patch: foreground spans the patch, background capped") {
    const FlatScene scene =
        render_flat({{make_quad(a, a), BodyClass::kMain, z}});
    const auto left_edge = main_contour(scene, Vec2(-1, 0));
    REQUIRE(!left_edge.empty());
    for (const auto& s : left_edge) {
      const FbDistances fb = compute_fb_distances(
          s.px, s.normal, scene.frame, scene.classes, 600.0,
          config.distance_cap);
      REQUIRE(fb.background == config.distance_cap);
      REQUIRE(std::abs(fb.foreground - a) < 2.0 * footprint);
    }
  }
  SUBCASE("adjacent same-region body stops the background ray immediately") {
    const TriangleMesh right = shifted(make_quad(a, a), {a / 2, 0, 0});
    const TriangleMesh left = shifted(make_quad(a, a), {-a / 2, 0, 0});
    const FlatScene scene = render_flat(
        {{right, BodyClass::kMain, z}, {left, BodyClass::kSameRegion, z}});
    for (const auto& s : main_contour(scene, Vec2(-1, 0))) {
      const FbDistances fb = compute_fb_distances(
          s.px, s.normal, scene.frame, scene.classes, 600.0,
          config.distance_cap);
      REQUIRE(fb.background <= 2.0 * footprint);
    }
  }
  SUBCASE("movable strip one pixel inward stops the foreground ray") {
    // Strip in front of MAIN whose edge sits just inside MAIN's left edge.
    const TriangleMesh strip =
        shifted(make_quad(a, a), {a - 2.0 * footprint, 0, 0});
    const FlatScene scene = render_flat(
        {{make_quad(a, a), BodyClass::kMain, z}, {strip, BodyClass::kMovable,
                                                  z - 0.01}});
    const auto left_edge = main_contour(scene, Vec2(-1, 0));
    REQUIRE(!left_edge.empty());
    for (const auto& s : left_edge) {
      const FbDistances fb = compute_fb_distances(
          s.px, s.normal, scene.frame, scene.classes, 600.0,
          config.distance_cap);
      REQUIRE(fb.foreground <= 4.0 * footprint);
    }
  }
}

TEST_CASE("splitting into SAME_REGION halves changes only the seam") {
  const double a = 0.1, z = 0.5;
  const double footprint = z / 600.0;
  const ModelGenConfig config;

  const FlatScene whole =
      render_flat({{make_quad(a, a), BodyClass::kMain, z}});
  const TriangleMesh right = shifted(make_quad(a / 2, a), {a / 4, 0, 0});
  const TriangleMesh left = shifted(make_quad(a / 2, a), {-a / 4, 0, 0});
  const FlatScene split = render_flat(
      {{right, BodyClass::kMain, z}, {left, BodyClass::kSameRegion, z}});

  // Free right edge: foreground traverses both same-region halves, matching
  // the unsplit model; background stays capped.
  const auto whole_edge = main_contour(whole, Vec2(1, 0));
  const auto split_edge = main_contour(split, Vec2(1, 0));
  REQUIRE(!whole_edge.empty());
  REQUIRE(!split_edge.empty());
  const auto fb_whole = compute_fb_distances(
      whole_edge[whole_edge.size() / 2].px,
      whole_edge[whole_edge.size() / 2].normal, whole.frame, whole.classes,
      600.0, config.distance_cap);
  const auto fb_split = compute_fb_distances(
      split_edge[split_edge.size() / 2].px,
      split_edge[split_edge.size() / 2].normal, split.frame, split.classes,
      600.0, config.distance_cap);
  CHECK(std::abs(fb_whole.foreground - fb_split.foreground) <
        2.0 * footprint);
  CHECK(fb_whole.background == fb_split.background);

  // Seam: background distance collapses to ~0.
  for (const auto& s : main_contour(split, Vec2(-1, 0))) {
    const auto fb = compute_fb_distances(s.px, s.normal, split.frame,
                                         split.classes, 600.0,
                                         config.distance_cap);
    REQUIRE(fb.background <= 2.0 * footprint);
  }
}

TEST_CASE("depth model on a plane and a sphere") {
  SUBCASE("fronto-parallel plane: sampled normals equal the view direction") {
    const auto model =
        generate_depth_model(shared(make_quad(0.15, 0.15)), small_config());
    const Pose pose = look_at_origin(Vec3(0, 0, -1), 0.8);
    const ViewpointView& view = closest_view(model, pose);
    REQUIRE(view.orientation.isApprox(Vec3(0, 0, -1), 1e-12));
    REQUIRE(!view.surface_points.empty());
    for (const auto& sp : view.surface_points)
      REQUIRE((sp.normal - view.orientation).norm() < 1e-3);
  }
  SUBCASE("sphere: sampled points at the sphere radius") {
    const double radius = 0.05;
    const auto model =
        generate_depth_model(shared(make_sphere(radius, 2)), small_config());
    const double tolerance = 2.0 * 0.8 / 500.0;
    for (const auto& view : model.views) {
      REQUIRE(!view.surface_points.empty());
      for (const auto& sp : view.surface_points)
        REQUIRE(std::abs(sp.point.norm() - radius) < tolerance);
    }
  }
}

TEST_CASE("stored contour points reproject onto the generating silhouette") {
  const auto mesh = shared(make_box(0.08, 0.06, 0.1));
  const ModelGenConfig config = small_config();
  const auto model = generate_region_model(mesh, {}, 1, config);

  Intrinsics k;
  k.fx = k.fy = config.focal_length;
  k.px = k.py = config.image_size / 2.0;
  k.width = k.height = config.image_size;

  for (std::size_t vi = 0; vi < model.views.size(); vi += 7) {
    const auto& view = model.views[vi];
    const Pose pose = look_at_origin(view.orientation, config.sphere_radius);
    const RenderedFrame frame = rasterize({{mesh, pose, 1, 0, {}}}, k);
    for (const auto& cp : view.contour_points) {
      const Vec2 px = project(pose * cp.point, k);
      bool on_silhouette = false;
      for (int dy = -1; dy <= 1 && !on_silhouette; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = int(std::floor(px.x())) + dx;
          const int y = int(std::floor(px.y())) + dy;
          if (frame.body_id.contains(x, y) && frame.body_id(x, y) == 1) {
            on_silhouette = true;
            break;
          }
        }
      REQUIRE(on_silhouette);
    }
  }
}

TEST_CASE("closest_view selection") {
  const auto model =
      generate_depth_model(shared(make_sphere(0.05, 1)), small_config());
  const auto directions = icosphere_directions(1);

  SUBCASE("exact stored direction wins") {
    for (std::size_t i = 0; i < directions.size(); i += 5) {
      const Pose pose = look_at_origin(directions[i], 0.8);
      CHECK(closest_view(model, pose).orientation.isApprox(directions[i],
                                                           1e-12));
    }
  }
  SUBCASE("antipodal direction maps to the stored antipodal view") {
    const Vec3 anti = -directions[0];
    const Pose pose = look_at_origin(anti, 0.8);
    CHECK(closest_view(model, pose).orientation.isApprox(anti, 1e-9));
  }
  SUBCASE("1 degree perturbation keeps the brute-force argmax view") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec3 base = directions[rng() % directions.size()];
      const Vec3 axis =
          base.cross(Vec3(uni(rng), uni(rng), uni(rng))).normalized();
      const Vec3 dir =
          rotation_exp(axis * (1.0 * std::numbers::pi / 180.0)) * base;
      const Pose pose = look_at_origin(dir, 0.8);

      std::size_t brute = 0;
      double best = -2.0;
      for (std::size_t i = 0; i < model.views.size(); ++i) {
        const double d = model.views[i].orientation.dot(dir);
        if (d > best) {
          best = d;
          brute = i;
        }
      }
      CHECK(closest_view(model, pose).orientation.isApprox(
          model.views[brute].orientation, 1e-12));
    }
  }
}

TEST_CASE("model serialization round-trips bit-exactly") {
  const auto mesh = shared(make_box(0.08, 0.06, 0.1));
  const auto model = generate_region_model(mesh, {}, 3, small_config());

  const auto dir = std::filesystem::temp_directory_path() / "mmt_model_test";
  std::filesystem::create_directories(dir);
  save_model(dir / "a.svm", model);
  const auto loaded = load_model(dir / "a.svm");
  save_model(dir / "b.svm", loaded);

  // Byte-identical files and identical in-memory contents.
  std::ifstream fa(dir / "a.svm", std::ios::binary);
  std::ifstream fb(dir / "b.svm", std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  REQUIRE(!bytes_a.empty());
  CHECK(bytes_a == bytes_b);

  REQUIRE(loaded.views.size() == model.views.size());
  CHECK(loaded.region_id == 3);
  CHECK(loaded.kind == SparseViewpointModel::Kind::kRegion);
  CHECK(loaded.content_hash == model.content_hash);
  CHECK(loaded.config == model.config);
  for (std::size_t i = 0; i < model.views.size(); ++i) {
    REQUIRE(loaded.views[i].orientation == model.views[i].orientation);
    REQUIRE(loaded.views[i].contour_points.size() ==
            model.views[i].contour_points.size());
    for (std::size_t j = 0; j < model.views[i].contour_points.size(); ++j) {
      const auto& a = model.views[i].contour_points[j];
      const auto& b = loaded.views[i].contour_points[j];
      REQUIRE(a.point == b.point);
      REQUIRE(a.normal == b.normal);
      REQUIRE(a.foreground_distance == b.foreground_distance);
      REQUIRE(a.background_distance == b.background_distance);
    }
  }
}

TEST_CASE("content hash tracks meshes and config") {
  const auto mesh_a = shared(make_box(0.08, 0.06, 0.1));
  const auto mesh_b = shared(make_box(0.08, 0.06, 0.11));
  const ModelGenConfig config;
  const auto h1 = model_content_hash(SparseViewpointModel::Kind::kRegion, 1,
                                     {{mesh_a, BodyClass::kMain}}, config);
  const auto h2 = model_content_hash(SparseViewpointModel::Kind::kRegion, 1,
                                     {{mesh_b, BodyClass::kMain}}, config);
  ModelGenConfig other = config;
  other.max_points_per_view += 1;
  const auto h3 = model_content_hash(SparseViewpointModel::Kind::kRegion, 1,
                                     {{mesh_a, BodyClass::kMain}}, other);
  CHECK(h1 != h2);
  CHECK(h1 != h3);
  CHECK(h1 == model_content_hash(SparseViewpointModel::Kind::kRegion, 1,
                                 {{mesh_a, BodyClass::kMain}}, config));
}

TEST_CASE("generation is deterministic and parallel-schedule independent") {
  const auto mesh = shared(make_box(0.08, 0.06, 0.1));
  const auto a = generate_region_model(mesh, {}, 1, small_config(), 1);
  const auto b = generate_region_model(mesh, {}, 1, small_config(), 4);
  REQUIRE(a.views.size() == b.views.size());
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    REQUIRE(a.views[i].contour_points.size() ==
            b.views[i].contour_points.size());
    for (std::size_t j = 0; j < a.views[i].contour_points.size(); ++j)
      REQUIRE(a.views[i].contour_points[j].point ==
              b.views[i].contour_points[j].point);
  }
}

TEST_SUITE_END();

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/mesh.hpp"
#include "mmt/rasterizer.hpp"

// Offline generation of sparse viewpoint models: per-view contour points,
// normals, and foreground/background free distances for region tracking,
// plus surface-point models for the depth modality.

namespace mmt {

enum class BodyClass { kMain, kFixed, kSameRegion, kMovable };

BodyClass body_class_from_string(const std::string& name);
std::string to_string(BodyClass cls);

struct ContourPoint {
  Vec3 point = Vec3::Zero();   // model frame, meters
  Vec3 normal = Vec3::Zero();  // model frame, unit, in-plane contour normal
  double foreground_distance = 0.0;  // meters, capped
  double background_distance = 0.0;  // meters, capped
};

struct SurfacePoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // model frame, unit, oriented outward
};

struct ViewpointView {
  Vec3 orientation = Vec3::UnitZ();  // unit direction model origin -> camera
  std::vector<ContourPoint> contour_points;  // region models
  std::vector<SurfacePoint> surface_points;  // depth models
};

struct ModelGenConfig {
  int sphere_subdivisions = 3;   // 642 view directions
  double sphere_radius = 0.8;    // virtual camera distance, meters
  int image_size = 400;          // virtual render resolution (square)
  double focal_length = 500.0;   // virtual focal length, pixels
  int max_points_per_view = 200;
  double distance_cap = 0.5;     // fg/bg distance cap, meters
  int validation_neighborhood_px = 3;
  double max_surface_slope_deg = 70.0;

  bool operator==(const ModelGenConfig&) const = default;
};

struct SparseViewpointModel {
  enum class Kind : std::uint32_t { kRegion = 0, kDepth = 1 };

  Kind kind = Kind::kRegion;
  std::uint32_t region_id = 0;
  ModelGenConfig config;
  std::uint64_t content_hash = 0;
  std::vector<ViewpointView> views;
};

// Unit view directions of a subdivided icosahedron.
std::vector<Vec3> icosphere_directions(int subdivisions);

// Virtual camera pose (model -> camera) looking at the model origin from
// `direction * distance`.
Pose look_at_origin(const Vec3& direction, double distance);

struct GenBody {
  std::shared_ptr<const TriangleMesh> mesh;
  BodyClass cls = BodyClass::kFixed;
};

using BodyClassMap = std::map<std::uint8_t, BodyClass>;

SparseViewpointModel generate_region_model(
    const std::shared_ptr<const TriangleMesh>& main,
    const std::vector<GenBody>& others, std::uint32_t region_id,
    const ModelGenConfig& config, int threads = 1);

SparseViewpointModel generate_depth_model(
    const std::shared_ptr<const TriangleMesh>& mesh,
    const ModelGenConfig& config, int threads = 1);

const ViewpointView& closest_view(const SparseViewpointModel& model,
                                  const Pose& pose);

// --- per-pixel building blocks (exposed for tests and reuse) ------------------

// Ordered boundary pixels (Moore tracing) of `body_id` in the frame, one
// vector per connected component.
std::vector<std::vector<Eigen::Vector2i>> trace_contours(
    const RenderedFrame& frame, std::uint8_t body_id);

// Outward 2D contour normal from the traced contour, smoothed over +/-2
// contour pixels.
Vec2 contour_normal(const std::vector<Eigen::Vector2i>& contour,
                    std::size_t index, const RenderedFrame& frame,
                    std::uint8_t body_id);

bool validate_contour_point(const Eigen::Vector2i& px, const Vec2& normal2d,
                            const RenderedFrame& frame,
                            const BodyClassMap& classes,
                            const ModelGenConfig& config);

struct FbDistances {
  double foreground = 0.0;
  double background = 0.0;
};

FbDistances compute_fb_distances(const Eigen::Vector2i& px,
                                 const Vec2& normal2d,
                                 const RenderedFrame& frame,
                                 const BodyClassMap& classes,
                                 double focal_length, double cap);

// --- serialization ("SVM1", little-endian; layout in docs/model_format.md) ---

void save_model(const std::filesystem::path& path,
                const SparseViewpointModel& model);
SparseViewpointModel load_model(const std::filesystem::path& path);

std::uint64_t model_content_hash(
    SparseViewpointModel::Kind kind, std::uint32_t region_id,
    const std::vector<GenBody>& bodies, const ModelGenConfig& config);

}  // namespace mmt

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/image.hpp"
#include "mmt/mesh.hpp"

namespace mmt {

struct SceneBody {
  std::shared_ptr<const TriangleMesh> mesh;
  Pose pose;                  // body -> camera
  std::uint8_t body_id = 1;   // unique within a scene, >= 1
  std::uint8_t region_id = 0; // color region the body belongs to
  Rgb8 base_color{200, 200, 200};  // used when the mesh has no texture
};

struct RenderedFrame {
  ImageF depth;                     // camera-frame Z in meters, 0 = no hit
  ImageU8 body_id;                  // 0 = background
  Image<std::int32_t> triangle_id;  // index within the hit body, -1 = none
  ImageRgb8 color;                  // empty unless shaded rendering requested

  bool hit(int x, int y) const { return body_id(x, y) != 0; }
};

// Near-plane clip distance (meters).
constexpr double kNearPlane = 0.01;

// Z-buffered perspective rasterization with a top-left fill convention.
// Deterministic for identical input; `threads` > 1 parallelizes over rows
// without changing the output.
RenderedFrame rasterize(const std::vector<SceneBody>& bodies,
                        const Intrinsics& k, int threads = 1);

struct Lighting {
  double ambient = 0.65;
  double diffuse = 0.35;
  Vec3 direction_to_scene = Vec3(0.25, -0.35, 0.9).normalized();
  Rgb8 background{92, 92, 96};
};

struct DepthNoiseConfig {
  double sigma_m = 0.002;     // additive Gaussian noise
  double dropout_rate = 0.005;
  std::uint64_t seed = 0;
};

struct RgbdFrame {
  ImageRgb8 color;
  ImageF depth;
};

// Textured Lambertian-shaded color plus depth with optional synthetic sensor
// noise. Seeded, reproducible.
RgbdFrame render_synthetic_rgbd(const std::vector<SceneBody>& bodies,
                                const Intrinsics& k, const Lighting& lighting,
                                const DepthNoiseConfig& noise, int threads = 1);

// Inverse pinhole projection: ((x-px)/fx, (y-py)/fy, 1) * depth.
Vec3 backproject(const Vec2& pixel, double depth, const Intrinsics& k);

}  // namespace mmt

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/mesh.hpp"
#include "mmt/rasterizer.hpp"

// Synthetic RGB-D sequence generation: scene bodies, keyposed trajectories
// (geodesic rotation + linear translation), and on-disk output.

namespace mmt {

struct SequenceBody {
  std::string name;
  std::shared_ptr<const TriangleMesh> mesh;
  std::uint8_t body_id = 1;
  std::uint8_t region_id = 0;  // > 0 marks a tracked object region
  Rgb8 base_color{180, 180, 180};
  bool attached_to_object = true;  // follows the trajectory; else camera-fixed
  Pose offset;  // body-from-object (attached) or body-from-camera (fixed)
};

struct Keypose {
  int frame = 0;
  Pose pose;  // object -> camera
};

struct SequenceSpec {
  std::string name;
  int frame_count = 200;
  double fps = 30.0;
  std::uint64_t seed = 1;
  Intrinsics camera;
  Lighting lighting;
  DepthNoiseConfig noise;  // per-frame seeds derived from `seed`
  std::vector<SequenceBody> bodies;
  std::vector<Keypose> keyposes;  // sorted by frame; first at 0, last at end
};

// Geodesic rotation + linear translation between bracketing keyposes.
Pose interpolate_trajectory(const std::vector<Keypose>& keyposes, double frame);

std::vector<SceneBody> scene_at(const SequenceSpec& spec, const Pose& object_pose);

// Writes color/depth PNGs, ground-truth pose CSV (frame index + 12 row-major
// entries), an intrinsics file, the object meshes, and a ready-to-run
// tracker config. Deterministic given the seed.
void generate_sequence(const SequenceSpec& spec,
                       const std::filesystem::path& out_dir, int threads = 1);

// ---- on-disk formats ---------------------------------------------------------

void write_pose_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<int, Pose>>& poses);
std::vector<std::pair<int, Pose>> read_pose_csv(
    const std::filesystem::path& path);

void write_intrinsics_json(const std::filesystem::path& path,
                           const Intrinsics& k);
Intrinsics read_intrinsics_json(const std::filesystem::path& path);

std::filesystem::path color_frame_path(const std::filesystem::path& dir,
                                       int frame);
std::filesystem::path depth_frame_path(const std::filesystem::path& dir,
                                       int frame);

// ---- reference scenes --------------------------------------------------------

enum class ScenePreset {
  kTexturedCuboid,      // textured multi-region cuboid
  kTwoRegionCylinder,   // textureless two-region cylinder
  kOccludedBox,         // textured single-region object, ~30% occlusion
};

ScenePreset scene_preset_from_string(const std::string& name);

SequenceSpec make_preset_sequence(ScenePreset preset, int frame_count,
                                  std::uint64_t seed);

}  // namespace mmt

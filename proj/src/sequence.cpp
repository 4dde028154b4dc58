#include "mmt/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mmt/config.hpp"
#include "mmt/png_io.hpp"

namespace mmt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Pose interpolate_trajectory(const std::vector<Keypose>& keyposes,
                            double frame) {
  if (keyposes.empty())
    throw std::invalid_argument("interpolate_trajectory: no keyposes");
  if (frame <= keyposes.front().frame) return keyposes.front().pose;
  if (frame >= keyposes.back().frame) return keyposes.back().pose;
  std::size_t hi = 1;
  while (keyposes[hi].frame < frame) ++hi;
  const Keypose& a = keyposes[hi - 1];
  const Keypose& b = keyposes[hi];
  const double s = (frame - a.frame) / double(b.frame - a.frame);

  Pose out;
  out.R = a.pose.R * rotation_exp(s * rotation_log(a.pose.R.transpose() * b.pose.R));
  out.t = (1.0 - s) * a.pose.t + s * b.pose.t;
  return out;
}

std::vector<SceneBody> scene_at(const SequenceSpec& spec,
                                const Pose& object_pose) {
  std::vector<SceneBody> scene;
  scene.reserve(spec.bodies.size());
  for (const auto& body : spec.bodies) {
    SceneBody sb;
    sb.mesh = body.mesh;
    sb.body_id = body.body_id;
    sb.region_id = body.region_id;
    sb.base_color = body.base_color;
    sb.pose = body.attached_to_object ? object_pose * body.offset : body.offset;
    scene.push_back(sb);
  }
  return scene;
}

void write_pose_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<int, Pose>>& poses) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << "frame,r00,r01,r02,t0,r10,r11,r12,t1,r20,r21,r22,t2\n";
  file.precision(17);
  for (const auto& [frame, pose] : poses) {
    file << frame;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) file << "," << pose.R(r, c);
      file << "," << pose.t(r);
    }
    file << "\n";
  }
}

std::vector<std::pair<int, Pose>> read_pose_csv(
    const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::pair<int, Pose>> out;
  std::string line;
  std::getline(file, line);  // header
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    std::getline(ss, token, ',');
    const int frame = std::stoi(token);
    double v[12];
    for (double& x : v) {
      if (!std::getline(ss, token, ','))
        throw std::runtime_error("bad pose row in " + path.string());
      x = std::stod(token);
    }
    Pose pose;
    pose.R << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.t << v[3], v[7], v[11];
    out.emplace_back(frame, pose);
  }
  return out;
}

void write_intrinsics_json(const std::filesystem::path& path,
                           const Intrinsics& k) {
  nlohmann::json j{{"fx", k.fx},       {"fy", k.fy},
                   {"px", k.px},       {"py", k.py},
                   {"width", k.width}, {"height", k.height},
                   {"depth_scale", kDepthUnitsPerMeter}};
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << j.dump(2) << "\n";
}

Intrinsics read_intrinsics_json(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  file >> j;
  Intrinsics k;
  k.fx = j.at("fx");
  k.fy = j.at("fy");
  k.px = j.at("px");
  k.py = j.at("py");
  k.width = j.at("width");
  k.height = j.at("height");
  return k;
}

std::filesystem::path color_frame_path(const std::filesystem::path& dir,
                                       int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "color_%06d.png", frame);
  return dir / name;
}

std::filesystem::path depth_frame_path(const std::filesystem::path& dir,
                                       int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "depth_%06d.png", frame);
  return dir / name;
}

void generate_sequence(const SequenceSpec& spec,
                       const std::filesystem::path& out_dir, int threads) {
  if (spec.frame_count < 2)
    throw std::invalid_argument("generate_sequence: need at least 2 frames");
  std::filesystem::create_directories(out_dir);
  std::filesystem::create_directories(out_dir / "meshes");

  write_intrinsics_json(out_dir / "intrinsics.json", spec.camera);

  std::vector<std::pair<int, Pose>> gt;
  for (int frame = 0; frame < spec.frame_count; ++frame) {
    const Pose pose = interpolate_trajectory(spec.keyposes, frame);
    gt.emplace_back(frame, pose);

    DepthNoiseConfig noise = spec.noise;
    noise.seed = splitmix64(spec.seed ^ (0x517cc1b727220a95ull + frame));
    const RgbdFrame rendered = render_synthetic_rgbd(
        scene_at(spec, pose), spec.camera, spec.lighting, noise, threads);
    write_png(color_frame_path(out_dir, frame), rendered.color);
    write_png(depth_frame_path(out_dir, frame), encode_depth(rendered.depth));
  }
  write_pose_csv(out_dir / "poses_gt.csv", gt);

  // Object meshes + a ready-to-run tracker config.
  TrackerConfig config;
  config.seed = spec.seed;
  config.camera = spec.camera;
  config.object_name = spec.name;
  for (const auto& body : spec.bodies) {
    if (!body.attached_to_object || body.region_id == 0) continue;
    const auto mesh_path = out_dir / "meshes" / (body.name + ".obj");
    const bool textured = body.mesh->has_texture();
    save_obj(mesh_path, *body.mesh,
             textured ? std::filesystem::path(body.name + ".png")
                      : std::filesystem::path());
    config.regions.push_back(
        {body.name, mesh_path, std::uint32_t(body.region_id)});
  }
  if (config.regions.empty())
    throw std::runtime_error("generate_sequence: no tracked object regions");
  config.models_dir = out_dir / "models";
  save_tracker_config(out_dir / "tracker_config.json", config);
}

// ---- reference scenes --------------------------------------------------------

namespace {

// Blocky high-contrast texture; block size keeps corners detectable after
// the 200 px detection warp.
std::shared_ptr<ImageRgb8> make_block_texture(int size, int block,
                                              const std::vector<Rgb8>& palette,
                                              std::uint64_t seed) {
  auto tex = std::make_shared<ImageRgb8>(size, size);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, int(palette.size()) - 1);
  for (int by = 0; by < size; by += block) {
    for (int bx = 0; bx < size; bx += block) {
      const Rgb8 c = palette[pick(rng)];
      for (int y = by; y < std::min(size, by + block); ++y)
        for (int x = bx; x < std::min(size, bx + block); ++x) (*tex)(x, y) = c;
    }
  }
  return tex;
}

std::shared_ptr<TriangleMesh> with_texture(TriangleMesh mesh,
                                           std::shared_ptr<ImageRgb8> tex) {
  mesh.texture = std::move(tex);
  return std::make_shared<TriangleMesh>(std::move(mesh));
}

Intrinsics default_camera() {
  Intrinsics k;
  k.fx = k.fy = 600.0;
  k.px = 320.0;
  k.py = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

SequenceBody make_backdrop(std::uint64_t seed) {
  SequenceBody backdrop;
  backdrop.name = "backdrop";
  const std::vector<Rgb8> palette = {
      {96, 104, 96}, {120, 128, 124}, {84, 88, 96}, {108, 100, 92}};
  backdrop.mesh = with_texture(make_quad(2.4, 1.8),
                               make_block_texture(256, 16, palette, seed));
  backdrop.body_id = 200;
  backdrop.region_id = 0;
  backdrop.attached_to_object = false;
  backdrop.offset = Pose{Mat3::Identity(), Vec3(0, 0, 1.4)};
  return backdrop;
}

// Keyposes sampled from smooth parametric curves; per-frame motion stays
// within 2 cm / 3 deg.
std::vector<Keypose> make_trajectory(int frame_count, const Vec3& center,
                                     const Vec3& trans_amp,
                                     const Vec3& trans_freq,
                                     const Vec3& rot_amp,
                                     const Vec3& rot_freq, double rot_phase,
                                     const Mat3& base_rotation) {
  std::vector<Keypose> keyposes;
  const int step = 10;
  for (int frame = 0; frame <= frame_count - 1 + step; frame += step) {
    const int f = std::min(frame, frame_count - 1);
    const double s = double(f) / double(frame_count - 1);
    Vec3 rot;
    Vec3 trans;
    for (int i = 0; i < 3; ++i) {
      const double phase = rot_phase + i * 1.9;
      rot[i] = rot_amp[i] * std::sin(2.0 * std::numbers::pi * rot_freq[i] * s +
                                     phase);
      trans[i] = trans_amp[i] *
                 std::sin(2.0 * std::numbers::pi * trans_freq[i] * s +
                          0.7 * i + 0.3);
    }
    Keypose kp;
    kp.frame = f;
    kp.pose.R = rotation_exp(rot) * base_rotation;
    kp.pose.t = center + trans;
    keyposes.push_back(kp);
    if (f == frame_count - 1) break;
  }
  return keyposes;
}

SequenceSpec cuboid_sequence(int frame_count, std::uint64_t seed) {
  SequenceSpec spec;
  spec.name = "cuboid";
  spec.frame_count = frame_count;
  spec.seed = seed;
  spec.camera = default_camera();

  const double sx = 0.08, sy = 0.08, sz = 0.12;
  const std::vector<Rgb8> body_palette = {
      {210, 60, 40}, {240, 200, 170}, {150, 30, 50}, {250, 120, 60},
      {90, 20, 20}};
  const std::vector<Rgb8> band_palette = {
      {40, 80, 200}, {170, 210, 240}, {30, 40, 120}, {90, 170, 230},
      {20, 20, 80}};

  SequenceBody body;
  body.name = "cuboid_body";
  body.mesh = with_texture(
      make_box_band(sx, sy, sz, -sz / 2, sz / 6, true, false),
      make_block_texture(256, 10, body_palette, splitmix64(seed ^ 11)));
  body.body_id = 1;
  body.region_id = 1;
  spec.bodies.push_back(body);

  SequenceBody band;
  band.name = "cuboid_band";
  band.mesh = with_texture(
      make_box_band(sx, sy, sz, sz / 6, sz / 2, false, true),
      make_block_texture(256, 10, band_palette, splitmix64(seed ^ 12)));
  band.body_id = 2;
  band.region_id = 2;
  spec.bodies.push_back(band);

  spec.bodies.push_back(make_backdrop(splitmix64(seed ^ 13)));

  spec.keyposes = make_trajectory(
      frame_count, Vec3(0.0, 0.0, 0.60), Vec3(0.05, 0.035, 0.05),
      Vec3(2, 3, 2), Vec3(0.5, 0.4, 0.6), Vec3(2, 1, 2), 0.4,
      rotation_exp(Vec3(0.3, -0.4, 0.2)));
  return spec;
}

SequenceSpec cylinder_sequence(int frame_count, std::uint64_t seed) {
  SequenceSpec spec;
  spec.name = "cylinder";
  spec.frame_count = frame_count;
  spec.seed = seed;
  spec.camera = default_camera();

  const double radius = 0.035, height = 0.13;
  const double wedge = 75.0 * std::numbers::pi / 180.0;

  SequenceBody body;
  body.name = "cylinder_body";
  body.mesh = std::make_shared<TriangleMesh>(
      make_cylinder_sector(radius, height, 48, wedge, 2 * std::numbers::pi,
                           true));
  body.body_id = 1;
  body.region_id = 1;
  body.base_color = {205, 185, 60};
  spec.bodies.push_back(body);

  SequenceBody stripe;
  stripe.name = "cylinder_stripe";
  stripe.mesh = std::make_shared<TriangleMesh>(
      make_cylinder_sector(radius, height, 48, 0.0, wedge, false));
  stripe.body_id = 2;
  stripe.region_id = 2;
  stripe.base_color = {35, 35, 40};
  spec.bodies.push_back(stripe);

  spec.bodies.push_back(make_backdrop(splitmix64(seed ^ 21)));

  // The cylinder axis starts roughly vertical; the trajectory spins about it
  // while translating in depth and laterally.
  spec.keyposes = make_trajectory(
      frame_count, Vec3(0.0, 0.0, 0.58), Vec3(0.05, 0.03, 0.06),
      Vec3(2, 2, 3), Vec3(0.35, 0.25, 1.1), Vec3(1, 2, 1), 0.0,
      rotation_exp(Vec3(1.2, 0.2, 0.0)));
  return spec;
}

SequenceSpec occluded_sequence(int frame_count, std::uint64_t seed) {
  SequenceSpec spec;
  spec.name = "occluded_box";
  spec.frame_count = frame_count;
  spec.seed = seed;
  spec.camera = default_camera();

  const std::vector<Rgb8> palette = {
      {220, 160, 40}, {250, 240, 220}, {140, 90, 20}, {250, 200, 120},
      {60, 40, 10}};
  SequenceBody body;
  body.name = "box";
  body.mesh = with_texture(
      make_box(0.10, 0.08, 0.06),
      make_block_texture(256, 10, palette, splitmix64(seed ^ 31)));
  body.body_id = 1;
  body.region_id = 1;
  spec.bodies.push_back(body);

  // A static bar between camera and object, covering roughly 30 % of the
  // object over the trajectory.
  const std::vector<Rgb8> occluder_palette = {
      {40, 140, 70}, {80, 180, 110}, {20, 90, 40}, {140, 200, 150}};
  SequenceBody occluder;
  occluder.name = "occluder";
  occluder.mesh = with_texture(
      make_quad(0.045, 0.5),
      make_block_texture(128, 12, occluder_palette, splitmix64(seed ^ 32)));
  occluder.body_id = 100;
  occluder.region_id = 0;
  occluder.attached_to_object = false;
  occluder.offset = Pose{Mat3::Identity(), Vec3(0.01, 0.0, 0.40)};
  spec.bodies.push_back(occluder);

  spec.bodies.push_back(make_backdrop(splitmix64(seed ^ 33)));

  spec.keyposes = make_trajectory(
      frame_count, Vec3(0.0, 0.0, 0.62), Vec3(0.04, 0.03, 0.04),
      Vec3(2, 2, 2), Vec3(0.4, 0.5, 0.3), Vec3(2, 1, 2), 1.1,
      rotation_exp(Vec3(0.2, -0.3, 0.1)));
  return spec;
}

}  // namespace

ScenePreset scene_preset_from_string(const std::string& name) {
  if (name == "cuboid") return ScenePreset::kTexturedCuboid;
  if (name == "cylinder") return ScenePreset::kTwoRegionCylinder;
  if (name == "occluded-box") return ScenePreset::kOccludedBox;
  throw std::invalid_argument("unknown scene preset: " + name);
}

SequenceSpec make_preset_sequence(ScenePreset preset, int frame_count,
                                  std::uint64_t seed) {
  switch (preset) {
    case ScenePreset::kTexturedCuboid:
      return cuboid_sequence(frame_count, seed);
    case ScenePreset::kTwoRegionCylinder:
      return cylinder_sequence(frame_count, seed);
    case ScenePreset::kOccludedBox:
      return occluded_sequence(frame_count, seed);
  }
  throw std::invalid_argument("unknown scene preset");
}

}  // namespace mmt

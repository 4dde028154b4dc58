#include "mmt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "mmt/metrics.hpp"
#include "mmt/png_io.hpp"
#include "mmt/sequence.hpp"

namespace mmt {

namespace {

std::shared_ptr<const SparseViewpointModel> cached_model(
    const std::filesystem::path& path, std::uint64_t expected_hash,
    const std::function<SparseViewpointModel()>& generate) {
  if (std::filesystem::exists(path)) {
    auto model = load_model(path);
    if (model.content_hash == expected_hash)
      return std::make_shared<SparseViewpointModel>(std::move(model));
  }
  auto model = std::make_shared<SparseViewpointModel>(generate());
  save_model(path, *model);
  return model;
}

}  // namespace

ObjectModels load_or_generate_models(const TrackerConfig& config,
                                     int threads) {
  ObjectModels models;
  std::filesystem::create_directories(config.models_dir);

  std::vector<TriangleMesh> plain_meshes;
  for (const auto& entry : config.regions) {
    auto mesh = std::make_shared<TriangleMesh>(load_mesh(entry.mesh));
    models.region_meshes.push_back(mesh);
    plain_meshes.push_back(*mesh);
  }
  models.merged_mesh =
      std::make_shared<TriangleMesh>(merge_meshes(plain_meshes));

  std::vector<GenBody> externals;
  for (const auto& entry : config.external_bodies)
    externals.push_back(
        {std::make_shared<TriangleMesh>(load_mesh(entry.mesh)), entry.cls});

  // One region model per region entry: other regions are FIXED unless they
  // share the region_id, in which case they are SAME_REGION.
  for (std::size_t i = 0; i < config.regions.size(); ++i) {
    std::vector<GenBody> others;
    for (std::size_t j = 0; j < config.regions.size(); ++j) {
      if (j == i) continue;
      others.push_back(
          {models.region_meshes[j],
           config.regions[j].region_id == config.regions[i].region_id
               ? BodyClass::kSameRegion
               : BodyClass::kFixed});
    }
    others.insert(others.end(), externals.begin(), externals.end());

    std::vector<GenBody> all;
    all.push_back({models.region_meshes[i], BodyClass::kMain});
    all.insert(all.end(), others.begin(), others.end());
    const auto hash =
        model_content_hash(SparseViewpointModel::Kind::kRegion,
                           config.regions[i].region_id, all, config.model_gen);
    const auto path =
        config.models_dir /
        (config.object_name + "_region_" + config.regions[i].name + ".svm");
    models.region_models.push_back(cached_model(path, hash, [&] {
      return generate_region_model(models.region_meshes[i], others,
                                   config.regions[i].region_id,
                                   config.model_gen, threads);
    }));
  }

  {
    std::vector<GenBody> all;
    all.push_back({models.merged_mesh, BodyClass::kMain});
    all.insert(all.end(), externals.begin(), externals.end());
    const auto hash = model_content_hash(SparseViewpointModel::Kind::kRegion,
                                         0, all, config.model_gen);
    const auto path =
        config.models_dir / (config.object_name + "_region_merged.svm");
    models.merged_region_model = cached_model(path, hash, [&] {
      return generate_region_model(models.merged_mesh, externals, 0,
                                   config.model_gen, threads);
    });
  }

  {
    const auto hash = model_content_hash(
        SparseViewpointModel::Kind::kDepth, 0,
        {{models.merged_mesh, BodyClass::kMain}}, config.model_gen);
    const auto path = config.models_dir / (config.object_name + "_depth.svm");
    models.depth_model = cached_model(path, hash, [&] {
      return generate_depth_model(models.merged_mesh, config.model_gen,
                                  threads);
    });
  }
  return models;
}

Tracker build_tracker(const TrackerConfig& config, const ObjectModels& models,
                      const RunOptions& options) {
  const bool use_region = config.use_region && !options.no_region;
  const bool use_depth = config.use_depth && !options.no_depth;
  const bool use_texture = config.use_texture && !options.no_texture;
  const bool multi_region = config.multi_region && !options.no_multiregion;
  if (!use_region && !use_depth && !use_texture)
    throw std::runtime_error("build_tracker: all modalities disabled");

  std::vector<std::unique_ptr<Modality>> modalities;
  if (use_depth) {
    modalities.push_back(std::make_unique<DepthModality>(
        "depth", 0, config.camera, Pose::identity(), models.depth_model,
        config.depth));
  }
  if (use_texture) {
    modalities.push_back(std::make_unique<TextureModality>(
        "texture", 0, config.camera, Pose::identity(), models.merged_mesh,
        std::make_shared<OrbLikeExtractor>(config.texture.features),
        config.texture));
  }
  if (use_region) {
    if (multi_region) {
      for (std::size_t i = 0; i < models.region_models.size(); ++i)
        modalities.push_back(std::make_unique<RegionModality>(
            "region_" + config.regions[i].name, 0, config.camera,
            Pose::identity(), models.region_models[i], config.region));
    } else {
      modalities.push_back(std::make_unique<RegionModality>(
          "region_merged", 0, config.camera, Pose::identity(),
          models.merged_region_model, config.region));
    }
  }
  return Tracker(config.optimizer, std::move(modalities));
}

namespace {

CameraFrame load_camera_frame(const std::filesystem::path& dir, int frame) {
  CameraFrame out;
  out.color = read_png_rgb8(color_frame_path(dir, frame));
  out.depth = decode_depth(read_png_u16(depth_frame_path(dir, frame)));
  return out;
}

void draw_line(ImageRgb8& img, Vec2 a, Vec2 b, Rgb8 color) {
  const int steps = int(std::ceil((b - a).cwiseAbs().maxCoeff())) + 1;
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (double(i) / steps);
    const int x = int(std::floor(p.x())), y = int(std::floor(p.y()));
    if (img.contains(x, y)) img(x, y) = color;
  }
}

void draw_dot(ImageRgb8& img, Vec2 p, Rgb8 color) {
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = int(std::floor(p.x())) + dx;
      const int y = int(std::floor(p.y())) + dy;
      if (img.contains(x, y)) img(x, y) = color;
    }
}

// Debug overlays: depth correspondences, texture matches, region lines.
void write_debug_dumps(const std::filesystem::path& dir, int frame,
                       const CameraFrame& input, const Tracker& tracker,
                       const Pose& pose) {
  std::filesystem::create_directories(dir);
  for (const auto& m : tracker.modalities()) {
    ImageRgb8 canvas = input.color;
    const Pose camera_pose = m->camera_pose(pose);
    const Intrinsics& k = m->intrinsics();
    if (const auto* depth = dynamic_cast<const DepthModality*>(m.get())) {
      for (const auto& c : depth->correspondences()) {
        const Vec3 p = camera_pose * c.model_point;
        if (p.z() <= 0 || c.measured.z() <= 0) continue;
        const Vec2 a = project(p, k), b = project(c.measured, k);
        draw_line(canvas, a, b, {255, 40, 40});
        draw_dot(canvas, a, {60, 60, 255});
        draw_dot(canvas, b, {250, 220, 40});
      }
    } else if (const auto* tex = dynamic_cast<const TextureModality*>(m.get())) {
      for (const auto& match : tex->matches()) {
        const Vec3 p = camera_pose * match.model_point;
        if (p.z() <= 0) continue;
        const Vec2 a = project(p, k);
        draw_line(canvas, a, match.observed, {250, 220, 40});
        draw_dot(canvas, a, {60, 60, 255});
        draw_dot(canvas, match.observed, {255, 40, 40});
      }
    } else if (const auto* region = dynamic_cast<const RegionModality*>(m.get())) {
      for (const auto& line : region->lines()) {
        for (int i = 0; i < kLinePositions; ++i) {
          const Vec2 p = line.center +
                         double(i - kLineHalf) * line.scale * line.normal2d;
          const auto v = std::uint8_t(
              std::lround(255.0 * line.distribution[i] /
                          (*std::max_element(line.distribution.begin(),
                                             line.distribution.end()))));
          const int x = int(std::floor(p.x())), y = int(std::floor(p.y()));
          if (canvas.contains(x, y)) canvas(x, y) = {v, v, std::uint8_t(255 - v)};
        }
        draw_dot(canvas, line.center + line.mean_px * line.normal2d,
                 {255, 40, 40});
      }
    }
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%06d.png", m->name().c_str(), frame);
    write_png(dir / name, canvas);
  }
}

}  // namespace

RunResult run_tracking(const std::filesystem::path& sequence_dir,
                       const TrackerConfig& config_in,
                       const RunOptions& options) {
  TrackerConfig config = config_in;
  if (options.seed) config.seed = *options.seed;
  const int threads = options.threads.value_or(config.threads);

  // Configuration errors surface before any frame runs.
  const Intrinsics seq_k =
      read_intrinsics_json(sequence_dir / "intrinsics.json");
  if (seq_k.fx != config.camera.fx || seq_k.fy != config.camera.fy ||
      seq_k.px != config.camera.px || seq_k.py != config.camera.py ||
      seq_k.width != config.camera.width ||
      seq_k.height != config.camera.height)
    throw std::runtime_error(
        "run_tracking: config camera does not match sequence intrinsics");
  const auto gt = read_pose_csv(sequence_dir / "poses_gt.csv");
  if (gt.size() < 2)
    throw std::runtime_error("run_tracking: sequence has fewer than 2 frames");

  const ObjectModels models = load_or_generate_models(config, threads);
  Tracker tracker = build_tracker(config, models, options);

  const std::vector<Vec3> metric_vertices =
      subsample_vertices(models.merged_mesh->vertices);

  RunResult result;
  result.label = options.label;
  result.sequence = sequence_dir.filename().string();
  result.largest_vertex_distance = models.merged_mesh->max_vertex_distance();

  std::vector<CameraFrame> frames(1);
  frames[0] = load_camera_frame(sequence_dir, gt[0].first);
  frames[0].gray = to_gray(frames[0].color);
  tracker.initialize(frames, gt[0].second);
  result.frames.push_back({gt[0].first, gt[0].second, gt[0].second, 0.0, 0.0,
                           0.0, false});

  double total_seconds = 0.0;
  for (std::size_t i = 1; i < gt.size(); ++i) {
    frames[0] = load_camera_frame(sequence_dir, gt[i].first);

    const auto start = std::chrono::steady_clock::now();
    frames[0].gray = to_gray(frames[0].color);
    const TrackResult tracked = tracker.track_frame(frames);
    const auto stop = std::chrono::steady_clock::now();
    const double seconds =
        std::chrono::duration<double>(stop - start).count();
    total_seconds += seconds;

    const GroundTruthDelta delta{tracked.pose.inverse() * gt[i].second,
                                 metric_vertices};
    FrameRecord record;
    record.frame = gt[i].first;
    record.estimate = tracked.pose;
    record.ground_truth = gt[i].second;
    record.add = add_error(delta);
    record.adds = adds_error(delta);
    record.seconds = seconds;
    record.lost = tracked.lost;
    if (record.lost) ++result.lost_frames;
    result.frames.push_back(record);

    if (!options.debug_dir.empty())
      write_debug_dumps(options.debug_dir, gt[i].first, frames[0], tracker,
                        tracked.pose);
  }

  ErrorSeries add_series{{}, 0.1}, adds_series{{}, 0.1};
  std::vector<double> add_errors;
  for (const auto& f : result.frames) {
    add_series.errors.push_back(f.add);
    adds_series.errors.push_back(f.adds);
    add_errors.push_back(f.add);
  }
  result.add_auc = 100.0 * auc_score(add_series);
  result.adds_auc = 100.0 * auc_score(adds_series);
  result.opt_auc = opt_auc(add_errors, result.largest_vertex_distance);
  result.mean_fps =
      total_seconds > 0.0 ? double(gt.size() - 1) / total_seconds : 0.0;

  if (!options.output_dir.empty()) write_run_outputs(result, options.output_dir);
  return result;
}

void write_run_outputs(const RunResult& result,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::vector<std::pair<int, Pose>> poses;
  for (const auto& f : result.frames) poses.emplace_back(f.frame, f.estimate);
  write_pose_csv(out_dir / "poses.csv", poses);

  std::ofstream metrics(out_dir / "metrics.csv");
  metrics << "frame,e_add,e_adds\n";
  metrics.precision(17);
  for (const auto& f : result.frames)
    metrics << f.frame << "," << f.add << "," << f.adds << "\n";

  nlohmann::json j;
  j["label"] = result.label;
  j["sequence"] = result.sequence;
  j["add_auc"] = result.add_auc;
  j["adds_auc"] = result.adds_auc;
  j["opt_auc"] = result.opt_auc;
  j["mean_fps"] = result.mean_fps;
  j["lost_frames"] = result.lost_frames;
  j["largest_vertex_distance"] = result.largest_vertex_distance;
  j["frames"] = result.frames.size();
  std::ofstream summary(out_dir / "summary.json");
  summary << j.dump(2) << "\n";
}

RunResult read_run_summary(const std::filesystem::path& summary_json) {
  std::ifstream file(summary_json);
  if (!file)
    throw std::runtime_error("cannot read " + summary_json.string());
  nlohmann::json j;
  file >> j;
  RunResult r;
  r.label = j.at("label");
  r.sequence = j.at("sequence");
  r.add_auc = j.at("add_auc");
  r.adds_auc = j.at("adds_auc");
  r.opt_auc = j.at("opt_auc");
  r.mean_fps = j.at("mean_fps");
  r.lost_frames = j.at("lost_frames");
  r.largest_vertex_distance = j.at("largest_vertex_distance");
  return r;
}

std::string report_text(const std::vector<RunResult>& results) {
  std::ostringstream out;
  out << "sequence          label                 ADD    ADD-S     FPS  lost\n";
  for (const auto& r : results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-17s %-20s %5.1f  %7.1f %7.1f %5d\n",
                  r.sequence.c_str(), r.label.c_str(), r.add_auc, r.adds_auc,
                  r.mean_fps, r.lost_frames);
    out << line;
  }
  return out.str();
}

void write_report(const std::vector<RunResult>& results,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream text(out_dir / "report.txt");
  text << report_text(results);

  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    j.push_back({{"label", r.label},
                 {"sequence", r.sequence},
                 {"add_auc", r.add_auc},
                 {"adds_auc", r.adds_auc},
                 {"opt_auc", r.opt_auc},
                 {"mean_fps", r.mean_fps},
                 {"lost_frames", r.lost_frames}});
  }
  std::ofstream json_file(out_dir / "report.json");
  json_file << j.dump(2) << "\n";
}

}  // namespace mmt

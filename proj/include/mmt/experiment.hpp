#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmt/config.hpp"
#include "mmt/tracker.hpp"

// Experiment orchestration: model caching, tracking runs over on-disk
// sequences, ablation handling, and report emission.

namespace mmt {

struct ObjectModels {
  std::vector<std::shared_ptr<const TriangleMesh>> region_meshes;
  std::shared_ptr<const TriangleMesh> merged_mesh;
  std::vector<std::shared_ptr<const SparseViewpointModel>> region_models;
  std::shared_ptr<const SparseViewpointModel> merged_region_model;
  std::shared_ptr<const SparseViewpointModel> depth_model;
};

// Loads cached models matching the config's content hashes; regenerates and
// saves on mismatch or absence.
ObjectModels load_or_generate_models(const TrackerConfig& config, int threads);

struct RunOptions {
  std::string label = "full";
  bool no_texture = false;
  bool no_depth = false;
  bool no_region = false;
  bool no_multiregion = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::filesystem::path output_dir;  // empty: nothing written
  std::filesystem::path debug_dir;   // empty: no debug dumps
};

struct FrameRecord {
  int frame = 0;
  Pose estimate;
  Pose ground_truth;
  double add = 0.0;
  double adds = 0.0;
  double seconds = 0.0;  // tracking time, excludes image decode
  bool lost = false;
};

struct RunResult {
  std::string label;
  std::string sequence;
  std::vector<FrameRecord> frames;
  double add_auc = 0.0;    // percent, e_t = 0.1 m
  double adds_auc = 0.0;   // percent
  double opt_auc = 0.0;    // [0, 20], e_t = 0.2 d
  double mean_fps = 0.0;   // frames / summed tracking time
  int lost_frames = 0;
  double largest_vertex_distance = 0.0;
};

Tracker build_tracker(const TrackerConfig& config, const ObjectModels& models,
                      const RunOptions& options);

RunResult run_tracking(const std::filesystem::path& sequence_dir,
                       const TrackerConfig& config, const RunOptions& options);

// poses.csv, metrics.csv, summary.json under the directory.
void write_run_outputs(const RunResult& result,
                       const std::filesystem::path& out_dir);
RunResult read_run_summary(const std::filesystem::path& summary_json);

// Deterministically formatted summary table (one labeled row per run).
std::string report_text(const std::vector<RunResult>& results);
void write_report(const std::vector<RunResult>& results,
                  const std::filesystem::path& out_dir);

}  // namespace mmt

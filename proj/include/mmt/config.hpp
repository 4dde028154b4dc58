#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmt/depth_modality.hpp"
#include "mmt/optimization.hpp"
#include "mmt/region_modality.hpp"
#include "mmt/texture_modality.hpp"
#include "mmt/viewpoint_model.hpp"

// Tracker configuration: a single JSON document (schema in the README);
// CLI flags override config keys.

namespace mmt {

struct RegionEntryConfig {
  std::string name;
  std::filesystem::path mesh;  // resolved against the config directory
  std::uint32_t region_id = 1;
};

struct ExternalBodyConfig {
  std::string name;
  std::filesystem::path mesh;
  BodyClass cls = BodyClass::kFixed;
};

struct TrackerConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  Intrinsics camera;
  std::string object_name = "object";
  std::vector<RegionEntryConfig> regions;
  std::vector<ExternalBodyConfig> external_bodies;

  bool use_region = true;
  bool use_depth = true;
  bool use_texture = true;
  bool multi_region = true;

  RegionModalityConfig region;
  DepthModalityConfig depth;
  TextureParams texture;
  OptimizerConfig optimizer;
  ModelGenConfig model_gen;

  std::filesystem::path models_dir = "models";
};

TrackerConfig load_tracker_config(const std::filesystem::path& path);
void save_tracker_config(const std::filesystem::path& path,
                         const TrackerConfig& config);

}  // namespace mmt

#include "mmt/config.hpp"

#include <fstream>

#include <json.hpp>

namespace mmt {

namespace {

using nlohmann::json;

json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"px", k.px}, {"py", k.py},
          {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const json& j) {
  Intrinsics k;
  k.fx = j.at("fx");
  k.fy = j.at("fy");
  k.px = j.at("px");
  k.py = j.at("py");
  k.width = j.at("width");
  k.height = j.at("height");
  if (k.fx <= 0 || k.fy <= 0 || k.px < 0 || k.px >= k.width || k.py < 0 ||
      k.py >= k.height)
    throw std::runtime_error("config: invalid intrinsics");
  return k;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrackerConfig load_tracker_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("config: cannot open " + path.string());
  json j;
  file >> j;
  const auto base = std::filesystem::absolute(path).parent_path();

  TrackerConfig c;
  read_if(j, "seed", c.seed);
  read_if(j, "threads", c.threads);
  c.camera = intrinsics_from_json(j.at("camera"));
  const json& object = j.at("object");
  read_if(object, "name", c.object_name);
  for (const auto& r : object.at("regions")) {
    RegionEntryConfig entry;
    entry.name = r.at("name");
    entry.mesh = base / r.at("mesh").get<std::string>();
    entry.region_id = r.at("region_id");
    if (!std::filesystem::exists(entry.mesh))
      throw std::runtime_error("config: missing mesh " + entry.mesh.string());
    c.regions.push_back(entry);
  }
  if (c.regions.empty()) throw std::runtime_error("config: no regions");
  if (object.contains("external_bodies")) {
    for (const auto& r : object.at("external_bodies")) {
      ExternalBodyConfig entry;
      entry.name = r.at("name");
      entry.mesh = base / r.at("mesh").get<std::string>();
      entry.cls = body_class_from_string(r.at("class"));
      if (!std::filesystem::exists(entry.mesh))
        throw std::runtime_error("config: missing mesh " + entry.mesh.string());
      c.external_bodies.push_back(entry);
    }
  }

  if (j.contains("modalities")) {
    const json& m = j.at("modalities");
    read_if(m, "use_region", c.use_region);
    read_if(m, "use_depth", c.use_depth);
    read_if(m, "use_texture", c.use_texture);
    read_if(m, "multi_region", c.multi_region);
    if (m.contains("region")) {
      const json& r = m.at("region");
      read_if(r, "line_cap", c.region.line_cap);
      read_if(r, "scale_schedule", c.region.scale_schedule);
      read_if(r, "min_continuous_segments", c.region.min_continuous_segments);
      read_if(r, "learn_rate", c.region.learn_rate);
      read_if(r, "sigma_floor_px", c.region.sigma_floor_px);
      read_if(r, "step_amplitude", c.region.step_amplitude);
      read_if(r, "min_lines", c.region.min_lines);
      if (c.region.scale_schedule.empty())
        throw std::runtime_error("config: empty region scale schedule");
    }
    if (m.contains("depth")) {
      const json& d = m.at("depth");
      read_if(d, "radius_schedule", c.depth.radius_schedule);
      read_if(d, "sigma_schedule", c.depth.sigma_schedule);
      read_if(d, "max_correspondences", c.depth.max_correspondences);
      read_if(d, "occlusion_tolerance_m", c.depth.occlusion_tolerance_m);
      read_if(d, "window_samples_per_side", c.depth.window_samples_per_side);
      if (c.depth.radius_schedule.empty() || c.depth.sigma_schedule.empty())
        throw std::runtime_error("config: empty depth schedule");
    }
    if (m.contains("texture")) {
      const json& t = m.at("texture");
      read_if(t, "sigma_schedule", c.texture.sigma_schedule);
      read_if(t, "tukey_c", c.texture.tukey_c);
      read_if(t, "ratio_threshold", c.texture.ratio_threshold);
      read_if(t, "keyframe_angle_deg", c.texture.keyframe_angle_deg);
      read_if(t, "occlusion_tolerance_m", c.texture.occlusion_tolerance_m);
      read_if(t, "max_keyframes", c.texture.max_keyframes);
      read_if(t, "max_features", c.texture.features.max_features);
      read_if(t, "pyramid_levels", c.texture.features.pyramid_levels);
      read_if(t, "scale_factor", c.texture.features.scale_factor);
      read_if(t, "fast_threshold", c.texture.features.fast_threshold);
      read_if(t, "crop_size", c.texture.features.crop_size);
      if (c.texture.sigma_schedule.empty())
        throw std::runtime_error("config: empty texture sigma schedule");
    }
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    read_if(o, "lambda_r", c.optimizer.lambda_r);
    read_if(o, "lambda_t", c.optimizer.lambda_t);
    read_if(o, "outer_iterations", c.optimizer.outer_iterations);
    read_if(o, "inner_iterations", c.optimizer.inner_iterations);
  }

  if (j.contains("model_gen")) {
    const json& g = j.at("model_gen");
    read_if(g, "sphere_subdivisions", c.model_gen.sphere_subdivisions);
    read_if(g, "sphere_radius", c.model_gen.sphere_radius);
    read_if(g, "image_size", c.model_gen.image_size);
    read_if(g, "focal_length", c.model_gen.focal_length);
    read_if(g, "max_points_per_view", c.model_gen.max_points_per_view);
    read_if(g, "distance_cap", c.model_gen.distance_cap);
    read_if(g, "validation_neighborhood_px",
            c.model_gen.validation_neighborhood_px);
    read_if(g, "max_surface_slope_deg", c.model_gen.max_surface_slope_deg);
  }

  std::string models_dir = "models";
  read_if(j, "models_dir", models_dir);
  c.models_dir = base / models_dir;
  return c;
}

void save_tracker_config(const std::filesystem::path& path,
                         const TrackerConfig& c) {
  const auto base = std::filesystem::absolute(path).parent_path();
  auto rel = [&base](const std::filesystem::path& p) {
    return std::filesystem::proximate(std::filesystem::absolute(p), base)
        .generic_string();
  };
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["camera"] = intrinsics_to_json(c.camera);
  json regions = json::array();
  for (const auto& r : c.regions)
    regions.push_back({{"name", r.name},
                       {"mesh", rel(r.mesh)},
                       {"region_id", r.region_id}});
  json externals = json::array();
  for (const auto& r : c.external_bodies)
    externals.push_back({{"name", r.name},
                         {"mesh", rel(r.mesh)},
                         {"class", to_string(r.cls)}});
  j["object"] = {{"name", c.object_name},
                 {"regions", regions},
                 {"external_bodies", externals}};
  j["modalities"] = {
      {"use_region", c.use_region},
      {"use_depth", c.use_depth},
      {"use_texture", c.use_texture},
      {"multi_region", c.multi_region},
      {"region",
       {{"line_cap", c.region.line_cap},
        {"scale_schedule", c.region.scale_schedule},
        {"min_continuous_segments", c.region.min_continuous_segments},
        {"learn_rate", c.region.learn_rate},
        {"sigma_floor_px", c.region.sigma_floor_px},
        {"step_amplitude", c.region.step_amplitude},
        {"min_lines", c.region.min_lines}}},
      {"depth",
       {{"radius_schedule", c.depth.radius_schedule},
        {"sigma_schedule", c.depth.sigma_schedule},
        {"max_correspondences", c.depth.max_correspondences},
        {"occlusion_tolerance_m", c.depth.occlusion_tolerance_m},
        {"window_samples_per_side", c.depth.window_samples_per_side}}},
      {"texture",
       {{"sigma_schedule", c.texture.sigma_schedule},
        {"tukey_c", c.texture.tukey_c},
        {"ratio_threshold", c.texture.ratio_threshold},
        {"keyframe_angle_deg", c.texture.keyframe_angle_deg},
        {"occlusion_tolerance_m", c.texture.occlusion_tolerance_m},
        {"max_keyframes", c.texture.max_keyframes},
        {"max_features", c.texture.features.max_features},
        {"pyramid_levels", c.texture.features.pyramid_levels},
        {"scale_factor", c.texture.features.scale_factor},
        {"fast_threshold", c.texture.features.fast_threshold},
        {"crop_size", c.texture.features.crop_size}}}};
  j["optimizer"] = {{"lambda_r", c.optimizer.lambda_r},
                    {"lambda_t", c.optimizer.lambda_t},
                    {"outer_iterations", c.optimizer.outer_iterations},
                    {"inner_iterations", c.optimizer.inner_iterations}};
  j["model_gen"] = {
      {"sphere_subdivisions", c.model_gen.sphere_subdivisions},
      {"sphere_radius", c.model_gen.sphere_radius},
      {"image_size", c.model_gen.image_size},
      {"focal_length", c.model_gen.focal_length},
      {"max_points_per_view", c.model_gen.max_points_per_view},
      {"distance_cap", c.model_gen.distance_cap},
      {"validation_neighborhood_px", c.model_gen.validation_neighborhood_px},
      {"max_surface_slope_deg", c.model_gen.max_surface_slope_deg}};
  j["models_dir"] = rel(c.models_dir);

  std::ofstream file(path);
  if (!file) throw std::runtime_error("config: cannot write " + path.string());
  file << j.dump(2) << "\n";
}

}  // namespace mmt

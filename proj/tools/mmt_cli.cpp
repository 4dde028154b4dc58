// Command-line interface: model generation, synthetic sequence generation,
// tracking runs, report aggregation, and the self-test suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmt/config.hpp"
#include "mmt/experiment.hpp"
#include "mmt/kernels/kernels.hpp"
#include "mmt/selfcheck.hpp"
#include "mmt/sequence.hpp"
#include "mmt/viewpoint_model.hpp"

namespace {

void apply_kernel_backend(const std::string& name) {
  using mmt::kernels::Backend;
  if (name == "auto" || name.empty()) return;
  Backend backend = Backend::kScalar;
  if (name == "scalar")
    backend = Backend::kScalar;
  else if (name == "avx2")
    backend = Backend::kAvx2;
  else if (name == "neon")
    backend = Backend::kNeon;
  else
    throw CLI::ValidationError("--kernels", "unknown backend " + name);
  mmt::kernels::set_backend(backend);
}

int cmd_modelgen(const std::string& config_path,
                 const std::vector<std::string>& meshes,
                 const std::vector<std::string>& classes, int sphere_level,
                 double distance_cap, double sphere_radius,
                 const std::string& kind, const std::string& output,
                 int threads) {
  if (!config_path.empty()) {
    const auto config = mmt::load_tracker_config(config_path);
    mmt::load_or_generate_models(config, threads);
    std::printf("models ready in %s\n", config.models_dir.string().c_str());
    return 0;
  }

  if (meshes.empty()) {
    std::fprintf(stderr, "modelgen: provide --config or --mesh\n");
    return 1;
  }
  mmt::ModelGenConfig gen;
  gen.sphere_subdivisions = sphere_level;
  gen.distance_cap = distance_cap;
  gen.sphere_radius = sphere_radius;

  mmt::SparseViewpointModel model;
  if (kind == "depth") {
    model = mmt::generate_depth_model(
        std::make_shared<mmt::TriangleMesh>(mmt::load_mesh(meshes[0])), gen,
        threads);
  } else {
    auto main_mesh =
        std::make_shared<mmt::TriangleMesh>(mmt::load_mesh(meshes[0]));
    std::vector<mmt::GenBody> others;
    for (std::size_t i = 1; i < meshes.size(); ++i) {
      const std::string cls = i - 1 < classes.size() ? classes[i - 1] : "FIXED";
      others.push_back(
          {std::make_shared<mmt::TriangleMesh>(mmt::load_mesh(meshes[i])),
           mmt::body_class_from_string(cls)});
    }
    model = mmt::generate_region_model(main_mesh, others, 1, gen, threads);
  }
  mmt::save_model(output, model);
  std::size_t points = 0;
  for (const auto& v : model.views)
    points += v.contour_points.size() + v.surface_points.size();
  std::printf("wrote %s: %zu views, %zu points\n", output.c_str(),
              model.views.size(), points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modality 6-DoF rigid-object pose tracker"};
  app.require_subcommand(1);

  std::string kernels = "auto";
  app.add_option("--kernels", kernels,
                 "kernel backend: auto, scalar, avx2, neon");

  // --- modelgen ---
  auto* modelgen = app.add_subcommand(
      "modelgen", "generate sparse viewpoint models");
  std::string mg_config;
  std::vector<std::string> mg_meshes, mg_classes;
  std::string mg_kind = "region", mg_output = "model.svm";
  int mg_level = 3, mg_threads = 1;
  double mg_cap = 0.5, mg_radius = 0.8;
  modelgen->add_option("--config", mg_config,
                       "tracker config; generates all models it needs");
  modelgen->add_option("--mesh", mg_meshes,
                       "MAIN mesh followed by neighboring body meshes");
  modelgen->add_option("--class", mg_classes,
                       "class per neighboring mesh: FIXED, SAME_REGION, MOVABLE");
  modelgen->add_option("--kind", mg_kind, "region or depth");
  modelgen->add_option("--sphere-level", mg_level, "icosphere subdivisions");
  modelgen->add_option("--distance-cap", mg_cap, "fg/bg distance cap (m)");
  modelgen->add_option("--sphere-radius", mg_radius, "virtual camera distance (m)");
  modelgen->add_option("--output", mg_output, "output .svm path");
  modelgen->add_option("--threads", mg_threads, "worker threads");

  // --- gen-seq ---
  auto* genseq = app.add_subcommand(
      "gen-seq", "generate a synthetic RGB-D sequence");
  std::string gs_preset = "cuboid", gs_output = "sequence";
  int gs_frames = 200, gs_threads = 1;
  std::uint64_t gs_seed = 1;
  genseq->add_option("--preset", gs_preset,
                     "cuboid, cylinder, or occluded-box");
  genseq->add_option("--frames", gs_frames, "frame count");
  genseq->add_option("--seed", gs_seed, "RNG seed");
  genseq->add_option("--output", gs_output, "output directory");
  genseq->add_option("--threads", gs_threads, "worker threads");

  // --- track ---
  auto* track = app.add_subcommand("track", "track a sequence");
  std::string tr_sequence, tr_config, tr_output = "run", tr_label = "full";
  std::string tr_debug;
  bool tr_no_texture = false, tr_no_depth = false, tr_no_region = false;
  bool tr_no_multiregion = false;
  std::int64_t tr_seed = -1;
  int tr_threads = 0;
  track->add_option("--sequence", tr_sequence, "sequence directory")
      ->required();
  track->add_option("--config", tr_config,
                    "tracker config (default: <sequence>/tracker_config.json)");
  track->add_option("--output", tr_output, "output directory");
  track->add_option("--label", tr_label, "run label in reports");
  track->add_option("--seed", tr_seed, "override config seed");
  track->add_option("--threads", tr_threads, "override config threads");
  track->add_option("--debug-dumps", tr_debug,
                    "directory for per-frame overlay images");
  track->add_flag("--no-texture", tr_no_texture, "disable the texture modality");
  track->add_flag("--no-depth", tr_no_depth, "disable the depth modality");
  track->add_flag("--no-region", tr_no_region, "disable all region modalities");
  track->add_flag("--no-multiregion", tr_no_multiregion,
                  "use a single merged region");

  // --- report ---
  auto* report = app.add_subcommand("report", "aggregate run summaries");
  std::vector<std::string> rp_inputs;
  std::string rp_output = "report";
  report->add_option("summaries", rp_inputs, "summary.json files")->required();
  report->add_option("--output", rp_output, "output directory");

  // --- selftest ---
  auto* selftest = app.add_subcommand(
      "selftest", "run finite-difference and oracle checks");
  std::uint64_t st_seed = 1;
  selftest->add_option("--seed", st_seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_kernel_backend(kernels);

    if (*modelgen) {
      return cmd_modelgen(mg_config, mg_meshes, mg_classes, mg_level, mg_cap,
                          mg_radius, mg_kind, mg_output, mg_threads);
    }
    if (*genseq) {
      const auto spec = mmt::make_preset_sequence(
          mmt::scene_preset_from_string(gs_preset), gs_frames, gs_seed);
      mmt::generate_sequence(spec, gs_output, gs_threads);
      std::printf("wrote %d frames to %s\n", gs_frames, gs_output.c_str());
      return 0;
    }
    if (*track) {
      if (tr_config.empty())
        tr_config = (std::filesystem::path(tr_sequence) /
                     "tracker_config.json").string();
      auto config = mmt::load_tracker_config(tr_config);
      mmt::RunOptions options;
      options.label = tr_label;
      options.no_texture = tr_no_texture;
      options.no_depth = tr_no_depth;
      options.no_region = tr_no_region;
      options.no_multiregion = tr_no_multiregion;
      options.output_dir = tr_output;
      options.debug_dir = tr_debug;
      if (tr_seed >= 0) options.seed = std::uint64_t(tr_seed);
      if (tr_threads > 0) options.threads = tr_threads;
      const auto result = mmt::run_tracking(tr_sequence, config, options);
      std::printf("%s", mmt::report_text({result}).c_str());
      // Exit code 0 even when tracking is lost; losses are in the report.
      return 0;
    }
    if (*report) {
      std::vector<mmt::RunResult> results;
      for (const auto& path : rp_inputs)
        results.push_back(mmt::read_run_summary(path));
      mmt::write_report(results, rp_output);
      std::printf("%s", mmt::report_text(results).c_str());
      return 0;
    }
    if (*selftest) {
      const auto results = mmt::selfcheck::run_all(st_seed);
      bool all_passed = true;
      for (const auto& r : results) {
        std::printf("[%s] %s (%s)\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.detail.c_str());
        all_passed &= r.passed;
      }
      return all_passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

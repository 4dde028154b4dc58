#include "mmt/tracker.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace mmt {

// ---- optimization ------------------------------------------------------------

NormalEquations assemble(const std::vector<NormalEquations>& contribs) {
  NormalEquations total;
  for (const auto& c : contribs) {
    total.g += c.g;
    total.H += c.H;
  }
  return total;
}

Variation solve_step(const NormalEquations& ne, const OptimizerConfig& cfg) {
  Mat6 system = -ne.H;
  system.topLeftCorner<3, 3>() += cfg.lambda_r * Mat3::Identity();
  system.bottomRightCorner<3, 3>() += cfg.lambda_t * Mat3::Identity();

  const Eigen::LLT<Mat6> llt(system);
  if (llt.info() != Eigen::Success)
    throw SingularStepError("solve_step: damped system not positive definite");
  return Variation::from_vec6(llt.solve(ne.g));
}

NormalEquations camera_transform_contribs(const NormalEquations& ne,
                                          const Pose& /*camera_extrinsics*/) {
  if (ne.frame != VariationFrame::kModel)
    throw std::runtime_error(
        "camera_transform_contribs: contribution not in the model frame");
  return ne;
}

// ---- region ------------------------------------------------------------------

RegionModality::RegionModality(std::string name, int camera_index,
                               Intrinsics k, Pose extrinsics,
                               std::shared_ptr<const SparseViewpointModel> model,
                               RegionModalityConfig config)
    : Modality(std::move(name), camera_index, k, extrinsics),
      model_(std::move(model)), config_(config) {
  if (!model_ || model_->kind != SparseViewpointModel::Kind::kRegion)
    throw std::invalid_argument("RegionModality: region model required");
}

void RegionModality::initialize(const CameraFrame& frame, const Pose& pose) {
  update_histograms(frame.color, camera_pose(pose), *model_, intrinsics(),
                    histograms_, 1.0);
}

void RegionModality::start_frame(const CameraFrame& frame, const Pose&) {
  frame_ = &frame;
  lines_.clear();
}

bool RegionModality::establish_correspondences(const Pose& pose,
                                               int iteration) {
  lines_ = build_correspondence_lines(frame_->color, camera_pose(pose),
                                      *model_, intrinsics(), histograms_,
                                      config_, iteration);
  return int(lines_.size()) >= config_.min_lines;
}

NormalEquations RegionModality::normal_equations(const Pose& pose, int) {
  return region_normal_equations(lines_, camera_pose(pose), intrinsics(),
                                 config_);
}

void RegionModality::end_frame(const CameraFrame& frame, const Pose& pose) {
  update_histograms(frame.color, camera_pose(pose), *model_, intrinsics(),
                    histograms_, config_.learn_rate);
}

// ---- depth -------------------------------------------------------------------

DepthModality::DepthModality(std::string name, int camera_index, Intrinsics k,
                             Pose extrinsics,
                             std::shared_ptr<const SparseViewpointModel> model,
                             DepthModalityConfig config)
    : Modality(std::move(name), camera_index, k, extrinsics),
      model_(std::move(model)), config_(config) {
  if (!model_ || model_->kind != SparseViewpointModel::Kind::kDepth)
    throw std::invalid_argument("DepthModality: depth model required");
}

void DepthModality::initialize(const CameraFrame&, const Pose&) {}

void DepthModality::start_frame(const CameraFrame& frame, const Pose&) {
  frame_ = &frame;
  correspondences_.clear();
}

bool DepthModality::establish_correspondences(const Pose& pose,
                                              int iteration) {
  correspondences_ = find_depth_correspondences(
      frame_->depth, camera_pose(pose), *model_, intrinsics(), config_,
      iteration);
  return !correspondences_.empty();
}

NormalEquations DepthModality::normal_equations(const Pose& pose,
                                                int iteration) {
  return depth_normal_equations(correspondences_, camera_pose(pose), config_,
                                iteration);
}

void DepthModality::end_frame(const CameraFrame&, const Pose&) {}

// ---- texture -----------------------------------------------------------------

TextureModality::TextureModality(std::string name, int camera_index,
                                 Intrinsics k, Pose extrinsics,
                                 std::shared_ptr<const TriangleMesh> mesh,
                                 std::shared_ptr<const FeatureExtractor> extractor,
                                 TextureParams params)
    : Modality(std::move(name), camera_index, k, extrinsics),
      mesh_(std::move(mesh)), extractor_(std::move(extractor)),
      params_(params), store_(params.max_keyframes) {
  if (!mesh_ || !extractor_)
    throw std::invalid_argument("TextureModality: mesh and extractor required");
}

void TextureModality::initialize(const CameraFrame& frame, const Pose& pose) {
  maybe_add_keyframe(camera_pose(pose), frame.gray, frame.depth, store_,
                     params_, mesh_, *extractor_, intrinsics());
}

void TextureModality::start_frame(const CameraFrame& frame,
                                  const Pose& prev_pose) {
  matches_.clear();
  observations_.clear();
  const Pose prev_camera = camera_pose(prev_pose);
  const Roi roi =
      roi_from_points(mesh_->vertices, prev_camera, intrinsics());
  if (roi.degenerate()) return;
  observations_ = extractor_->detect_and_describe(frame.gray, roi);
  matches_ = match_features(observations_, store_, params_);
}

bool TextureModality::establish_correspondences(const Pose&, int) {
  // Matches are established once per frame; weights are refreshed in every
  // Newton iteration.
  return !matches_.empty();
}

NormalEquations TextureModality::normal_equations(const Pose& pose,
                                                  int iteration) {
  return texture_normal_equations(matches_, camera_pose(pose), intrinsics(),
                                  params_, iteration);
}

void TextureModality::end_frame(const CameraFrame& frame, const Pose& pose) {
  // Reuses this frame's detections; their coordinates are full-image.
  maybe_add_keyframe(camera_pose(pose), frame.gray, frame.depth, store_,
                     params_, mesh_, *extractor_, intrinsics(),
                     &observations_);
}

// ---- tracker -----------------------------------------------------------------

Tracker::Tracker(OptimizerConfig config,
                 std::vector<std::unique_ptr<Modality>> modalities)
    : config_(config), modalities_(std::move(modalities)) {
  if (modalities_.empty())
    throw std::invalid_argument("Tracker: at least one modality required");
}

void Tracker::initialize(const std::vector<CameraFrame>& frames,
                         const Pose& pose) {
  pose_ = pose;
  for (auto& m : modalities_) m->initialize(frames.at(m->camera_index()), pose);
  initialized_ = true;
}

TrackResult Tracker::track_frame(const std::vector<CameraFrame>& frames) {
  if (!initialized_)
    throw std::runtime_error("Tracker: track_frame before initialize");
  const Pose previous = pose_;

  for (auto& m : modalities_)
    m->start_frame(frames.at(m->camera_index()), previous);

  for (int outer = 0; outer < config_.outer_iterations; ++outer) {
    bool any_information = false;
    for (auto& m : modalities_)
      any_information |= m->establish_correspondences(pose_, outer);
    if (!any_information) {
      pose_ = previous;
      return {previous, true};
    }

    for (int inner = 0; inner < config_.inner_iterations; ++inner) {
      std::vector<NormalEquations> contribs;
      contribs.reserve(modalities_.size());
      for (auto& m : modalities_)
        contribs.push_back(camera_transform_contribs(
            m->normal_equations(pose_, outer), m->extrinsics()));
      const NormalEquations ne = assemble(contribs);
      Variation step;
      try {
        step = solve_step(ne, config_);
      } catch (const SingularStepError&) {
        pose_ = previous;
        return {previous, true};
      }
      pose_ = apply_variation(pose_, step);
    }
  }

  for (auto& m : modalities_)
    m->end_frame(frames.at(m->camera_index()), pose_);
  return {pose_, false};
}

}  // namespace mmt

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmt/depth_modality.hpp"
#include "mmt/feature.hpp"
#include "mmt/image.hpp"
#include "mmt/optimization.hpp"
#include "mmt/region_modality.hpp"
#include "mmt/texture_modality.hpp"
#include "mmt/viewpoint_model.hpp"

// Per-frame optimization loop: modality orchestration, gradient/Hessian
// assembly, Tikhonov-regularized Newton step, and pose update.

namespace mmt {

struct CameraFrame {
  ImageRgb8 color;  // empty for depth-only cameras
  ImageU8 gray;     // derived from color when present
  ImageF depth;     // meters; empty when no depth sensor
};

// One information channel bound to a camera. The pose handed to modalities
// is reference-camera-from-model; each modality applies its own extrinsics.
class Modality {
 public:
  Modality(std::string name, int camera_index, Intrinsics intrinsics,
           Pose extrinsics)
      : name_(std::move(name)), camera_index_(camera_index),
        intrinsics_(intrinsics), extrinsics_(extrinsics) {}
  virtual ~Modality() = default;

  const std::string& name() const { return name_; }
  int camera_index() const { return camera_index_; }
  const Intrinsics& intrinsics() const { return intrinsics_; }
  const Pose& extrinsics() const { return extrinsics_; }

  Pose camera_pose(const Pose& reference_pose) const {
    return extrinsics_ * reference_pose;
  }

  // First frame at the initial pose (histograms, first keyframe).
  virtual void initialize(const CameraFrame& frame, const Pose& pose) = 0;
  // Once per frame before iterations begin; prev_pose is the last estimate.
  virtual void start_frame(const CameraFrame& frame, const Pose& prev_pose) = 0;
  // Re-establish correspondences at the iteration's scale. Returns false
  // when the modality has no usable information (degraded).
  virtual bool establish_correspondences(const Pose& pose, int iteration) = 0;
  virtual NormalEquations normal_equations(const Pose& pose,
                                           int iteration) = 0;
  // Housekeeping after the frame's optimization (histogram/keyframe updates).
  virtual void end_frame(const CameraFrame& frame, const Pose& pose) = 0;

 private:
  std::string name_;
  int camera_index_;
  Intrinsics intrinsics_;
  Pose extrinsics_;
};

class RegionModality : public Modality {
 public:
  RegionModality(std::string name, int camera_index, Intrinsics k,
                 Pose extrinsics,
                 std::shared_ptr<const SparseViewpointModel> model,
                 RegionModalityConfig config);

  void initialize(const CameraFrame& frame, const Pose& pose) override;
  void start_frame(const CameraFrame& frame, const Pose& prev_pose) override;
  bool establish_correspondences(const Pose& pose, int iteration) override;
  NormalEquations normal_equations(const Pose& pose, int iteration) override;
  void end_frame(const CameraFrame& frame, const Pose& pose) override;

  const std::vector<CorrespondenceLine>& lines() const { return lines_; }
  const ColorHistogramPair& histograms() const { return histograms_; }

 private:
  std::shared_ptr<const SparseViewpointModel> model_;
  RegionModalityConfig config_;
  ColorHistogramPair histograms_;
  std::vector<CorrespondenceLine> lines_;
  const CameraFrame* frame_ = nullptr;
};

class DepthModality : public Modality {
 public:
  DepthModality(std::string name, int camera_index, Intrinsics k,
                Pose extrinsics,
                std::shared_ptr<const SparseViewpointModel> model,
                DepthModalityConfig config);

  void initialize(const CameraFrame& frame, const Pose& pose) override;
  void start_frame(const CameraFrame& frame, const Pose& prev_pose) override;
  bool establish_correspondences(const Pose& pose, int iteration) override;
  NormalEquations normal_equations(const Pose& pose, int iteration) override;
  void end_frame(const CameraFrame& frame, const Pose& pose) override;

  const std::vector<DepthCorrespondence>& correspondences() const {
    return correspondences_;
  }

 private:
  std::shared_ptr<const SparseViewpointModel> model_;
  DepthModalityConfig config_;
  std::vector<DepthCorrespondence> correspondences_;
  const CameraFrame* frame_ = nullptr;
};

class TextureModality : public Modality {
 public:
  TextureModality(std::string name, int camera_index, Intrinsics k,
                  Pose extrinsics, std::shared_ptr<const TriangleMesh> mesh,
                  std::shared_ptr<const FeatureExtractor> extractor,
                  TextureParams params);

  void initialize(const CameraFrame& frame, const Pose& pose) override;
  void start_frame(const CameraFrame& frame, const Pose& prev_pose) override;
  bool establish_correspondences(const Pose& pose, int iteration) override;
  NormalEquations normal_equations(const Pose& pose, int iteration) override;
  void end_frame(const CameraFrame& frame, const Pose& pose) override;

  const std::vector<Match>& matches() const { return matches_; }
  const KeyframeStore& store() const { return store_; }

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  std::shared_ptr<const FeatureExtractor> extractor_;
  TextureParams params_;
  KeyframeStore store_;
  std::vector<FeatureObservation> observations_;
  std::vector<Match> matches_;
};

struct TrackResult {
  Pose pose;
  bool lost = false;
};

class Tracker {
 public:
  Tracker(OptimizerConfig config,
          std::vector<std::unique_ptr<Modality>> modalities);

  // Initial pose (reference-camera-from-model), e.g. ground truth at the
  // sequence start.
  void initialize(const std::vector<CameraFrame>& frames, const Pose& pose);

  TrackResult track_frame(const std::vector<CameraFrame>& frames);

  const Pose& pose() const { return pose_; }
  const std::vector<std::unique_ptr<Modality>>& modalities() const {
    return modalities_;
  }

 private:
  OptimizerConfig config_;
  std::vector<std::unique_ptr<Modality>> modalities_;
  Pose pose_;
  bool initialized_ = false;
};

}  // namespace mmt

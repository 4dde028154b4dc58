#pragma once

#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/image.hpp"
#include "mmt/optimization.hpp"
#include "mmt/viewpoint_model.hpp"

// Depth-image modality: model-point-to-measurement correspondences and
// point-to-plane normal equations.

namespace mmt {

struct DepthCorrespondence {
  Vec3 model_point = Vec3::Zero();   // model frame
  Vec3 model_normal = Vec3::Zero();  // model frame, unit
  Vec3 measured = Vec3::Zero();      // camera frame, backprojected depth pixel
};

struct DepthModalityConfig {
  std::vector<double> radius_schedule = {0.05, 0.02, 0.01};  // meters
  std::vector<double> sigma_schedule = {0.02, 0.01, 0.005};  // meters
  int max_correspondences = 200;
  double occlusion_tolerance_m = 0.010;
  int window_samples_per_side = 11;  // stride-subsampled search window
};

// For each surface point of the closest view, searches a pixel window sized
// to the current search radius for the backprojected depth point nearest to
// the transformed model point; accepts within the radius.
std::vector<DepthCorrespondence> find_depth_correspondences(
    const ImageF& depth, const Pose& camera_pose,
    const SparseViewpointModel& model, const Intrinsics& k,
    const DepthModalityConfig& config, int iteration);

// Point-to-plane residuals n_i . (measured - model) with frozen normals,
// Gaussian model with sigma from the schedule.
NormalEquations depth_normal_equations(
    const std::vector<DepthCorrespondence>& correspondences,
    const Pose& camera_pose, const DepthModalityConfig& config, int iteration);

}  // namespace mmt

#include "mmt/depth_modality.hpp"

#include <algorithm>
#include <cmath>

#include "mmt/kernels/kernels.hpp"
#include "mmt/rasterizer.hpp"

namespace mmt {

std::vector<DepthCorrespondence> find_depth_correspondences(
    const ImageF& depth, const Pose& camera_pose,
    const SparseViewpointModel& model, const Intrinsics& k,
    const DepthModalityConfig& config, int iteration) {
  const auto& radii = config.radius_schedule;
  const double radius =
      radii[std::min<std::size_t>(iteration, radii.size() - 1)];

  std::vector<DepthCorrespondence> out;
  if (depth.empty()) return out;
  const ViewpointView& view = closest_view(model, camera_pose);

  std::vector<double> xs, ys, zs;
  int count = 0;
  for (const auto& sp : view.surface_points) {
    if (count >= config.max_correspondences) break;
    const Vec3 p_camera = camera_pose * sp.point;
    if (p_camera.z() <= 0.0) continue;
    const Vec2 center = project(p_camera, k);
    const int cx = int(std::floor(center.x()));
    const int cy = int(std::floor(center.y()));
    if (!depth.contains(cx, cy)) continue;

    // Occlusion gate: a measurement clearly in front of the prediction.
    const double measured_center = double(depth(cx, cy));
    if (measured_center > 0.0 &&
        measured_center < p_camera.z() - config.occlusion_tolerance_m)
      continue;

    const int half = std::clamp(
        int(std::ceil(radius * k.fx / p_camera.z())), 1, 60);
    const int stride = std::max(
        1, (2 * half + config.window_samples_per_side) /
               config.window_samples_per_side);

    xs.clear();
    ys.clear();
    zs.clear();
    for (int dy = -half; dy <= half; dy += stride) {
      for (int dx = -half; dx <= half; dx += stride) {
        const int x = cx + dx, y = cy + dy;
        if (!depth.contains(x, y)) continue;
        const double d = double(depth(x, y));
        if (d <= 0.0) continue;
        const Vec3 q = backproject(Vec2(x + 0.5, y + 0.5), d, k);
        xs.push_back(q.x());
        ys.push_back(q.y());
        zs.push_back(q.z());
      }
    }
    if (xs.empty()) continue;
    const auto best = kernels::argmin_sq_dist(
        p_camera.x(), p_camera.y(), p_camera.z(), xs.data(), ys.data(),
        zs.data(), xs.size());
    if (best.index < 0 || best.value >= radius * radius) continue;

    DepthCorrespondence corr;
    corr.model_point = sp.point;
    corr.model_normal = sp.normal;
    corr.measured = {xs[best.index], ys[best.index], zs[best.index]};
    out.push_back(corr);
    ++count;
  }
  return out;
}

NormalEquations depth_normal_equations(
    const std::vector<DepthCorrespondence>& correspondences,
    const Pose& camera_pose, const DepthModalityConfig& config,
    int iteration) {
  const auto& sigmas = config.sigma_schedule;
  const double sigma =
      sigmas[std::min<std::size_t>(iteration, sigmas.size() - 1)];
  const double inv_sigma2 = 1.0 / (sigma * sigma);

  NormalEquations ne;
  for (const auto& corr : correspondences) {
    const Vec3 p_camera = camera_pose * corr.model_point;
    const Vec3 n_camera = camera_pose.R * corr.model_normal;
    const double residual = n_camera.dot(corr.measured - p_camera);
    const Vec6 jacobian =
        (-n_camera.transpose() *
         variation_jacobian(corr.model_point, camera_pose))
            .transpose();
    ne.add_scalar_residual(inv_sigma2, residual, jacobian);
  }
  return ne;
}

}  // namespace mmt

#include "mmt/texture_modality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmt/kernels/kernels.hpp"
#include "mmt/rasterizer.hpp"

namespace mmt {

bool KeyframeStore::orientation_is_new(const Mat3& camera_to_model,
                                       double threshold_deg) const {
  const double threshold = threshold_deg * std::numbers::pi / 180.0;
  for (const auto& kf : keyframes_)
    if (geodesic_angle(kf.orientation, camera_to_model) <= threshold)
      return false;
  return true;
}

void KeyframeStore::add(Keyframe keyframe) {
  if (keyframe.entries.empty())
    throw std::invalid_argument("KeyframeStore::add: empty keyframe");
  keyframes_.push_back(std::move(keyframe));
  if (int(keyframes_.size()) > max_keyframes_)
    keyframes_.erase(keyframes_.begin());
  repack();
}

void KeyframeStore::repack() {
  packed_.clear();
  entry_points_.clear();
  for (const auto& kf : keyframes_) {
    for (const auto& entry : kf.entries) {
      packed_.insert(packed_.end(), entry.descriptor.words.begin(),
                     entry.descriptor.words.end());
      entry_points_.push_back(entry.model_point);
    }
  }
}

double tukey(double x, double c) {
  const double c2_6 = c * c / 6.0;
  if (std::abs(x) > c) return c2_6;
  const double u = 1.0 - (x / c) * (x / c);
  return c2_6 * (1.0 - u * u * u);
}

double tukey_weight(double r, double c) {
  r = std::abs(r);
  if (r >= c) return 0.0;
  if (r < 1e-6) return 0.5;
  return tukey(r, c) / (r * r);
}

std::vector<Match> match_features(const std::vector<FeatureObservation>& query,
                                  const KeyframeStore& store,
                                  const TextureParams& params) {
  std::vector<Match> matches;
  const std::size_t n = store.entry_count();
  if (n == 0 || query.empty()) return matches;

  struct Candidate {
    std::uint32_t distance;
    int query_index;
    std::ptrdiff_t entry_index;
  };
  std::vector<Candidate> candidates;
  for (int qi = 0; qi < int(query.size()); ++qi) {
    const auto near = kernels::nearest2_hamming256(
        query[qi].descriptor.words.data(), store.packed_descriptors().data(),
        n);
    if (near.best_index < 0) continue;
    const double ratio = double(near.best) / double(near.second);
    if (!(ratio < params.ratio_threshold)) continue;  // NaN-safe
    candidates.push_back({near.best, qi, near.best_index});
  }

  // Best query wins when several map to the same keyframe entry.
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return a.query_index < b.query_index;
            });
  std::vector<bool> used(n, false);
  for (const auto& c : candidates) {
    if (used[c.entry_index]) continue;
    used[c.entry_index] = true;
    Match m;
    m.observed = query[c.query_index].keypoint.pixel;
    m.model_point = store.entry_points()[c.entry_index];
    matches.push_back(m);
  }
  return matches;
}

NormalEquations texture_normal_equations(std::vector<Match>& matches,
                                         const Pose& camera_pose,
                                         const Intrinsics& k,
                                         const TextureParams& params,
                                         int iteration) {
  const auto& schedule = params.sigma_schedule;
  const double sigma =
      schedule[std::min<std::size_t>(iteration, schedule.size() - 1)];
  const double inv_sigma2 = 1.0 / (sigma * sigma);

  NormalEquations ne;
  for (auto& match : matches) {
    const Vec3 p_camera = camera_pose * match.model_point;
    if (p_camera.z() <= 0.0) {
      match.weight = 0.0;
      continue;
    }
    const Vec2 error = project(p_camera, k) - match.observed;
    match.residual = error.norm();
    match.weight = tukey_weight(match.residual, params.tukey_c);
    if (match.weight == 0.0) continue;

    const Eigen::Matrix<double, 2, 6> jacobian =
        projection_jacobian(p_camera, k) *
        variation_jacobian(match.model_point, camera_pose);
    const double w = match.weight * inv_sigma2;
    ne.add_scalar_residual(w, error.x(), jacobian.row(0).transpose());
    ne.add_scalar_residual(w, error.y(), jacobian.row(1).transpose());
  }
  return ne;
}

bool maybe_add_keyframe(const Pose& pose, const ImageU8& gray,
                        const ImageF& measured_depth, KeyframeStore& store,
                        const TextureParams& params,
                        const std::shared_ptr<const TriangleMesh>& mesh,
                        const FeatureExtractor& extractor, const Intrinsics& k,
                        const std::vector<FeatureObservation>* detections) {
  const Mat3 camera_to_model = pose.R.transpose();
  if (!store.orientation_is_new(camera_to_model, params.keyframe_angle_deg))
    return false;

  const RenderedFrame render = rasterize({{mesh, pose, 1, 0, {}}}, k);
  std::vector<FeatureObservation> fresh;
  if (!detections) {
    const Roi roi = roi_from_points(mesh->vertices, pose, k);
    fresh = extractor.detect_and_describe(gray, roi);
  }
  const auto& observations = detections ? *detections : fresh;

  Keyframe keyframe;
  keyframe.orientation = camera_to_model;
  const Pose inv = pose.inverse();
  for (const auto& obs : observations) {
    const int px = int(std::floor(obs.keypoint.pixel.x()));
    const int py = int(std::floor(obs.keypoint.pixel.y()));
    if (!render.body_id.contains(px, py) || render.body_id(px, py) == 0)
      continue;  // keypoint not on the silhouette
    const double rendered = double(render.depth(px, py));
    if (!measured_depth.empty()) {
      const double measured = double(measured_depth(px, py));
      // No measurement (dropout) is treated as unverifiable and kept.
      if (measured > 0.0 &&
          std::abs(rendered - measured) > params.occlusion_tolerance_m)
        continue;
    }
    KeyframeEntry entry;
    entry.descriptor = obs.descriptor;
    entry.model_point = inv * backproject(obs.keypoint.pixel, rendered, k);
    keyframe.entries.push_back(entry);
  }
  if (keyframe.entries.empty()) return false;
  store.add(std::move(keyframe));
  return true;
}

}  // namespace mmt

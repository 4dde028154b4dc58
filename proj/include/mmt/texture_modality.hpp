#pragma once

#include <memory>
#include <vector>

#include "mmt/feature.hpp"
#include "mmt/geometry.hpp"
#include "mmt/image.hpp"
#include "mmt/mesh.hpp"
#include "mmt/optimization.hpp"

// Keypoint-based texture modality: keyframe management, descriptor matching,
// 3D point reconstruction, and the Tukey-reweighted gradient/Hessian
// contribution.

namespace mmt {

struct TextureParams {
  std::vector<double> sigma_schedule = {10.0, 10.0, 3.0};  // pixels
  double tukey_c = 20.0;                                   // pixels
  double ratio_threshold = 0.7;
  double keyframe_angle_deg = 10.0;
  double occlusion_tolerance_m = 0.010;
  int max_keyframes = 50;
  FeatureParams features;
};

struct Match {
  Vec2 observed = Vec2::Zero();     // detected pixel in the current frame
  Vec3 model_point = Vec3::Zero();  // reconstructed keyframe point
  double weight = 0.0;              // 0 whenever residual >= tukey_c
  double residual = 0.0;            // pixels, at the last evaluation
};

struct KeyframeEntry {
  BinaryDescriptor descriptor;
  Vec3 model_point = Vec3::Zero();
};

struct Keyframe {
  Mat3 orientation = Mat3::Identity();  // rotation camera -> model at capture
  std::vector<KeyframeEntry> entries;   // non-empty
};

class KeyframeStore {
 public:
  explicit KeyframeStore(int max_keyframes = 50)
      : max_keyframes_(max_keyframes) {}

  bool empty() const { return keyframes_.empty(); }
  std::size_t size() const { return keyframes_.size(); }
  std::size_t entry_count() const { return entry_points_.size(); }

  // True when the orientation differs from every stored keyframe by more
  // than the threshold.
  bool orientation_is_new(const Mat3& camera_to_model,
                          double threshold_deg) const;

  // Evicts the oldest keyframe beyond the capacity.
  void add(Keyframe keyframe);

  const std::vector<Keyframe>& keyframes() const { return keyframes_; }

  // Flattened entries for batch matching.
  const std::vector<std::uint64_t>& packed_descriptors() const {
    return packed_;
  }
  const std::vector<Vec3>& entry_points() const { return entry_points_; }

 private:
  void repack();

  int max_keyframes_;
  std::vector<Keyframe> keyframes_;
  std::vector<std::uint64_t> packed_;  // 4 words per entry
  std::vector<Vec3> entry_points_;
};

// Tukey norm: c²/6 (1 - (1 - (x/c)²)³) for |x| <= c, else c²/6.
double tukey(double x, double c);

// IRLS weight: tukey(r)/r² on (0, c) so that w·r² equals the norm exactly,
// the analytic limit 0.5 below 1e-6, and 0 at or beyond the cutoff.
double tukey_weight(double r, double c);

// Ratio-test matching of query descriptors against all stored keyframes.
// Each keyframe entry is used at most once; the best query wins.
std::vector<Match> match_features(const std::vector<FeatureObservation>& query,
                                  const KeyframeStore& store,
                                  const TextureParams& params);

// Gradient/Hessian of the texture log-PDF at theta = 0. Updates each match's
// weight and residual for the given pose; sigma comes from the schedule.
NormalEquations texture_normal_equations(std::vector<Match>& matches,
                                         const Pose& camera_pose,
                                         const Intrinsics& k,
                                         const TextureParams& params,
                                         int iteration);

// Adds a keyframe when the orientation difference to every stored keyframe
// exceeds the threshold: detects features, keeps those on the rendered
// silhouette, reconstructs model points through the rendered depth, and
// drops points that fail the occlusion check against the measured depth.
// Returns true when a keyframe was added.
bool maybe_add_keyframe(
    const Pose& pose, const ImageU8& gray, const ImageF& measured_depth,
    KeyframeStore& store, const TextureParams& params,
    const std::shared_ptr<const TriangleMesh>& mesh,
    const FeatureExtractor& extractor, const Intrinsics& k,
    const std::vector<FeatureObservation>* detections = nullptr);

}  // namespace mmt

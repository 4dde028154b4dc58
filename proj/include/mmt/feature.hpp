#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/image.hpp"

namespace mmt {

struct Keypoint {
  Vec2 pixel = Vec2::Zero();  // full-image coordinates, sub-pixel
  double response = 0.0;      // Harris corner strength
  int octave = 0;             // pyramid level
  double angle = 0.0;         // orientation, radians
};

struct BinaryDescriptor {
  std::array<std::uint64_t, 4> words{};  // 256 bits

  bool operator==(const BinaryDescriptor&) const = default;
};

struct Roi {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool degenerate() const { return width() <= 1.0 || height() <= 1.0; }
};

struct FeatureParams {
  int max_features = 300;
  int pyramid_levels = 3;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  int crop_size = 200;  // detection region is warped to crop_size²
};

struct FeatureObservation {
  Keypoint keypoint;
  BinaryDescriptor descriptor;
};

// Descriptor plug-in interface: detection + description + distance. The
// built-in extractor is the only implementation shipped.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<FeatureObservation> detect_and_describe(
      const ImageU8& gray, const Roi& roi) const = 0;
  virtual std::uint32_t distance(const BinaryDescriptor& a,
                                 const BinaryDescriptor& b) const = 0;
};

// FAST segment-test corners over an image pyramid, ranked by Harris
// response, with intensity-centroid orientation and a rotation-steered
// 256-bit intensity-comparison descriptor.
class OrbLikeExtractor : public FeatureExtractor {
 public:
  explicit OrbLikeExtractor(FeatureParams params = {});

  std::vector<FeatureObservation> detect_and_describe(
      const ImageU8& gray, const Roi& roi) const override;
  std::uint32_t distance(const BinaryDescriptor& a,
                         const BinaryDescriptor& b) const override;

  const FeatureParams& params() const { return params_; }

 private:
  FeatureParams params_;
};

std::uint32_t hamming_distance(const BinaryDescriptor& a,
                               const BinaryDescriptor& b);

// Axis-aligned bounding box of the projected points, inflated by `inflate`
// (fraction of the box size) and clamped to the image.
Roi roi_from_points(const std::vector<Vec3>& points_model, const Pose& pose,
                    const Intrinsics& k, double inflate = 0.2);

}  // namespace mmt

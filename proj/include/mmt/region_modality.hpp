#pragma once

#include <array>
#include <vector>

#include "mmt/geometry.hpp"
#include "mmt/image.hpp"
#include "mmt/optimization.hpp"
#include "mmt/viewpoint_model.hpp"

// Sparse correspondence-line region modality with per-region color
// statistics; one instance per region for multi-region tracking.

namespace mmt {

class ColorHistogramPair {
 public:
  static constexpr int kBinsPerChannel = 32;
  static constexpr int kBinCount =
      kBinsPerChannel * kBinsPerChannel * kBinsPerChannel;

  ColorHistogramPair();

  static int bin_index(Rgb8 color);

  bool initialized() const { return initialized_; }

  // Blends normalized observations into the stored histograms with the given
  // learning rate (rate 1.0 on first use). Empty observations are ignored.
  void update(const std::vector<Rgb8>& foreground_samples,
              const std::vector<Rgb8>& background_samples, double learn_rate);

  // p(foreground | color) with additive smoothing of 1e-6 per bin.
  double posterior_foreground(Rgb8 color) const;

  const std::vector<double>& foreground() const { return foreground_; }
  const std::vector<double>& background() const { return background_; }

 private:
  std::vector<double> foreground_;  // sums to 1 once initialized
  std::vector<double> background_;
  bool initialized_ = false;
};

// 11 discrete positions per line, symmetric around the projected contour
// point (index 5 = offset 0).
constexpr int kLinePositions = 11;
constexpr int kLineHalf = kLinePositions / 2;

struct CorrespondenceLine {
  Vec2 center = Vec2::Zero();    // projected contour point
  Vec2 normal2d = Vec2::Zero();  // unit, outward
  double scale = 1.0;            // pixel stride per segment
  Vec3 model_point = Vec3::Zero();
  std::array<double, kLinePositions> posteriors{};    // fg posterior per segment
  std::array<double, kLinePositions> distribution{};  // contour location, sums to 1
  double mean_px = 0.0;     // fitted mean offset, pixels
  double sigma2_px = 1.0;   // fitted variance, pixels²
  bool informative = false;
};

struct RegionModalityConfig {
  int line_cap = 200;
  std::vector<int> scale_schedule = {5, 2, 2, 1, 1};  // px stride per segment
  double min_continuous_segments = 3.0;  // fg/bg distance gate, stride units
  double learn_rate = 0.2;
  double sigma_floor_px = 1.0;   // contour-location model floor
  double step_amplitude = 0.36;  // smoothed-step posterior mixing
  int min_lines = 6;             // fewer -> degraded information
};

// Normalized one-transition product model over the discrete contour
// locations: positions before the contour foreground, after it background,
// mixed with the smoothed-step amplitude.
std::array<double, kLinePositions> contour_location_distribution(
    const std::array<double, kLinePositions>& fg_posteriors,
    double step_amplitude);

// Samples pixels just inside (foreground) and outside (background) of the
// projected contour at +/-2 px and blends them into the histograms.
// Returns the number of sampled contour points (0 leaves the pair unchanged).
int update_histograms(const ImageRgb8& frame, const Pose& camera_pose,
                      const SparseViewpointModel& model, const Intrinsics& k,
                      ColorHistogramPair& histograms, double learn_rate);

// Builds correspondence lines for the view closest to the pose: projects
// valid contour points, samples color posteriors along the outward normal at
// the iteration's scale, and forms the one-transition contour-location
// distribution.
std::vector<CorrespondenceLine> build_correspondence_lines(
    const ImageRgb8& frame, const Pose& camera_pose,
    const SparseViewpointModel& model, const Intrinsics& k,
    const ColorHistogramPair& histograms, const RegionModalityConfig& config,
    int iteration);

// Gauss-Newton contribution of the per-line Gaussian fits.
NormalEquations region_normal_equations(
    const std::vector<CorrespondenceLine>& lines, const Pose& camera_pose,
    const Intrinsics& k, const RegionModalityConfig& config);

}  // namespace mmt

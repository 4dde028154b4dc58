#include "mmt/region_modality.hpp"

#include <algorithm>
#include <cmath>

namespace mmt {

ColorHistogramPair::ColorHistogramPair()
    : foreground_(kBinCount, 0.0), background_(kBinCount, 0.0) {}

int ColorHistogramPair::bin_index(Rgb8 color) {
  const int shift = 8 - 5;  // 32 bins per channel
  return ((color.r >> shift) * kBinsPerChannel + (color.g >> shift)) *
             kBinsPerChannel +
         (color.b >> shift);
}

void ColorHistogramPair::update(const std::vector<Rgb8>& fg_samples,
                                const std::vector<Rgb8>& bg_samples,
                                double learn_rate) {
  const double rate = initialized_ ? learn_rate : 1.0;
  if (rate <= 0.0) return;
  auto blend = [rate](std::vector<double>& hist,
                      const std::vector<Rgb8>& samples) {
    if (samples.empty()) return;
    std::vector<double> observed(kBinCount, 0.0);
    for (Rgb8 c : samples) observed[bin_index(c)] += 1.0;
    const double inv = 1.0 / double(samples.size());
    for (int i = 0; i < kBinCount; ++i)
      hist[i] = (1.0 - rate) * hist[i] + rate * observed[i] * inv;
  };
  if (fg_samples.empty() && bg_samples.empty()) return;
  blend(foreground_, fg_samples);
  blend(background_, bg_samples);
  initialized_ = true;
}

double ColorHistogramPair::posterior_foreground(Rgb8 color) const {
  const int bin = bin_index(color);
  const double f = foreground_[bin] + 1e-6;
  const double b = background_[bin] + 1e-6;
  return f / (f + b);
}

namespace {

inline Rgb8 sample_color(const ImageRgb8& frame, const Vec2& p, bool* ok) {
  const int x = int(std::floor(p.x()));
  const int y = int(std::floor(p.y()));
  if (!frame.contains(x, y)) {
    *ok = false;
    return {};
  }
  *ok = true;
  return frame(x, y);
}

// Projected line direction of a 3D in-plane contour normal.
inline bool project_normal(const Mat3& rotation, const Vec3& normal_model,
                           Vec2* normal2d) {
  const Vec3 n_camera = rotation * normal_model;
  const Vec2 n(n_camera.x(), n_camera.y());
  const double len = n.norm();
  if (len < 1e-6) return false;
  *normal2d = n / len;
  return true;
}

}  // namespace

std::array<double, kLinePositions> contour_location_distribution(
    const std::array<double, kLinePositions>& fg_posteriors,
    double step_amplitude) {
  const double hi = 0.5 + step_amplitude;
  const double lo = 0.5 - step_amplitude;
  std::array<double, kLinePositions> distribution{};
  double total = 0.0;
  for (int d = 0; d < kLinePositions; ++d) {
    double p = 1.0;
    for (int i = 0; i < kLinePositions; ++i) {
      const double h_f = i < d ? hi : (i > d ? lo : 0.5);
      p *= h_f * fg_posteriors[i] + (1.0 - h_f) * (1.0 - fg_posteriors[i]);
    }
    distribution[d] = p;
    total += p;
  }
  if (total > 0.0)
    for (double& p : distribution) p /= total;
  return distribution;
}

int update_histograms(const ImageRgb8& frame, const Pose& camera_pose,
                      const SparseViewpointModel& model, const Intrinsics& k,
                      ColorHistogramPair& histograms, double learn_rate) {
  const ViewpointView& view = closest_view(model, camera_pose);
  if (view.contour_points.empty()) return 0;

  constexpr double kOffsetPx = 2.0;
  std::vector<Rgb8> fg, bg;
  int used = 0;
  for (const auto& cp : view.contour_points) {
    const Vec3 p_camera = camera_pose * cp.point;
    if (p_camera.z() <= 0.0) continue;
    Vec2 normal2d;
    if (!project_normal(camera_pose.R, cp.normal, &normal2d)) continue;
    const Vec2 center = project(p_camera, k);
    const double footprint = p_camera.z() / k.fx;  // meters per pixel

    bool ok = false;
    if (cp.foreground_distance >= kOffsetPx * footprint) {
      const Rgb8 c = sample_color(frame, center - kOffsetPx * normal2d, &ok);
      if (ok) fg.push_back(c);
    }
    if (cp.background_distance >= kOffsetPx * footprint) {
      const Rgb8 c = sample_color(frame, center + kOffsetPx * normal2d, &ok);
      if (ok) bg.push_back(c);
    }
    ++used;
  }
  if (fg.empty() && bg.empty()) return 0;
  histograms.update(fg, bg, learn_rate);
  return used;
}

std::vector<CorrespondenceLine> build_correspondence_lines(
    const ImageRgb8& frame, const Pose& camera_pose,
    const SparseViewpointModel& model, const Intrinsics& k,
    const ColorHistogramPair& histograms, const RegionModalityConfig& config,
    int iteration) {
  const auto& schedule = config.scale_schedule;
  const double scale = double(
      schedule[std::min<std::size_t>(iteration, schedule.size() - 1)]);

  const ViewpointView& view = closest_view(model, camera_pose);
  std::vector<CorrespondenceLine> lines;
  lines.reserve(std::min<std::size_t>(view.contour_points.size(),
                                      config.line_cap));

  for (const auto& cp : view.contour_points) {
    if (int(lines.size()) >= config.line_cap) break;
    const Vec3 p_camera = camera_pose * cp.point;
    if (p_camera.z() <= 0.0) continue;

    CorrespondenceLine line;
    if (!project_normal(camera_pose.R, cp.normal, &line.normal2d)) continue;
    line.center = project(p_camera, k);
    line.scale = scale;
    line.model_point = cp.point;

    // One-transition validity gate: both free distances must span the
    // configured number of segment strides at the current depth.
    const double footprint = p_camera.z() / k.fx;
    const double min_distance =
        config.min_continuous_segments * scale * footprint;
    if (cp.foreground_distance < min_distance ||
        cp.background_distance < min_distance)
      continue;

    for (int i = 0; i < kLinePositions; ++i) {
      const double offset = double(i - kLineHalf) * scale;
      bool ok = false;
      const Rgb8 color =
          sample_color(frame, line.center + offset * line.normal2d, &ok);
      line.posteriors[i] = ok ? histograms.posterior_foreground(color) : 0.5;
    }

    line.distribution =
        contour_location_distribution(line.posteriors, config.step_amplitude);
    double max_p = 0.0, min_p = 1.0;
    for (double p : line.distribution) {
      max_p = std::max(max_p, p);
      min_p = std::min(min_p, p);
    }
    line.informative = (max_p - min_p) > 1e-9;

    double mean = 0.0;
    for (int d = 0; d < kLinePositions; ++d)
      mean += double(d - kLineHalf) * line.distribution[d];
    double variance = 0.0;
    for (int d = 0; d < kLinePositions; ++d) {
      const double delta = double(d - kLineHalf) - mean;
      variance += delta * delta * line.distribution[d];
    }
    line.mean_px = mean * scale;
    line.sigma2_px = std::max(variance * scale * scale,
                              config.sigma_floor_px * config.sigma_floor_px);
    lines.push_back(line);
  }
  return lines;
}

NormalEquations region_normal_equations(
    const std::vector<CorrespondenceLine>& lines, const Pose& camera_pose,
    const Intrinsics& k, const RegionModalityConfig& /*config*/) {
  NormalEquations ne;
  for (const auto& line : lines) {
    if (!line.informative) continue;  // uniform distribution: no contribution
    const Vec3 p_camera = camera_pose * line.model_point;
    if (p_camera.z() <= 0.0) continue;
    const Vec2 projected = project(p_camera, k);
    const double residual =
        line.normal2d.dot(projected - line.center) - line.mean_px;
    const Vec6 jacobian =
        (line.normal2d.transpose() * projection_jacobian(p_camera, k) *
         variation_jacobian(line.model_point, camera_pose))
            .transpose();
    ne.add_scalar_residual(1.0 / line.sigma2_px, residual, jacobian);
  }
  return ne;
}

}  // namespace mmt

#include "mmt/feature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmt/kernels/kernels.hpp"

namespace mmt {

namespace {

// Bresenham circle of radius 3, clockwise from the top.
constexpr int kCircleX[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
constexpr int kCircleY[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};

constexpr int kPatchRadius = 15;   // orientation patch
constexpr int kPairRadius = 13;    // descriptor pair offsets (disk)
constexpr int kDetectMargin = 21;  // covers rotated pairs + box smoothing

inline int fast_round(double v) { return int(v + (v >= 0.0 ? 0.5 : -0.5)); }

struct PairPattern {
  std::array<Eigen::Vector2d, 256> a;
  std::array<Eigen::Vector2d, 256> b;
};

// Fixed comparison pattern, generated once from a fixed seed.
const PairPattern& pair_pattern() {
  static const PairPattern pattern = [] {
    PairPattern p;
    std::mt19937 rng(0x51f0a3c9);
    std::normal_distribution<double> gauss(0.0, double(kPairRadius) / 2.0);
    auto draw = [&] {
      while (true) {
        const double x = gauss(rng), y = gauss(rng);
        if (x * x + y * y <= double(kPairRadius * kPairRadius))
          return Eigen::Vector2d(x, y);
      }
    };
    for (int i = 0; i < 256; ++i) {
      p.a[i] = draw();
      p.b[i] = draw();
    }
    return p;
  }();
  return pattern;
}

// Summed-area table; sum(x0..x1, y0..y1) inclusive.
class Integral {
 public:
  explicit Integral(const ImageU8& img)
      : width_(img.width()), height_(img.height()),
        table_((width_ + 1) * (height_ + 1), 0) {
    for (int y = 0; y < height_; ++y) {
      std::uint64_t row = 0;
      for (int x = 0; x < width_; ++x) {
        row += img(x, y);
        table_[(y + 1) * (width_ + 1) + (x + 1)] =
            table_[y * (width_ + 1) + (x + 1)] + row;
      }
    }
  }

  std::uint64_t sum(int x0, int y0, int x1, int y1) const {
    return table_[(y1 + 1) * (width_ + 1) + (x1 + 1)] -
           table_[(y0) * (width_ + 1) + (x1 + 1)] -
           table_[(y1 + 1) * (width_ + 1) + (x0)] +
           table_[(y0) * (width_ + 1) + (x0)];
  }

  // 5x5 box mean around (x, y); caller keeps coordinates in bounds.
  double box5(int x, int y) const {
    return double(sum(x - 2, y - 2, x + 2, y + 2)) / 25.0;
  }

 private:
  int width_, height_;
  std::vector<std::uint64_t> table_;
};

ImageU8 resize_bilinear(const ImageU8& src, int w, int h) {
  ImageU8 dst(w, h);
  const double sx = double(src.width()) / w;
  const double sy = double(src.height()) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 double(src.height() - 1));
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   double(src.width() - 1));
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double v = (1 - wy) * ((1 - wx) * src(x0, y0) + wx * src(x1, y0)) +
                       wy * ((1 - wx) * src(x0, y1) + wx * src(x1, y1));
      dst(x, y) = std::uint8_t(fast_round(v));
    }
  }
  return dst;
}

// True when the 16-bit circular mask contains a run of >= 9 set bits.
inline bool has_arc9(unsigned mask) {
  unsigned run = mask | (mask << 16);
  for (int k = 1; k < 9; ++k) run &= run >> 1;
  return (run & 0xffff) != 0;
}

// FAST-9/16 segment test; the returned non-maximum-suppression score is the
// sum of absolute circle differences beyond the threshold (final keypoint
// ranking uses the Harris response, not this score).
int fast_score(const ImageU8& img, int x, int y, int t) {
  const int c = img(x, y);
  // Any 9-arc covers two adjacent cardinal circle pixels.
  unsigned cb = 0, cd = 0;
  for (int i = 0; i < 4; ++i) {
    const int d = int(img(x + kCircleX[4 * i], y + kCircleY[4 * i])) - c;
    cb |= unsigned(d > t) << i;
    cd |= unsigned(d < -t) << i;
  }
  const auto adjacent = [](unsigned m) { return (m & ((m >> 1) | (m << 3)) & 0xf) != 0; };
  if (!adjacent(cb) && !adjacent(cd)) return 0;

  unsigned bright_mask = 0, dark_mask = 0;
  int sad = 0;
  for (int i = 0; i < 16; ++i) {
    const int d = int(img(x + kCircleX[i], y + kCircleY[i])) - c;
    bright_mask |= unsigned(d > t) << i;
    dark_mask |= unsigned(d < -t) << i;
    const int a = d >= 0 ? d : -d;
    if (a > t) sad += a - t;
  }
  if (!has_arc9(bright_mask) && !has_arc9(dark_mask)) return 0;
  return sad > 0 ? sad : 1;
}

double harris_response(const ImageU8& img, int x, int y) {
  double a = 0.0, b = 0.0, c = 0.0;
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const int px = x + dx, py = y + dy;
      const double ix = (double(img(px + 1, py)) - img(px - 1, py)) / 2.0;
      const double iy = (double(img(px, py + 1)) - img(px, py - 1)) / 2.0;
      a += ix * ix;
      b += ix * iy;
      c += iy * iy;
    }
  }
  return (a * c - b * b) - 0.04 * (a + c) * (a + c);
}

double intensity_centroid_angle(const ImageU8& img, int x, int y) {
  static const auto extents = [] {
    std::array<int, kPatchRadius + 1> e{};
    for (int dy = 0; dy <= kPatchRadius; ++dy)
      e[dy] = int(std::sqrt(double(kPatchRadius * kPatchRadius - dy * dy)));
    return e;
  }();
  double m10 = 0.0, m01 = 0.0;
  for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
    const int ext = extents[dy < 0 ? -dy : dy];
    double row_sum = 0.0, row_moment = 0.0;
    const std::uint8_t* row = &img(x - ext, y + dy);
    for (int dx = -ext; dx <= ext; ++dx) {
      const double v = row[dx + ext];
      row_sum += v;
      row_moment += dx * v;
    }
    m10 += row_moment;
    m01 += dy * row_sum;
  }
  if (m10 == 0.0 && m01 == 0.0) return 0.0;
  return std::atan2(m01, m10);
}

BinaryDescriptor describe(const Integral& integral, int x, int y,
                          double angle) {
  const auto& pattern = pair_pattern();
  const double ca = std::cos(angle), sa = std::sin(angle);
  auto sample = [&](const Eigen::Vector2d& offset) {
    const int sx = x + fast_round(ca * offset.x() - sa * offset.y());
    const int sy = y + fast_round(sa * offset.x() + ca * offset.y());
    return integral.box5(sx, sy);
  };
  BinaryDescriptor d;
  for (int i = 0; i < 256; ++i) {
    if (sample(pattern.a[i]) < sample(pattern.b[i]))
      d.words[i / 64] |= (std::uint64_t(1) << (i % 64));
  }
  return d;
}

}  // namespace

OrbLikeExtractor::OrbLikeExtractor(FeatureParams params) : params_(params) {}

std::uint32_t hamming_distance(const BinaryDescriptor& a,
                               const BinaryDescriptor& b) {
  std::uint32_t out;
  kernels::hamming256_batch(a.words.data(), b.words.data(), 1, &out);
  return out;
}

std::uint32_t OrbLikeExtractor::distance(const BinaryDescriptor& a,
                                         const BinaryDescriptor& b) const {
  return hamming_distance(a, b);
}

std::vector<FeatureObservation> OrbLikeExtractor::detect_and_describe(
    const ImageU8& gray, const Roi& roi_in) const {
  std::vector<FeatureObservation> out;
  Roi roi = roi_in;
  roi.x0 = std::clamp(roi.x0, 0.0, double(gray.width()));
  roi.x1 = std::clamp(roi.x1, 0.0, double(gray.width()));
  roi.y0 = std::clamp(roi.y0, 0.0, double(gray.height()));
  roi.y1 = std::clamp(roi.y1, 0.0, double(gray.height()));
  if (roi.degenerate() || gray.empty()) return out;

  // Warp the region of interest to the fixed detection size.
  const int cs = params_.crop_size;
  ImageU8 crop(cs, cs);
  const double sx = roi.width() / cs, sy = roi.height() / cs;
  for (int y = 0; y < cs; ++y) {
    const double fy = std::clamp(roi.y0 + (y + 0.5) * sy - 0.5, 0.0,
                                 double(gray.height() - 1));
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, gray.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < cs; ++x) {
      const double fx = std::clamp(roi.x0 + (x + 0.5) * sx - 0.5, 0.0,
                                   double(gray.width() - 1));
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, gray.width() - 1);
      const double wx = fx - x0;
      const double v =
          (1 - wy) * ((1 - wx) * gray(x0, y0) + wx * gray(x1, y0)) +
          wy * ((1 - wx) * gray(x0, y1) + wx * gray(x1, y1));
      crop(x, y) = std::uint8_t(fast_round(v));
    }
  }

  struct LevelKeypoint {
    int x, y, level;
    int fast;
    double response;
  };
  std::vector<LevelKeypoint> raw;
  std::vector<ImageU8> levels;
  std::vector<double> level_scale;  // level -> crop coordinates

  ImageU8 current = std::move(crop);
  double scale = 1.0;
  for (int level = 0; level < params_.pyramid_levels; ++level) {
    if (level > 0) {
      const int w = std::max(kDetectMargin * 2 + 1,
                             int(std::lround(cs / std::pow(params_.scale_factor,
                                                           level))));
      current = resize_bilinear(levels[0], w, w);
      scale = double(cs) / w;
    }
    levels.push_back(current);
    level_scale.push_back(scale);

    const ImageU8& img = levels.back();
    ImageF scores(img.width(), img.height(), 0.0f);
    for (int y = kDetectMargin; y < img.height() - kDetectMargin; ++y)
      for (int x = kDetectMargin; x < img.width() - kDetectMargin; ++x)
        scores(x, y) = float(fast_score(img, x, y, params_.fast_threshold));

    // 3x3 non-maximum suppression; row-major-first wins ties.
    for (int y = kDetectMargin; y < img.height() - kDetectMargin; ++y) {
      for (int x = kDetectMargin; x < img.width() - kDetectMargin; ++x) {
        const float s = scores(x, y);
        if (s <= 0.0f) continue;
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const float n = scores(x + dx, y + dy);
            if (n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0)))) {
              is_max = false;
              break;
            }
          }
        }
        if (is_max)
          raw.push_back({x, y, level, int(s), harris_response(img, x, y)});
      }
    }
  }

  std::sort(raw.begin(), raw.end(), [](const LevelKeypoint& a,
                                       const LevelKeypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.level != b.level) return a.level < b.level;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  if (int(raw.size()) > params_.max_features) raw.resize(params_.max_features);

  std::vector<Integral> integrals;
  integrals.reserve(levels.size());
  for (const auto& img : levels) integrals.emplace_back(img);

  out.reserve(raw.size());
  for (const auto& kp : raw) {
    const double angle =
        intensity_centroid_angle(levels[kp.level], kp.x, kp.y);
    FeatureObservation obs;
    obs.descriptor = describe(integrals[kp.level], kp.x, kp.y, angle);
    // level -> crop -> full-image coordinates (pixel centers at x + 0.5)
    obs.keypoint.pixel = {roi.x0 + (kp.x + 0.5) * level_scale[kp.level] * sx,
                          roi.y0 + (kp.y + 0.5) * level_scale[kp.level] * sy};
    obs.keypoint.response = kp.response;
    obs.keypoint.octave = kp.level;
    obs.keypoint.angle = angle;
    out.push_back(obs);
  }
  return out;
}

Roi roi_from_points(const std::vector<Vec3>& points_model, const Pose& pose,
                    const Intrinsics& k, double inflate) {
  Roi roi{1e30, 1e30, -1e30, -1e30};
  bool any = false;
  const std::size_t stride = std::max<std::size_t>(1, points_model.size() / 512);
  for (std::size_t i = 0; i < points_model.size(); i += stride) {
    const Vec3 p = pose * points_model[i];
    if (p.z() <= 0.0) continue;
    const Vec2 px = project(p, k);
    roi.x0 = std::min(roi.x0, px.x());
    roi.x1 = std::max(roi.x1, px.x());
    roi.y0 = std::min(roi.y0, px.y());
    roi.y1 = std::max(roi.y1, px.y());
    any = true;
  }
  if (!any) return Roi{};
  const double ix = roi.width() * inflate / 2.0;
  const double iy = roi.height() * inflate / 2.0;
  roi.x0 = std::clamp(roi.x0 - ix, 0.0, double(k.width));
  roi.x1 = std::clamp(roi.x1 + ix, 0.0, double(k.width));
  roi.y0 = std::clamp(roi.y0 - iy, 0.0, double(k.height));
  roi.y1 = std::clamp(roi.y1 + iy, 0.0, double(k.height));
  return roi;
}

}  // namespace mmt

#pragma once

#include <cstdint>
#include <vector>

namespace mmt {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb8&) const = default;
};

template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[std::size_t(y) * width_ + x]; }
  const T& operator()(int x, int y) const {
    return data_[std::size_t(y) * width_ + x];
  }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T at_or(int x, int y, T fallback) const {
    return contains(x, y) ? (*this)(x, y) : fallback;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;
using ImageRgb8 = Image<Rgb8>;
using ImageF = Image<float>;

// Rec. 601 luma.
inline std::uint8_t luma(Rgb8 c) {
  return static_cast<std::uint8_t>(
      (299 * int(c.r) + 587 * int(c.g) + 114 * int(c.b)) / 1000);
}

inline ImageU8 to_gray(const ImageRgb8& rgb) {
  ImageU8 gray(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.data().size(); ++i)
    gray.data()[i] = luma(rgb.data()[i]);
  return gray;
}

}  // namespace mmt

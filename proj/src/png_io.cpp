#include "mmt/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

namespace mmt {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& what) {
  throw std::runtime_error("png: " + what + ": " + path.string());
}

void write_png_impl(const std::filesystem::path& path, int width, int height,
                    int color_type, int bit_depth,
                    const std::vector<png_bytep>& rows) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) fail(path, "cannot open for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "write error");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // in-memory data is little-endian
  png_write_image(png, const_cast<png_bytep*>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

}  // namespace

void write_png(const std::filesystem::path& path, const ImageRgb8& image) {
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<Rgb8*>(&image(0, y)));
  write_png_impl(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8,
                 rows);
}

void write_png(const std::filesystem::path& path, const ImageU16& image) {
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(&image(0, y)));
  write_png_impl(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 16,
                 rows);
}

ImageRgb8 read_png_rgb8(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) fail(path, "cannot open for reading");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png) fail(path, "png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(path, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) fail(path, "read error");

  png_init_io(r.png, file.get());
  png_read_info(r.png, r.info);

  png_set_expand(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  const int width = int(png_get_image_width(r.png, r.info));
  const int height = int(png_get_image_height(r.png, r.info));
  if (png_get_rowbytes(r.png, r.info) != std::size_t(width) * 3)
    fail(path, "unexpected row size for RGB8");

  ImageRgb8 image(width, height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(&image(0, y));
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return image;
}

ImageU16 read_png_u16(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) fail(path, "cannot open for reading");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png) fail(path, "png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) fail(path, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) fail(path, "read error");

  png_init_io(r.png, file.get());
  png_read_info(r.png, r.info);

  if (png_get_color_type(r.png, r.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(r.png, r.info) != 16)
    fail(path, "expected 16-bit grayscale");
  png_set_swap(r.png);
  png_read_update_info(r.png, r.info);

  const int width = int(png_get_image_width(r.png, r.info));
  const int height = int(png_get_image_height(r.png, r.info));
  ImageU16 image(width, height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(&image(0, y));
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return image;
}

ImageU16 encode_depth(const ImageF& depth_m, double units_per_meter) {
  ImageU16 out(depth_m.width(), depth_m.height());
  for (std::size_t i = 0; i < depth_m.data().size(); ++i) {
    const double units = std::round(double(depth_m.data()[i]) * units_per_meter);
    out.data()[i] = static_cast<std::uint16_t>(
        std::min(std::max(units, 0.0), 65535.0));
  }
  return out;
}

ImageF decode_depth(const ImageU16& depth_units, double units_per_meter) {
  ImageF out(depth_units.width(), depth_units.height());
  for (std::size_t i = 0; i < depth_units.data().size(); ++i)
    out.data()[i] = float(double(depth_units.data()[i]) / units_per_meter);
  return out;
}

}  // namespace mmt

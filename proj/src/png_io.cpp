#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "scancad/error.hpp"
#include "scancad/io.hpp"

namespace scancad {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_raw(const fs::path& path, int width, int height, int bit_depth, const std::uint8_t* rows,
                   std::size_t row_bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::kIoError, "cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw Error(ErrorCode::kIoError, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw Error(ErrorCode::kIoError, "libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // host little-endian -> PNG big-endian
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(y) * row_bytes));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  fs::rename(tmp, path);
}

}  // namespace

Image16 read_png16(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingAsset, path.string());
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::kMissingAsset, path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kDepthDecodeError, path.string() + " is not a PNG");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDepthDecodeError, "libpng init failed");
  }
  Image16 out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDepthDecodeError, "corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDepthDecodeError, path.string() + " is not 16-bit grayscale");
  }
  png_set_swap(png);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    png_read_row(png, reinterpret_cast<png_bytep>(out.pixels.data() + static_cast<std::size_t>(y) * out.width),
                 nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png16(const fs::path& path, const Image16& image) {
  write_png_raw(path, image.width, image.height, 16, reinterpret_cast<const std::uint8_t*>(image.pixels.data()),
                static_cast<std::size_t>(image.width) * 2);
}

void write_png8(const fs::path& path, const Image8& image) {
  write_png_raw(path, image.width, image.height, 8, image.pixels.data(), static_cast<std::size_t>(image.width));
}

Image16 quantize_depth(const DepthMap& depth, double meters_per_unit) {
  Image16 out{depth.width, depth.height, std::vector<std::uint16_t>(depth.values.size(), 0)};
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const double z = depth.values[i];
    if (!DepthMap::is_valid(z)) continue;
    out.pixels[i] = static_cast<std::uint16_t>(std::clamp(std::lround(z / meters_per_unit), 1L, 65535L));
  }
  return out;
}

DepthMap dequantize_depth(const Image16& image, double meters_per_unit) {
  DepthMap out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.values[i] = image.pixels[i] * meters_per_unit;
  return out;
}

void write_depth_png(const fs::path& path, const DepthMap& depth, double meters_per_unit) {
  write_png16(path, quantize_depth(depth, meters_per_unit));
}

DepthMap read_depth_png(const fs::path& path, double meters_per_unit) {
  return dequantize_depth(read_png16(path), meters_per_unit);
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  Image16 img{mask.width, mask.height, std::vector<std::uint16_t>(mask.values.size(), 0)};
  for (std::size_t i = 0; i < mask.values.size(); ++i) img.pixels[i] = mask.values[i] ? 65535 : 0;
  write_png16(path, img);
}

}  // namespace scancad

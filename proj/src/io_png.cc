#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "io_internal.h"
#include "json.hpp"
#include "worldguide/io.h"

namespace worldguide::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded samples, 1-4 channels, 8 or 16 bit, widened to uint16.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

RawPng DecodePng(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0) {
    internal::FormatFail(path, 0, "missing PNG signature");
  }

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kIoError, "libpng initialisation failed");
  }
  RawPng raw;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    internal::FormatFail(path, 8, "corrupt PNG stream");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // host (little-endian) order
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = &buffer[y * row_bytes];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = std::size_t(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  if (raw.bit_depth == 16) {
    std::memcpy(raw.samples.data(), buffer.data(), count * 2);
  } else {
    for (std::size_t i = 0; i < count; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

void EncodePng(const fs::path& path, int width, int height, int color_type,
               int bit_depth, const std::vector<png_byte>& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) Fail(ErrorCode::kIoError, "cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorCode::kIoError, "libpng initialisation failed");
  }
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t row_bytes = std::size_t(width) * channels * bit_depth / 8;
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(&data[y * row_bytes]);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorCode::kIoError, "PNG encoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

fs::path SidecarPath(const fs::path& png_path) {
  fs::path sidecar = png_path;
  sidecar.replace_extension(".json");
  return sidecar;
}

}  // namespace

Image ReadPng(const fs::path& path) {
  const RawPng raw = DecodePng(path);
  const float max_value = raw.bit_depth == 16 ? 65535.f : 255.f;
  Image image(raw.width, raw.height);
  const bool gray = raw.channels <= 2;
  for (std::size_t p = 0; p < image.PixelCount(); ++p) {
    const std::uint16_t* s = &raw.samples[p * raw.channels];
    for (int c = 0; c < 3; ++c) {
      image.rgb[3 * p + c] = float(gray ? s[0] : s[c]) / max_value;
    }
  }
  return image;
}

void WritePng(const fs::path& path, const Image& image) {
  std::vector<png_byte> data(image.rgb.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float v = std::clamp(image.rgb[i], 0.f, 1.f);
    data[i] = static_cast<png_byte>(std::lround(v * 255.f));
  }
  EncodePng(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, data);
}

std::vector<std::uint8_t> ReadMaskPng(const fs::path& path, int* width,
                                      int* height) {
  const RawPng raw = DecodePng(path);
  std::vector<std::uint8_t> mask(std::size_t(raw.width) * raw.height);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    mask[p] = raw.samples[p * raw.channels] != 0;
  }
  if (width) *width = raw.width;
  if (height) *height = raw.height;
  return mask;
}

void WriteMaskPng(const fs::path& path, int width, int height,
                  std::span<const std::uint8_t> mask) {
  if (mask.size() != std::size_t(width) * height) {
    Fail(ErrorCode::kDimensionMismatch, "mask does not match size");
  }
  std::vector<png_byte> data(mask.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask[i] ? 255 : 0;
  EncodePng(path, width, height, PNG_COLOR_TYPE_GRAY, 8, data);
}

DepthMap ReadDepthPng16(const fs::path& path) {
  const RawPng raw = DecodePng(path);
  if (raw.bit_depth != 16 || raw.channels != 1) {
    internal::FormatFail(path, 0, "depth PNG must be 16-bit single channel");
  }
  const fs::path sidecar = SidecarPath(path);
  if (!fs::exists(sidecar)) {
    Fail(ErrorCode::kIoError,
         "16-bit depth PNG needs a scale sidecar at " + sidecar.string());
  }
  const auto bytes = internal::ReadFileBytes(sidecar);
  double scale = 0.0;
  try {
    scale = nlohmann::json::parse(bytes).at("scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormatError, sidecar.string() + ": " + e.what());
  }
  if (!(scale > 0.0)) {
    Fail(ErrorCode::kFormatError, sidecar.string() + ": scale must be > 0");
  }
  DepthMap depth(raw.width, raw.height);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (raw.samples[i] == 0) continue;
    depth.values[i] = raw.samples[i] * scale;
    depth.valid[i] = 1;
  }
  return depth;
}

void WriteDepthPng16(const fs::path& path, const DepthMap& depth,
                     double scale) {
  if (!(scale > 0.0)) Fail(ErrorCode::kInvalidArgument, "scale must be > 0");
  std::vector<png_byte> data(depth.values.size() * 2);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    long units = depth.valid[i] ? std::lround(depth.values[i] / scale) : 0;
    units = std::clamp(units, 0L, 65535L);
    const std::uint16_t u16 = static_cast<std::uint16_t>(units);
    std::memcpy(&data[2 * i], &u16, 2);
  }
  EncodePng(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, data);
  const std::string sidecar = nlohmann::json{{"scale", scale}}.dump();
  internal::WriteFileBytes(SidecarPath(path),
                           {sidecar.begin(), sidecar.end()});
}

DepthMap ReadDepth(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".pfm") return ReadPfm(path);
  if (ext == ".png") return ReadDepthPng16(path);
  Fail(ErrorCode::kFormatError,
       "unsupported depth format " + path.string() + " (expected .pfm/.png)");
}

}  // namespace worldguide::io

#include "splatsim/common/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace splatsim::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

struct PngReadResult {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // raw rows, big-endian for 16-bit
};

PngReadResult read_png_raw(const std::filesystem::path& path, bool want16) {
  auto f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  PngReadResult out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("malformed PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (!want16 && depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_raw(const std::filesystem::path& path, int w, int h, int channels, int bit_depth,
                   const std::uint8_t* bytes) {
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG: " + path.string());
  }
  png_init_io(png, f.get());
  const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, w, h, bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = static_cast<std::size_t>(w) * channels * (bit_depth / 8);
  for (int y = 0; y < h; ++y) png_write_row(png, const_cast<std::uint8_t*>(bytes + rowbytes * y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image8 read_png8(const std::filesystem::path& path) {
  auto raw = read_png_raw(path, false);
  Image8 img(raw.width, raw.height, raw.channels);
  img.data = std::move(raw.bytes);
  return img;
}

void write_png8(const std::filesystem::path& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3) throw InvalidParameter("PNG needs 1 or 3 channels");
  write_png_raw(path, img.width, img.height, img.channels, 8, img.data.data());
}

Image<std::uint16_t> read_png16(const std::filesystem::path& path) {
  auto raw = read_png_raw(path, true);
  if (raw.channels != 1) throw IoError("expected single-channel PNG: " + path.string());
  Image<std::uint16_t> img(raw.width, raw.height, 1);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = static_cast<std::uint16_t>(raw.bytes[2 * i] << 8 | raw.bytes[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = raw.bytes[i];
  }
  return img;
}

void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& img) {
  if (img.channels != 1) throw InvalidParameter("16-bit PNG writer is single-channel");
  std::vector<std::uint8_t> bytes(img.data.size() * 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 0xff);
  }
  write_png_raw(path, img.width, img.height, 1, 16, bytes.data());
}

ImageF read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  in >> magic >> w >> h >> scale;
  in.get();
  if ((magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0)
    throw IoError("malformed PFM header: " + path.string());
  const int c = magic == "PF" ? 3 : 1;
  ImageF img(w, h, c);
  std::vector<float> row(static_cast<std::size_t>(w) * c);
  const bool little = scale < 0;
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw IoError("truncated PFM: " + path.string());
    if (!little) {
      for (auto& v : row) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&v, &u, 4);
      }
    }
    std::copy(row.begin(), row.end(), img.data.begin() + static_cast<std::ptrdiff_t>(y) * w * c);
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const ImageF& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1\n";
  const std::size_t rowlen = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = img.height - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(img.data.data() + rowlen * y),
              static_cast<std::streamsize>(rowlen * 4));
}

ImageD read_depth(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") {
    auto f = read_pfm(path);
    if (f.channels != 1) throw IoError("depth PFM must be single channel: " + path.string());
    ImageD d(f.width, f.height, 1);
    for (std::size_t i = 0; i < d.data.size(); ++i)
      d.data[i] = std::isfinite(f.data[i]) && f.data[i] > 0 ? f.data[i] : 0.0;
    return d;
  }
  if (ext == ".png") {
    auto p = read_png16(path);
    ImageD d(p.width, p.height, 1);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = p.data[i] * 1e-3;
    return d;
  }
  throw IoError("unsupported depth format: " + path.string());
}

void write_depth(const std::filesystem::path& path, const ImageD& depth) {
  if (path.extension() == ".pfm") {
    ImageF f(depth.width, depth.height, 1);
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<float>(depth.data[i]);
    write_pfm(path, f);
    return;
  }
  Image<std::uint16_t> p(depth.width, depth.height, 1);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double mm = std::round(depth.data[i] * 1e3);
    p.data[i] = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
  }
  write_png16(path, p);
}

Image8 to_rgb8(const ImageD& img) {
  Image8 out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  return out;
}

ImageD from_rgb8(const Image8& img) {
  ImageD out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.0;
  return out;
}

}  // namespace splatsim::io

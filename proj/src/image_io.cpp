#include <posekit/image_io.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace posekit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr openFile(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

void writePng(const std::filesystem::path& path, int width, int height, int color_type,
              int bit_depth, const std::vector<png_bytep>& rows) {
  FilePtr f = openFile(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows hold host little-endian samples
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void writePngRgb(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> bytes(image.pixelCount() * 3);
  for (size_t i = 0; i < image.pixelCount(); ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = image.channels >= 3 ? image.data[i * image.channels + c]
                                          : image.data[i * image.channels];
      bytes[i * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = &bytes[static_cast<size_t>(y) * image.width * 3];
  writePng(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

void writePngGray16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
  std::vector<std::uint16_t> samples(image.data);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(&samples[static_cast<size_t>(y) * image.width]);
  writePng(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 16, rows);
}

Image<std::uint16_t> readPng(const std::filesystem::path& path, int* bit_depth) {
  FilePtr f = openFile(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw Error("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("corrupt PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  if (bit_depth) *bit_depth = out_depth;
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buffer(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = &buffer[rowbytes * y];
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image<std::uint16_t> out(width, height, channels);
  for (int y = 0; y < height; ++y)
    for (int i = 0; i < width * channels; ++i) {
      if (out_depth == 16) {
        std::uint16_t s;
        std::memcpy(&s, rows[y] + 2 * i, 2);
        out.data[static_cast<size_t>(y) * width * channels + i] = s;
      } else {
        out.data[static_cast<size_t>(y) * width * channels + i] = rows[y][i];
      }
    }
  return out;
}

}  // namespace posekit

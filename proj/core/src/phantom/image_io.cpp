#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>

#include "nestanet/phantom.hpp"

namespace nestanet {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

void check_square(std::uint32_t width, std::uint32_t height, const std::filesystem::path& path) {
  if (width != height) throw InvalidArgument("image is not square: " + path.string());
  if (!is_power_of_two(width)) throw InvalidArgument("image side is not a power of two: " + path.string());
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  unsigned char sig[8] = {};
  is.read(reinterpret_cast<char*>(sig), 8);
  return is.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

ImageGrid read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  // Everything needing cleanup after a longjmp is owned outside this frame.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng: failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InvalidArgument("PNG is not grayscale: " + path.string());
  }
  if (width != height || !is_power_of_two(width)) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_square(width, height, path);
  }
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * height);
  rows.resize(height);
  for (std::uint32_t r = 0; r < height; ++r) rows[r] = raw.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int side = static_cast<int>(width);
  auto img = ImageGrid::zeros(side);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (int i = 0; i < side; ++i) {
    const std::uint8_t* row = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < side; ++j) {
      const double v = depth == 16 ? static_cast<double>((row[2 * j] << 8) | row[2 * j + 1]) : row[j];
      img.at(i, j) = Complex(v / maxval, 0.0);
    }
  }
  return img;
}

// PGM header tokens, skipping '#' comments.
long read_pgm_token(std::istream& is) {
  is >> std::ws;
  while (is.peek() == '#') {
    std::string line;
    std::getline(is, line);
    is >> std::ws;
  }
  long v = -1;
  is >> v;
  if (!is) throw IoError("malformed PGM header");
  return v;
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") throw IoError("not a PNG or PGM file: " + path.string());
  const long width = read_pgm_token(is);
  const long height = read_pgm_token(is);
  const long maxval = read_pgm_token(is);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) throw IoError("invalid PGM header: " + path.string());
  check_square(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), path);
  const int side = static_cast<int>(width);
  auto img = ImageGrid::zeros(side);
  const double scale = static_cast<double>(maxval);
  if (magic == "P2") {
    for (int k = 0; k < side * side; ++k) {
      long v = -1;
      is >> v;
      if (!is || v < 0) throw IoError("truncated PGM data: " + path.string());
      img.data()[k] = Complex(static_cast<double>(v) / scale, 0.0);
    }
    return img;
  }
  is.get();  // single whitespace after maxval
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(side) * side * bytes);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError("truncated PGM data: " + path.string());
  for (int k = 0; k < side * side; ++k) {
    const double v = bytes == 2 ? static_cast<double>((buf[2 * k] << 8) | buf[2 * k + 1]) : buf[k];
    img.data()[k] = Complex(v / scale, 0.0);
  }
  return img;
}

}  // namespace

ImageGrid load_grayscale(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image file not found: " + path.string());
  return has_png_signature(path) ? read_png(path) : read_pgm(path);
}

void write_png16(const std::filesystem::path& path, int side, const Eigen::VectorXd& values, double scale) {
  const auto count = checked_pixel_count(side);
  if (values.size() != count) throw DimensionMismatch("write_png16: value count does not match side");
  if (!(scale > 0.0)) throw InvalidArgument("write_png16: scale must be > 0");

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(count) * 2);
  for (Eigen::Index k = 0; k < count; ++k) {
    const double v = std::clamp(values[k] / scale, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    raw[static_cast<std::size_t>(2 * k)] = static_cast<std::uint8_t>(q >> 8);
    raw[static_cast<std::size_t>(2 * k + 1)] = static_cast<std::uint8_t>(q & 0xff);
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(side));
  for (int r = 0; r < side; ++r) rows[static_cast<std::size_t>(r)] = raw.data() + static_cast<std::size_t>(r) * side * 2;

  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed to write " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(side), static_cast<png_uint_32>(side), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

double write_png16_normalized(const std::filesystem::path& path, int side, const Eigen::VectorXd& values) {
  const double peak = values.size() > 0 ? values.maxCoeff() : 0.0;
  const double scale = peak > 0.0 ? peak : 1.0;
  write_png16(path, side, values, scale);
  return scale;
}

}  // namespace nestanet

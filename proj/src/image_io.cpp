#include "dvicom/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace dvicom {

LuminanceImage::LuminanceImage(RealImage data) : data_(std::move(data)) {
  if (data_.rows() < kMinSide || data_.cols() < kMinSide) {
    throw DataError("image is " + std::to_string(data_.cols()) + "x" + std::to_string(data_.rows()) +
                    ", minimum is 16x16");
  }
  if (!data_.allFinite() || data_.minCoeff() < 0.0 || data_.maxCoeff() > 255.0) {
    throw DataError("luminance values must be finite and within [0, 255]");
  }
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RealImage decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw DataError("unsupported PNG bit depth in " + path.string() + " (8-bit only)");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto channels = color ? 3u : 1u;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  RealImage out(image.height, image.width);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const png_byte* px = buffer.data() + (static_cast<size_t>(r) * image.width + c) * channels;
      out(r, c) = color ? luma601(px[0], px[1], px[2]) : static_cast<double>(px[0]);
    }
  }
  return out;
}

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

// Uncompressed Windows bitmaps: 8-bit palettized, 24-bit BGR, 32-bit BGRA.
RealImage decode_bmp(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) { return DataError("cannot decode BMP " + path.string() + ": " + why); };
  if (bytes.size() < 54) throw fail("truncated header");
  const std::uint32_t data_offset = le32(&bytes[10]);
  const std::uint32_t header_size = le32(&bytes[14]);
  if (header_size < 40) throw fail("unsupported header");
  const auto width = static_cast<std::int32_t>(le32(&bytes[18]));
  const auto signed_height = static_cast<std::int32_t>(le32(&bytes[22]));
  const std::uint16_t bpp = le16(&bytes[28]);
  const std::uint32_t compression = le32(&bytes[30]);
  if (width <= 0 || signed_height == 0) throw fail("bad dimensions");
  if (compression != 0 && !(compression == 3 && bpp == 32)) throw fail("compressed bitmaps are not supported");
  if (bpp != 8 && bpp != 24 && bpp != 32) throw fail("unsupported bit depth " + std::to_string(bpp));

  const bool bottom_up = signed_height > 0;
  const std::int64_t height = bottom_up ? signed_height : -static_cast<std::int64_t>(signed_height);
  const std::size_t stride = (static_cast<std::size_t>(width) * bpp / 8 + 3) & ~std::size_t{3};
  if (data_offset + stride * static_cast<std::size_t>(height) > bytes.size()) throw fail("truncated pixel data");

  std::vector<std::array<double, 3>> palette;
  if (bpp == 8) {
    std::uint32_t colors = le32(&bytes[46]);
    if (colors == 0) colors = 256;
    const std::size_t table = 14 + header_size;
    if (table + 4 * colors > bytes.size()) throw fail("truncated palette");
    for (std::uint32_t i = 0; i < colors; ++i) {
      const unsigned char* e = &bytes[table + 4 * i];
      palette.push_back({double(e[2]), double(e[1]), double(e[0])});
    }
  }

  RealImage out(height, width);
  for (std::int64_t r = 0; r < height; ++r) {
    const std::int64_t src_row = bottom_up ? height - 1 - r : r;
    const unsigned char* row = &bytes[data_offset + stride * static_cast<std::size_t>(src_row)];
    for (std::int32_t c = 0; c < width; ++c) {
      if (bpp == 8) {
        const auto index = row[c];
        if (index >= palette.size()) throw fail("palette index out of range");
        const auto& e = palette[index];
        out(r, c) = (e[0] == e[1] && e[1] == e[2]) ? e[0] : luma601(e[0], e[1], e[2]);
      } else {
        const unsigned char* px = row + static_cast<std::size_t>(c) * (bpp / 8);
        out(r, c) = luma601(px[2], px[1], px[0]);
      }
    }
  }
  return out;
}

}  // namespace

LuminanceImage load_luminance(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return LuminanceImage(decode_png(bytes, path));
  }
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') {
    return LuminanceImage(decode_bmp(bytes, path));
  }
  throw DataError("unsupported image format: " + path.string());
}

Image<std::uint8_t> quantize_map(const RealImage& field, double gain) {
  if (!field.allFinite()) throw DataError("map contains non-finite values");
  if (!(gain > 0.0)) throw UsageError("map gain must be positive");
  return field.unaryExpr([gain](double v) {
    const double scaled = std::floor(v * gain + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  });
}

void write_gray_png(const Image<std::uint8_t>& pixels, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(pixels.cols());
  image.height = static_cast<png_uint_32>(pixels.rows());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + image.message);
  }
}

void export_map(const RealImage& field, const std::filesystem::path& path, double gain) {
  write_gray_png(quantize_map(field, gain), path);
}

}  // namespace dvicom

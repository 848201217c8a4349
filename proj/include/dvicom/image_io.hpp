#pragma once

#include <cstdint>
#include <filesystem>

#include "dvicom/core.hpp"

namespace dvicom {

/// Gray-level luminance in [0, 255], at least 16x16 pixels.
class LuminanceImage {
 public:
  static constexpr Eigen::Index kMinSide = 16;

  LuminanceImage() = default;
  /// Throws DataError when the grid violates the size or range invariants.
  explicit LuminanceImage(RealImage data);

  Eigen::Index width() const { return data_.cols(); }
  Eigen::Index height() const { return data_.rows(); }
  const RealImage& data() const { return data_; }
  double operator()(Eigen::Index row, Eigen::Index col) const { return data_(row, col); }

  bool operator==(const LuminanceImage& other) const {
    return data_.rows() == other.data_.rows() && data_.cols() == other.data_.cols() &&
           (data_ == other.data_).all();
  }

 private:
  RealImage data_;
};

/// BT.601 luma of an 8-bit RGB triple, clamped against rounding past 255.
inline double luma601(double r, double g, double b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return y > 255.0 ? 255.0 : (y < 0.0 ? 0.0 : y);
}

/// Loads a PNG or uncompressed BMP (8-bit gray, RGB or RGBA) as luminance.
LuminanceImage load_luminance(const std::filesystem::path& path);

/// Clamps a real map to [0, 255] after scaling by `gain`, rounding half up.
Image<std::uint8_t> quantize_map(const RealImage& field, double gain);

/// Writes `gain * field` as an 8-bit grayscale PNG.
void export_map(const RealImage& field, const std::filesystem::path& path, double gain);

/// Writes an 8-bit grayscale PNG verbatim.
void write_gray_png(const Image<std::uint8_t>& pixels, const std::filesystem::path& path);

}  // namespace dvicom

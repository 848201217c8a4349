#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "dvicom/core.hpp"

namespace dvicom {

/// Symmetric (half-sample) mirror extension: ... c b a | a b c ... c | c b a ...
inline Eigen::Index mirror_index(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Same-size 1-D convolution along x1 (within each row) with mirrored
/// borders. `taps` has odd length 2R+1 and taps[R] is the origin. Only every
/// `step`-th output column is produced (step = 1 gives the full result).
template <typename Scalar, typename Tap>
Image<Scalar> convolve_x1(const Image<Scalar>& in, std::span<const Tap> taps, Eigen::Index step = 1) {
  const Eigen::Index rows = in.rows();
  const Eigen::Index cols = in.cols();
  const auto radius = static_cast<Eigen::Index>(taps.size() / 2);
  const Eigen::Index out_cols = (cols + step - 1) / step;
  Image<Scalar> out(rows, out_cols);
  std::vector<Scalar> padded(static_cast<size_t>(cols + 2 * radius));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = -radius; c < 0; ++c) padded[static_cast<size_t>(c + radius)] = in(r, mirror_index(c, cols));
    std::copy_n(&in(r, 0), cols, padded.data() + radius);
    for (Eigen::Index c = cols; c < cols + radius; ++c) {
      padded[static_cast<size_t>(c + radius)] = in(r, mirror_index(c, cols));
    }
    for (Eigen::Index oc = 0; oc < out_cols; ++oc) {
      // out(c) = sum_u in(c - u) taps(u)
      const Eigen::Index c = oc * step;
      Scalar acc(0);
      const Scalar* base = padded.data() + c + 2 * radius;
      for (Eigen::Index k = 0; k <= 2 * radius; ++k) {
        acc += base[-k] * taps[static_cast<size_t>(k)];
      }
      out(r, oc) = acc;
    }
  }
  return out;
}

/// Same-size 1-D convolution along x2 (across rows), mirrored borders,
/// producing every `step`-th output row.
template <typename Scalar, typename Tap>
Image<Scalar> convolve_x2(const Image<Scalar>& in, std::span<const Tap> taps, Eigen::Index step = 1) {
  const Eigen::Index rows = in.rows();
  const auto radius = static_cast<Eigen::Index>(taps.size() / 2);
  const Eigen::Index out_rows = (rows + step - 1) / step;
  Image<Scalar> out = Image<Scalar>::Zero(out_rows, in.cols());
  for (Eigen::Index orow = 0; orow < out_rows; ++orow) {
    const Eigen::Index r = orow * step;
    for (Eigen::Index v = -radius; v <= radius; ++v) {
      const Tap t = taps[static_cast<size_t>(v + radius)];
      if (t == Tap(0)) continue;
      out.row(orow) += in.row(mirror_index(r - v, rows)) * t;
    }
  }
  return out;
}

/// Separable convolution: kernel(x1, x2) = along_x1(x1) * along_x2(x2).
/// With step > 1 the x2 pass runs first so the x1 pass only sees kept rows.
template <typename Scalar, typename Tap>
Image<Scalar> convolve_separable(const Image<Scalar>& in, std::span<const Tap> along_x1,
                                 std::span<const Tap> along_x2, Eigen::Index step = 1) {
  if (step > 1) return convolve_x1(convolve_x2(in, along_x2, step), along_x1, step);
  return convolve_x2(convolve_x1(in, along_x1, step), along_x2, step);
}

}  // namespace dvicom

#pragma once

// Convolution as a matrix product. A stride-1, unpadded convolution of a
// C x W x H map with J filters of size C x K x K is
//
//   output = im2col(x, K) * flatten_weights(filters)     (positions x J)
//
// where row p = w + h * out_width of im2col(x, K) is the patch whose top-left
// corner is (w, h), laid out channel by channel, each K x K block row-major.

#include <cstddef>
#include <span>
#include <vector>

#include "acnnl/tensor.hpp"

namespace acnnl {

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_width = 0;
  std::size_t in_height = 0;
  std::size_t kernel = 0;

  // Validates kernel <= min(width, height) and non-zero sizes.
  static ConvGeometry make(std::size_t channels, std::size_t width, std::size_t height, std::size_t kernel);
  static ConvGeometry of(const Tensor3& x, std::size_t kernel) {
    return make(x.channels(), x.width(), x.height(), kernel);
  }

  std::size_t out_width() const noexcept { return in_width - kernel + 1; }
  std::size_t out_height() const noexcept { return in_height - kernel + 1; }
  std::size_t positions() const noexcept { return out_width() * out_height(); }
  std::size_t patch_size() const noexcept { return in_channels * kernel * kernel; }

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

// J filters (each C x K x K) -> (C*K*K) x J, column j = filter j in Tensor3 order.
Mat flatten_weights(std::span<const Tensor3> filters);

std::vector<Tensor3> unflatten_weights(const Mat& w, std::size_t channels, std::size_t kernel);

Mat im2col(const Tensor3& x, std::size_t kernel);

// Writes the positions x patch_size patch matrix into `out`, whose rows are
// `row_stride` apart (row_stride >= patch_size; trailing columns untouched).
void im2col_into(const Tensor3& x, const ConvGeometry& geom, std::span<Real> out, std::size_t row_stride);

// positions x J output-layout matrix -> J x out_width x out_height map.
Tensor3 col2im(const Mat& m, const ConvGeometry& geom);

// Direct nested-loop convolution; reference implementation for the GEMM path.
Tensor3 loop_conv(const Tensor3& x, std::span<const Tensor3> filters);

}  // namespace acnnl

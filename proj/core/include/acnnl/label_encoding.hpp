#pragma once

// Per-layer supervision for hidden conv layers: one-hot labels Y (N x K) are
// projected by a Gaussian matrix Q (K x J*positions) into pseudo-targets
// Y*Q, one row per sample, which are then laid out like the layer output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "acnnl/tensor.hpp"

namespace acnnl {

struct LabelEncoder {
  std::size_t classes = 0;
  std::size_t channels = 0;   // J
  std::size_t positions = 0;  // out_width * out_height
  std::uint64_t seed = 0;
  double scale = 1.0;
  Mat q;  // classes x (channels * positions), i.i.d. N(0, scale^2)

  std::size_t target_dim() const noexcept { return channels * positions; }
};

LabelEncoder make_encoder(std::size_t classes, std::size_t channels, std::size_t positions, std::uint64_t seed,
                          double scale = 1.0);

// y must be one-hot (N x classes); returns N x target_dim, equal to y * q.
Mat encode(const Mat& y, const LabelEncoder& enc);

// Reads a length channels*positions row as `channels` consecutive blocks of
// `positions` values and returns it as a positions x channels matrix.
Mat reshape_target(std::span<const Real> row, std::size_t channels, std::size_t positions);

// Inverse of reshape_target.
std::vector<Real> flatten_target(const Mat& target);

// Row index of the hot entry; throws ValidationError if the row is not one-hot.
std::size_t hot_index(std::span<const Real> row);

}  // namespace acnnl

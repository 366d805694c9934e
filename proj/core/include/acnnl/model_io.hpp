#pragma once

// Binary model format, version 1. All values little-endian; integers u32
// unless noted, reals IEEE-754 binary64, strings as u32 length + bytes.
//
//   "ACNL"  u16 version
//   metadata: str prng_id, u64 encoder_seed, f64 gamma, u32 C, u32 W, u32 H,
//             u32 classes, f64 encoder_scale, u32 append_bias,
//             str train_fingerprint, str trained_at, str normalization
//   u32 layer_count
//   per layer: u32 kind (0 conv, 1 dense), u32 kernel, u32 out_channels,
//              u32 in_C, u32 in_W, u32 in_H, f64 slope, u32 pool,
//              u32 rows, u32 cols, rows*cols f64 weights (row-major)

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "acnnl/network.hpp"

namespace acnnl {

inline constexpr std::uint16_t kModelFormatVersion = 1;

void save_model(const TrainedNetwork& net, std::ostream& out);
void save_model(const TrainedNetwork& net, const std::filesystem::path& path);

// Throws FormatError (with byte offset) on bad magic, unknown version,
// truncation, trailing bytes or inconsistent geometry.
TrainedNetwork load_model(std::istream& in);
TrainedNetwork load_model(const std::filesystem::path& path);

}  // namespace acnnl

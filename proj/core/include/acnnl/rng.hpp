#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace acnnl {

// Identifier written into model files. The engine sequence of mt19937_64 is
// fixed by the standard; the distributions below are implemented here rather
// than through <random> so draws are identical across standard libraries.
inline constexpr std::string_view kPrngId = "mt19937_64+polar-normal/v1;layer-seed=splitmix64";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via the Marsaglia polar method.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the label encoder of layer `layer` (0-based).
std::uint64_t derive_layer_seed(std::uint64_t master_seed, std::size_t layer);

}  // namespace acnnl

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "acnnl/network.hpp"
#include "acnnl/tensor.hpp"

namespace acnnl {

// In-memory labelled image set. Pixels are normalized to [0, 1].
struct Dataset {
  std::vector<Tensor3> images;
  std::vector<std::uint32_t> labels;
  std::size_t classes = 0;
  std::string name;

  std::size_t size() const noexcept { return images.size(); }
  InputDims dims() const;

  // Throws ValidationError on label/shape inconsistencies.
  void validate() const;

  // 16 hex digits; independent of sample order.
  std::string fingerprint() const;

  std::vector<std::size_t> class_counts() const;
};

// MNIST-style IDX pair (0x00000803 images, 0x00000801 labels). classes == 0
// infers max(label) + 1.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t classes = 0);

// CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes.
Dataset load_cifar10(std::span<const std::filesystem::path> batches);

// CIFAR-100 binary file: coarse byte + fine byte + 3072 pixel bytes.
Dataset load_cifar100(const std::filesystem::path& path, bool fine_labels);

Mat to_onehot(std::span<const std::uint32_t> labels, std::size_t classes);

// Exactly n_c samples per class, chosen by a seeded shuffle of each class's
// index list; the result keeps the original relative order.
Dataset subsample_per_class(const Dataset& d, std::size_t n_c, std::uint64_t seed);

// k Gaussian clusters rendered as images. Each class has a centre drawn
// uniformly in [0,1]^dims; samples add N(0, (1/separation)^2) noise per pixel
// and are clamped to [0, 1].
Dataset synthetic_blobs(std::size_t k, std::size_t n_per_class, InputDims dims, double separation,
                        std::uint64_t seed);

// Fixture writers. Pixels are stored as round(255 * x).
void write_idx(const Dataset& d, const std::filesystem::path& images, const std::filesystem::path& labels);
void write_cifar10(const Dataset& d, const std::filesystem::path& path);

}  // namespace acnnl

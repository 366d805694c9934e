#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "acnnl/network.hpp"
#include "acnnl/tensor.hpp"

namespace acnnl {

// Random-access, read-only view of per-sample feature maps. get() may be
// called concurrently; every call is counted so callers can audit how many
// times the training data was visited.
class SampleSource {
 public:
  virtual ~SampleSource() = default;

  virtual std::size_t size() const = 0;
  virtual InputDims dims() const = 0;

  Tensor3 get(std::size_t i) const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    return load(i);
  }

  std::uint64_t reads() const noexcept { return reads_.load(std::memory_order_relaxed); }

 protected:
  virtual Tensor3 load(std::size_t i) const = 0;

 private:
  mutable std::atomic<std::uint64_t> reads_{0};
};

// Non-owning view over a vector of images.
class ImageSource final : public SampleSource {
 public:
  explicit ImageSource(const std::vector<Tensor3>& images) : images_(images) {}

  std::size_t size() const override { return images_.size(); }
  InputDims dims() const override;

 protected:
  Tensor3 load(std::size_t i) const override { return images_[i]; }

 private:
  const std::vector<Tensor3>& images_;
};

enum class LayerCache { memory, disk };

// Fixed-shape activation buffer filled by index during a layer's activation
// pass and read by the next layer. put() on distinct indices is thread-safe.
class ActivationStore : public SampleSource {
 public:
  // `dir` is only used for LayerCache::disk; empty means the system temp dir.
  static std::unique_ptr<ActivationStore> create(LayerCache kind, std::size_t count, InputDims dims,
                                                 const std::filesystem::path& dir = {});

  virtual void put(std::size_t i, const Tensor3& t) = 0;
};

}  // namespace acnnl

#include "acnnl/activation_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <string>

#include "acnnl/errors.hpp"

namespace acnnl {
namespace {

void check_put(const Tensor3& t, const InputDims& dims, std::size_t i, std::size_t count) {
  if (i >= count) throw ShapeError("ActivationStore::put: index out of range");
  if (t.channels() != dims.channels || t.width() != dims.width || t.height() != dims.height) {
    throw ShapeError("ActivationStore::put: tensor shape does not match store");
  }
}

class MemoryStore final : public ActivationStore {
 public:
  MemoryStore(std::size_t count, InputDims dims) : count_(count), dims_(dims), data_(count * dims.size()) {}

  std::size_t size() const override { return count_; }
  InputDims dims() const override { return dims_; }

  void put(std::size_t i, const Tensor3& t) override {
    check_put(t, dims_, i, count_);
    std::copy(t.data().begin(), t.data().end(), data_.begin() + static_cast<std::ptrdiff_t>(i * dims_.size()));
  }

 protected:
  Tensor3 load(std::size_t i) const override {
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(i * dims_.size());
    return Tensor3(dims_.channels, dims_.width, dims_.height,
                   std::vector<Real>(first, first + static_cast<std::ptrdiff_t>(dims_.size())));
  }

 private:
  std::size_t count_;
  InputDims dims_;
  std::vector<Real> data_;
};

// Unlinked temp file accessed with positional I/O, so concurrent readers and
// writers need no shared file offset.
class DiskStore final : public ActivationStore {
 public:
  DiskStore(std::size_t count, InputDims dims, const std::filesystem::path& dir)
      : count_(count), dims_(dims), record_bytes_(dims.size() * sizeof(Real)) {
    const auto base = dir.empty() ? std::filesystem::temp_directory_path() : dir;
    std::string templ = (base / "acnnl-activations-XXXXXX").string();
    fd_ = ::mkstemp(templ.data());
    if (fd_ < 0) throw Error("ActivationStore: cannot create temp file in " + base.string() + ": " + std::strerror(errno));
    ::unlink(templ.c_str());
  }

  ~DiskStore() override {
    if (fd_ >= 0) ::close(fd_);
  }

  DiskStore(const DiskStore&) = delete;
  DiskStore& operator=(const DiskStore&) = delete;

  std::size_t size() const override { return count_; }
  InputDims dims() const override { return dims_; }

  void put(std::size_t i, const Tensor3& t) override {
    check_put(t, dims_, i, count_);
    const auto* p = reinterpret_cast<const char*>(t.data().data());
    std::size_t done = 0;
    while (done < record_bytes_) {
      const auto n = ::pwrite(fd_, p + done, record_bytes_ - done, static_cast<off_t>(i * record_bytes_ + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("ActivationStore: write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

 protected:
  Tensor3 load(std::size_t i) const override {
    std::vector<Real> data(dims_.size());
    auto* p = reinterpret_cast<char*>(data.data());
    std::size_t done = 0;
    while (done < record_bytes_) {
      const auto n = ::pread(fd_, p + done, record_bytes_ - done, static_cast<off_t>(i * record_bytes_ + done));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error("ActivationStore: read failed for sample " + std::to_string(i));
      done += static_cast<std::size_t>(n);
    }
    return Tensor3(dims_.channels, dims_.width, dims_.height, std::move(data));
  }

 private:
  std::size_t count_;
  InputDims dims_;
  std::size_t record_bytes_;
  int fd_ = -1;
};

}  // namespace

InputDims ImageSource::dims() const {
  if (images_.empty()) return {};
  const auto& f = images_.front();
  return {f.channels(), f.width(), f.height()};
}

std::unique_ptr<ActivationStore> ActivationStore::create(LayerCache kind, std::size_t count, InputDims dims,
                                                         const std::filesystem::path& dir) {
  if (dims.size() == 0) throw ShapeError("ActivationStore: zero-sized records");
  if (kind == LayerCache::disk) return std::make_unique<DiskStore>(count, dims, dir);
  return std::make_unique<MemoryStore>(count, dims);
}

}  // namespace acnnl

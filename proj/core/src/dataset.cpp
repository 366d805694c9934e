#include "acnnl/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "acnnl/errors.hpp"
#include "acnnl/rng.hpp"

namespace acnnl {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t at, const std::string& what) {
  if (at + 4 > buf.size()) throw FormatError(what + ": truncated header", buf.size());
  return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) | (std::uint32_t{buf[at + 2]} << 8) |
         std::uint32_t{buf[at + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

Tensor3 image_from_bytes(const unsigned char* p, std::size_t c, std::size_t w, std::size_t h) {
  std::vector<Real> data(c * w * h);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<Real>(p[i]) / 255.0;
  return Tensor3(c, w, h, std::move(data));
}

unsigned char to_byte(Real v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void append_cifar(Dataset& d, const std::filesystem::path& path, std::size_t label_bytes, std::size_t label_index) {
  const auto buf = read_file(path);
  const std::size_t record = label_bytes + kCifarPixels;
  if (buf.size() % record != 0) {
    throw FormatError(path.string() + ": length " + std::to_string(buf.size()) + " is not a multiple of " +
                      std::to_string(record), buf.size() - buf.size() % record);
  }
  for (std::size_t at = 0; at < buf.size(); at += record) {
    const std::uint32_t label = buf[at + label_index];
    if (label >= d.classes) {
      throw FormatError(path.string() + ": label " + std::to_string(label) + " out of range", at + label_index);
    }
    d.labels.push_back(label);
    d.images.push_back(image_from_bytes(buf.data() + at + label_bytes, 3, kCifarSide, kCifarSide));
  }
}

}  // namespace

InputDims Dataset::dims() const {
  if (images.empty()) return {};
  return {images.front().channels(), images.front().width(), images.front().height()};
}

void Dataset::validate() const {
  if (images.size() != labels.size()) throw ValidationError("dataset: image and label counts differ");
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] >= classes) throw ValidationError("dataset: label " + std::to_string(labels[i]) + " >= classes");
    if (!images[i].same_shape(images.front())) throw ValidationError("dataset: images have differing shapes");
  }
}

std::string Dataset::fingerprint() const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, &labels[i], sizeof(labels[i]));
    for (Real v : images[i].data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      h = fnv1a(h, &bits, sizeof(bits));
    }
    sum += splitmix64(h);
  }
  const auto d = dims();
  std::uint64_t fp = splitmix64(sum ^ splitmix64(images.size()));
  fp = splitmix64(fp ^ (d.channels << 40) ^ (d.width << 20) ^ d.height ^ (static_cast<std::uint64_t>(classes) << 52));
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fp));
  return hex;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes, 0);
  for (auto l : labels)
    if (l < classes) ++counts[l];
  return counts;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t classes) {
  const auto ib = read_file(images);
  const auto lb = read_file(labels);

  const auto image_magic = read_be32(ib, 0, images.string());
  if (image_magic != kIdxImagesMagic) throw FormatError(images.string() + ": bad IDX image magic", 0);
  const auto label_magic = read_be32(lb, 0, labels.string());
  if (label_magic != kIdxLabelsMagic) throw FormatError(labels.string() + ": bad IDX label magic", 0);

  const std::size_t count = read_be32(ib, 4, images.string());
  const std::size_t rows = read_be32(ib, 8, images.string());
  const std::size_t cols = read_be32(ib, 12, images.string());
  const std::size_t label_count = read_be32(lb, 4, labels.string());
  if (count != label_count) {
    throw FormatError(labels.string() + ": " + std::to_string(label_count) + " labels for " +
                      std::to_string(count) + " images", 4);
  }
  if (rows == 0 || cols == 0) throw FormatError(images.string() + ": zero image size", 8);
  const std::size_t pixels = rows * cols;
  if (ib.size() < 16 + count * pixels) throw FormatError(images.string() + ": truncated pixel data", ib.size());
  if (lb.size() < 8 + count) throw FormatError(labels.string() + ": truncated label data", lb.size());

  Dataset d;
  d.name = images.filename().string();
  d.images.reserve(count);
  d.labels.reserve(count);
  std::uint32_t max_label = 0;
  for (std::size_t n = 0; n < count; ++n) {
    d.images.push_back(image_from_bytes(ib.data() + 16 + n * pixels, 1, rows, cols));
    d.labels.push_back(lb[8 + n]);
    max_label = std::max<std::uint32_t>(max_label, lb[8 + n]);
  }
  d.classes = classes != 0 ? classes : (count == 0 ? 0 : max_label + 1);
  for (std::size_t n = 0; n < count; ++n) {
    if (d.labels[n] >= d.classes) throw FormatError(labels.string() + ": label out of range", 8 + n);
  }
  return d;
}

Dataset load_cifar10(std::span<const std::filesystem::path> batches) {
  Dataset d;
  d.classes = 10;
  d.name = "cifar10";
  for (const auto& path : batches) append_cifar(d, path, 1, 0);
  return d;
}

Dataset load_cifar100(const std::filesystem::path& path, bool fine_labels) {
  Dataset d;
  d.classes = fine_labels ? 100 : 20;
  d.name = fine_labels ? "cifar100-fine" : "cifar100-coarse";
  append_cifar(d, path, 2, fine_labels ? 1 : 0);
  return d;
}

Mat to_onehot(std::span<const std::uint32_t> labels, std::size_t classes) {
  Mat y(labels.size(), classes);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] >= classes) {
      throw ValidationError("to_onehot: label " + std::to_string(labels[n]) + " >= " + std::to_string(classes));
    }
    y(n, labels[n]) = 1;
  }
  return y;
}

Dataset subsample_per_class(const Dataset& d, std::size_t n_c, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(d.classes);
  for (std::size_t i = 0; i < d.size(); ++i) by_class.at(d.labels[i]).push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> keep;
  keep.reserve(n_c * d.classes);
  for (std::size_t c = 0; c < d.classes; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < n_c) {
      throw ValidationError("subsample_per_class: class " + std::to_string(c) + " has " +
                            std::to_string(idx.size()) + " samples, " + std::to_string(n_c) + " requested");
    }
    rng.shuffle(std::span(idx));
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_c));
  }
  std::sort(keep.begin(), keep.end());

  Dataset out;
  out.classes = d.classes;
  out.name = d.name + "/subsample" + std::to_string(n_c);
  out.images.reserve(keep.size());
  out.labels.reserve(keep.size());
  for (auto i : keep) {
    out.images.push_back(d.images[i]);
    out.labels.push_back(d.labels[i]);
  }
  return out;
}

Dataset synthetic_blobs(std::size_t k, std::size_t n_per_class, InputDims dims, double separation,
                        std::uint64_t seed) {
  if (k == 0 || dims.size() == 0) throw ValidationError("synthetic_blobs: empty class set or image");
  if (!(separation > 0)) throw ValidationError("synthetic_blobs: separation must be positive");
  Rng rng(seed);
  std::vector<std::vector<Real>> centres(k, std::vector<Real>(dims.size()));
  for (auto& c : centres)
    for (auto& v : c) v = rng.uniform();

  Dataset d;
  d.classes = k;
  d.name = "blobs";
  const double sd = 1.0 / separation;
  for (std::size_t n = 0; n < n_per_class; ++n) {
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<Real> px(dims.size());
      for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::clamp(centres[c][i] + sd * rng.normal(), 0.0, 1.0);
      d.images.emplace_back(dims.channels, dims.width, dims.height, std::move(px));
      d.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return d;
}

void write_idx(const Dataset& d, const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto dims = d.dims();
  if (d.size() > 0 && dims.channels != 1) throw ValidationError("write_idx: IDX images are single channel");
  std::ofstream im(images, std::ios::binary | std::ios::trunc);
  std::ofstream lb(labels, std::ios::binary | std::ios::trunc);
  if (!im || !lb) throw Error("write_idx: cannot open output files");
  put_be32(im, kIdxImagesMagic);
  put_be32(im, static_cast<std::uint32_t>(d.size()));
  put_be32(im, static_cast<std::uint32_t>(dims.width));
  put_be32(im, static_cast<std::uint32_t>(dims.height));
  put_be32(lb, kIdxLabelsMagic);
  put_be32(lb, static_cast<std::uint32_t>(d.size()));
  for (std::size_t n = 0; n < d.size(); ++n) {
    for (Real v : d.images[n].data()) im.put(static_cast<char>(to_byte(v)));
    lb.put(static_cast<char>(d.labels[n]));
  }
}

void write_cifar10(const Dataset& d, const std::filesystem::path& path) {
  const auto dims = d.dims();
  if (d.size() > 0 && !(dims == InputDims{3, kCifarSide, kCifarSide})) {
    throw ValidationError("write_cifar10: images must be 3x32x32");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("write_cifar10: cannot open " + path.string());
  for (std::size_t n = 0; n < d.size(); ++n) {
    out.put(static_cast<char>(d.labels[n]));
    for (Real v : d.images[n].data()) out.put(static_cast<char>(to_byte(v)));
  }
}

}  // namespace acnnl

#include "acnnl/model_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "acnnl/errors.hpp"

namespace acnnl {
namespace {

constexpr std::array<char, 4> kMagic = {'A', 'C', 'N', 'L'};
constexpr std::uint32_t kConvTag = 0;
constexpr std::uint32_t kDenseTag = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

  void u16(std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    bytes(b, 2);
  }

  void u32(std::uint64_t v) {
    if (v > UINT32_MAX) throw ValidationError("save_model: value " + std::to_string(v) + " exceeds u32");
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b, 4);
  }

  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(b, 8);
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u32(s.size());
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const noexcept { return offset_; }

  void bytes(char* p, std::size_t n, const char* what) {
    in_.read(p, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) throw FormatError(std::string("truncated model file while reading ") + what, offset_ + got);
    offset_ += n;
  }

  std::uint64_t unsigned_le(std::size_t width, const char* what) {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), width, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(unsigned_le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(unsigned_le(4, what)); }
  std::uint64_t u64(const char* what) { return unsigned_le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  std::string str(const char* what) {
    const std::uint64_t at = offset_;
    const std::uint32_t n = u32(what);
    if (n > (1u << 20)) throw FormatError(std::string("implausible string length for ") + what, at);
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void save_model(const TrainedNetwork& net, std::ostream& out) {
  validate_network(net);
  const auto plans = plan_network(net.spec);
  const auto& spec = net.spec;

  Writer w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.u16(kModelFormatVersion);

  w.str(net.metadata.prng_id);
  w.u64(spec.encoder_seed);
  w.f64(spec.gamma);
  w.u32(spec.input.channels);
  w.u32(spec.input.width);
  w.u32(spec.input.height);
  w.u32(spec.classes);
  w.f64(spec.encoder_scale);
  w.u32(spec.append_bias ? 1 : 0);
  w.str(net.metadata.train_fingerprint);
  w.str(net.metadata.trained_at);
  w.str(net.metadata.normalization);

  w.u32(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& plan = plans[l];
    if (const auto* conv = std::get_if<ConvLayer>(&spec.layers[l])) {
      w.u32(kConvTag);
      w.u32(conv->kernel);
      w.u32(conv->out_channels);
      w.u32(plan.in.channels);
      w.u32(plan.in.width);
      w.u32(plan.in.height);
      w.f64(conv->slope);
      w.u32(conv->pool);
    } else {
      const auto& dense = std::get<DenseLayer>(spec.layers[l]);
      w.u32(kDenseTag);
      w.u32(0);
      w.u32(dense.out_dim);
      w.u32(plan.in.channels);
      w.u32(plan.in.width);
      w.u32(plan.in.height);
      w.f64(0.0);
      w.u32(0);
    }
    const Mat& m = net.weights[l];
    w.u32(m.rows());
    w.u32(m.cols());
    for (Real v : m.data()) w.f64(v);
  }
  if (!out) throw Error("save_model: write failed");
}

void save_model(const TrainedNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_model: cannot open " + path.string());
  save_model(net, out);
}

TrainedNetwork load_model(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("bad magic: not an ACNL model file", 0);
  const std::uint64_t version_at = r.offset();
  const std::uint16_t version = r.u16("version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version), version_at);
  }

  TrainedNetwork net;
  auto& spec = net.spec;
  net.metadata.prng_id = r.str("prng id");
  spec.encoder_seed = r.u64("encoder seed");
  spec.gamma = r.f64("gamma");
  spec.input.channels = r.u32("input channels");
  spec.input.width = r.u32("input width");
  spec.input.height = r.u32("input height");
  spec.classes = r.u32("class count");
  spec.encoder_scale = r.f64("encoder scale");
  const std::uint32_t bias = r.u32("bias flag");
  if (bias > 1) throw FormatError("bias flag must be 0 or 1", r.offset() - 4);
  spec.append_bias = bias == 1;
  net.metadata.train_fingerprint = r.str("train fingerprint");
  net.metadata.trained_at = r.str("timestamp");
  net.metadata.normalization = r.str("normalization");

  const std::uint64_t count_at = r.offset();
  const std::uint32_t layer_count = r.u32("layer count");
  if (layer_count == 0 || layer_count > 64) {
    throw FormatError("implausible layer count " + std::to_string(layer_count), count_at);
  }

  std::vector<InputDims> recorded_inputs;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint64_t layer_at = r.offset();
    const std::uint32_t kind = r.u32("layer kind");
    const std::uint32_t kernel = r.u32("kernel");
    const std::uint32_t out_channels = r.u32("output channels");
    InputDims in;
    in.channels = r.u32("layer input channels");
    in.width = r.u32("layer input width");
    in.height = r.u32("layer input height");
    const double slope = r.f64("activation slope");
    const std::uint32_t pool = r.u32("pool size");
    if (kind == kConvTag) {
      spec.layers.emplace_back(ConvLayer{kernel, out_channels, slope, pool});
    } else if (kind == kDenseTag) {
      spec.layers.emplace_back(DenseLayer{out_channels});
    } else {
      throw FormatError("unknown layer kind " + std::to_string(kind), layer_at);
    }
    recorded_inputs.push_back(in);

    const std::uint64_t shape_at = r.offset();
    const std::uint32_t rows = r.u32("weight rows");
    const std::uint32_t cols = r.u32("weight cols");
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 32)) {
      throw FormatError("implausible weight shape", shape_at);
    }
    Mat m(rows, cols);
    for (Real& v : m.data()) v = r.f64("weights");
    net.weights.push_back(std::move(m));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last layer", r.offset());

  std::vector<LayerPlan> plans;
  try {
    plans = plan_network(spec);
    validate_network(net);
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent model geometry: ") + e.what(), count_at);
  }
  for (std::size_t l = 0; l < plans.size(); ++l) {
    if (!(plans[l].in == recorded_inputs[l])) {
      throw FormatError("layer " + std::to_string(l + 1) + " recorded input dims disagree with the network",
                        count_at);
    }
  }
  return net;
}

TrainedNetwork load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_model: cannot open " + path.string());
  return load_model(in);
}

}  // namespace acnnl

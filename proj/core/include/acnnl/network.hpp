#pragma once

// Vanilla CNN description and inference: a stack of stride-1 unpadded conv
// layers (each followed by LeakyReLU and optional average pooling) ending in
// one dense layer. No bias terms unless NetworkSpec::append_bias is set, in
// which case every design row gets a trailing constant 1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "acnnl/im2col.hpp"
#include "acnnl/tensor.hpp"

namespace acnnl {

struct InputDims {
  std::size_t channels = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t size() const noexcept { return channels * width * height; }
  friend bool operator==(const InputDims&, const InputDims&) = default;
};

struct ConvLayer {
  std::size_t kernel = 0;
  std::size_t out_channels = 0;
  double slope = 0.1;
  std::size_t pool = 0;  // 0 = no pooling

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct DenseLayer {
  std::size_t out_dim = 0;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

using LayerSpec = std::variant<ConvLayer, DenseLayer>;

struct NetworkSpec {
  InputDims input;
  std::size_t classes = 0;
  std::vector<LayerSpec> layers;
  double gamma = 100;
  std::uint64_t encoder_seed = 1;
  double encoder_scale = 1.0;
  bool append_bias = false;

  std::size_t conv_layer_count() const noexcept { return layers.empty() ? 0 : layers.size() - 1; }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Geometry of one layer, derived from the input dims.
struct LayerPlan {
  bool dense = false;
  InputDims in;
  ConvGeometry conv;  // conv layers only
  InputDims conv_out;  // J x out_w x out_h before pooling (conv only)
  InputDims out;       // after activation and pooling; dense: classes x 1 x 1
  std::size_t rows_per_sample = 1;  // linear constraints each sample adds
  std::size_t weight_rows = 0;
  std::size_t weight_cols = 0;
};

// Validates the spec and derives per-layer geometry. Throws ShapeError or
// ValidationError when the stack is not buildable.
std::vector<LayerPlan> plan_network(const NetworkSpec& spec);

// CNN-5(C): Conv5xC - pool2 - Conv3x2C - pool2 - Conv3x4C - Conv3x4C - Dense.
// depth in [2, 5] keeps the first depth-1 conv layers; a layer only pools
// when another conv layer follows it.
NetworkSpec build_cnn5(std::size_t c, InputDims input, std::size_t classes, std::size_t depth = 5);

inline Real leaky_relu(Real x, Real slope) noexcept { return x >= 0 ? x : slope * x; }

// Non-overlapping p x p mean pooling per channel.
Tensor3 avg_pool(const Tensor3& x, std::size_t p);

struct ModelMetadata {
  std::string prng_id;
  std::string train_fingerprint;
  std::string trained_at;  // ISO-8601 UTC
  std::string normalization = "pixel/255";

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct TrainedNetwork {
  NetworkSpec spec;
  std::vector<Mat> weights;
  ModelMetadata metadata;
};

// Throws ShapeError unless the weight list matches plan_network(spec).
void validate_network(const TrainedNetwork& net);

// Writes the positions x weight_rows design matrix of a conv layer (patches,
// plus a trailing 1 per row with bias) into `out`.
void conv_design_into(const Tensor3& x, const LayerPlan& plan, bool bias, std::span<Real> out);

// Pre-activation conv output for one sample: design * w, positions x J.
Mat conv_response(const Tensor3& x, const Mat& w, const LayerPlan& plan, bool bias);

// Full conv block: response -> LeakyReLU -> feature map -> optional pooling.
Tensor3 conv_forward(const Tensor3& x, const Mat& w, const LayerPlan& plan, const ConvLayer& layer, bool bias);

std::vector<Real> dense_forward(std::span<const Real> features, const Mat& w, bool bias);

std::vector<Real> forward(const TrainedNetwork& net, const Tensor3& x);

// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax(std::span<const Real> values);

std::size_t predict(const TrainedNetwork& net, const Tensor3& x);

}  // namespace acnnl

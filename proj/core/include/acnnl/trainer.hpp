#pragma once

// Layer-wise closed-form training of a vanilla CNN.
//
// For each conv layer l, in order:
//   1. draw a Gaussian label encoder for the layer's J*positions outputs;
//   2. stream the layer inputs once, accumulating sum X^T X and sum X^T Zbar
//      over the im2col design matrices X and encoded targets Zbar;
//   3. solve W = (sum X^T X + gamma I)^{-1} sum X^T Zbar;
//   4. stream the inputs again to produce LeakyReLU(X W), reshaped into
//      feature maps (and pooled), which become layer l+1's inputs.
// The final dense layer is a ridge regression of flattened features onto the
// one-hot labels. No gradients are computed and no sample is revisited
// beyond these passes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "acnnl/activation_store.hpp"
#include "acnnl/dataset.hpp"
#include "acnnl/label_encoding.hpp"
#include "acnnl/network.hpp"
#include "acnnl/ridge.hpp"

namespace acnnl {

struct TrainConfig {
  // gamma / encoder_seed / encoder_scale override the values in NetworkSpec;
  // the returned network records what was used.
  double gamma = 100;
  std::uint64_t encoder_seed = 1;
  double encoder_scale = 1.0;
  // Merge per-shard Gram sums in shard order, which makes results bitwise
  // independent of `workers`. Otherwise shards merge in completion order.
  bool deterministic = true;
  std::size_t workers = 1;
  LayerCache layer_cache = LayerCache::memory;
  std::filesystem::path cache_dir;
  std::size_t shard_samples = 1024;
  std::size_t batch_rows = 4096;

  void validate() const;
};

struct LayerReport {
  std::size_t layer = 0;  // 1-based
  bool dense = false;
  std::size_t gram_dim = 0;
  std::size_t target_dim = 0;
  std::uint64_t samples = 0;
  std::uint64_t rows_seen = 0;
  std::uint64_t encoder_seed = 0;
  double accumulate_seconds = 0;
  double solve_seconds = 0;
  double activate_seconds = 0;
  double condition_estimate = 0;
  bool used_pseudoinverse = false;
};

struct TrainReport {
  std::vector<LayerReport> layers;
  double total_seconds = 0;
  // Sample reads across the dataset and all cached activations, divided by N.
  double passes_per_sample = 0;
};

// Accumulation pass of one conv layer.
GramAccumulator accumulate_conv_layer(const SampleSource& inputs, std::span<const std::uint32_t> labels,
                                      const LayerPlan& plan, const LabelEncoder& encoder, bool bias,
                                      const TrainConfig& cfg);

// Activation pass of one conv layer into a fresh store.
std::unique_ptr<ActivationStore> activate_conv_layer(const SampleSource& inputs, const Mat& weights,
                                                     const LayerPlan& plan, const ConvLayer& layer, bool bias,
                                                     const TrainConfig& cfg);

struct ConvLayerResult {
  Mat weights;
  std::unique_ptr<ActivationStore> activations;
  LayerReport report;
};

// Trains conv layer `layer_index` (0-based; selects the encoder seed) from
// one-hot labels and returns its weights and output activations.
ConvLayerResult train_layer_conv(const SampleSource& inputs, const Mat& onehot, const LayerPlan& plan,
                                 const ConvLayer& layer, bool bias, std::size_t layer_index, const TrainConfig& cfg);

// Gram sums of flattened features against one-hot targets.
GramAccumulator accumulate_dense(const SampleSource& features, std::span<const std::uint32_t> labels,
                                 std::size_t classes, bool bias, const TrainConfig& cfg);

Mat train_final_mlp(const SampleSource& features, const Mat& onehot, double gamma, bool bias = false,
                    const TrainConfig& cfg = {});

TrainedNetwork train_acnnl(const Dataset& data, const NetworkSpec& spec, const TrainConfig& cfg,
                           TrainReport* report = nullptr);

// One network per gamma. The first layer is accumulated once and solved for
// every gamma; deeper layers are retrained because their inputs depend on it.
std::vector<TrainedNetwork> train_acnnl_sweep(const Dataset& data, const NetworkSpec& spec, const TrainConfig& cfg,
                                              std::span<const double> gammas,
                                              std::vector<TrainReport>* reports = nullptr);

// Ridge classifier on raw flattened pixels (a single dense layer).
TrainedNetwork train_mlp_baseline(const Dataset& data, double gamma, const TrainConfig& cfg = {});

struct Evaluation {
  double accuracy = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<double> per_class;                      // recall per class
  std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
};

Evaluation evaluate(const TrainedNetwork& net, const Dataset& data, std::size_t workers = 1);

// Trains from scratch on n_c samples per class of `train` and returns the
// accuracy on the full `test` set.
double small_sample_protocol(const Dataset& train, const Dataset& test, std::size_t n_c, std::uint64_t seed,
                             const NetworkSpec& spec, const TrainConfig& cfg);

}  // namespace acnnl

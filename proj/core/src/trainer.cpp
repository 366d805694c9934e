#include "acnnl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>

#include "acnnl/errors.hpp"
#include "acnnl/rng.hpp"

namespace acnnl {
namespace {

using Clock = std::chrono::steady_clock;

// Upper bound on one design-matrix batch.
constexpr std::size_t kBatchBytes = std::size_t{64} << 20;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Calls fn(task, worker) for every task in [0, tasks) on up to `workers`
// threads. The first exception thrown is rethrown after all threads join.
template <typename Fn>
void run_parallel(std::size_t tasks, std::size_t workers, Fn&& fn) {
  workers = std::min(workers, tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (;;) {
        const auto t = next.fetch_add(1);
        if (t >= tasks || failed.load()) return;
        try {
          fn(t, w);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

struct Shards {
  std::size_t count;
  std::size_t size;

  std::size_t number() const { return (count + size - 1) / size; }
  std::size_t begin(std::size_t s) const { return s * size; }
  std::size_t end(std::size_t s) const { return std::min(count, (s + 1) * size); }
};

// Sums fill(acc, begin, end) over all shards. Deterministic mode gives every
// shard a fresh accumulator and merges them in shard order, `workers` at a
// time; otherwise each worker owns one accumulator and they merge as workers
// finish.
template <typename Fill>
GramAccumulator sharded_accumulate(std::size_t count, std::size_t dim_in, std::size_t dim_out, const TrainConfig& cfg,
                                   Fill&& fill) {
  const Shards shards{count, cfg.shard_samples};
  GramAccumulator total(dim_in, dim_out);
  if (cfg.deterministic) {
    const std::size_t n = shards.number();
    for (std::size_t wave = 0; wave < n; wave += cfg.workers) {
      const std::size_t width = std::min(cfg.workers, n - wave);
      std::vector<GramAccumulator> partial(width);
      run_parallel(width, cfg.workers, [&](std::size_t t, std::size_t) {
        partial[t] = GramAccumulator(dim_in, dim_out);
        fill(partial[t], shards.begin(wave + t), shards.end(wave + t));
      });
      for (const auto& p : partial) total.merge_from(p);
    }
    return total;
  }

  const std::size_t workers = std::min(cfg.workers, shards.number());
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards.number(); ++s) fill(total, shards.begin(s), shards.end(s));
    return total;
  }
  std::vector<GramAccumulator> own(workers);
  for (auto& a : own) a = GramAccumulator(dim_in, dim_out);
  std::mutex merge_mutex;
  std::vector<std::thread> threads;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t s; (s = next.fetch_add(1)) < shards.number();) fill(own[w], shards.begin(s), shards.end(s));
        std::lock_guard lock(merge_mutex);
        total.merge_from(own[w]);
      } catch (...) {
        std::lock_guard lock(merge_mutex);
        if (!error) error = std::current_exception();
        next.store(shards.number());
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
  return total;
}

std::size_t batch_samples(const TrainConfig& cfg, std::size_t rows_per_sample, std::size_t row_width) {
  const std::size_t cap = std::max<std::size_t>(1, kBatchBytes / (row_width * sizeof(Real)));
  const std::size_t rows = std::min(cfg.batch_rows, cap);
  return std::max<std::size_t>(1, rows / rows_per_sample);
}

std::vector<std::uint32_t> labels_of(const Mat& onehot) {
  std::vector<std::uint32_t> labels(onehot.rows());
  for (std::size_t n = 0; n < onehot.rows(); ++n) labels[n] = static_cast<std::uint32_t>(hot_index(onehot.row(n)));
  return labels;
}

void check_labels(const SampleSource& src, std::span<const std::uint32_t> labels, std::size_t classes) {
  if (src.size() == 0) throw ValidationError("trainer: no training samples");
  if (labels.size() != src.size()) {
    throw ValidationError("trainer: " + std::to_string(labels.size()) + " labels for " + std::to_string(src.size()) +
                          " samples");
  }
  for (auto l : labels)
    if (l >= classes) throw ValidationError("trainer: label " + std::to_string(l) + " out of range");
}

void check_dims(const SampleSource& src, const InputDims& want, const char* who) {
  if (!(src.dims() == want)) throw ShapeError(std::string(who) + ": sample dims do not match the layer input");
}

void fill_report(LayerReport& r, const GramAccumulator& acc, const LayerSolution& sol) {
  r.gram_dim = acc.dim_in();
  r.target_dim = acc.dim_out();
  r.samples = acc.samples_seen();
  r.rows_seen = acc.rows_seen();
  r.condition_estimate = sol.condition_estimate;
  r.used_pseudoinverse = sol.used_pseudoinverse;
}

NetworkSpec effective_spec(const NetworkSpec& spec, const TrainConfig& cfg, double gamma) {
  NetworkSpec s = spec;
  s.gamma = gamma;
  s.encoder_seed = cfg.encoder_seed;
  s.encoder_scale = cfg.encoder_scale;
  return s;
}

void check_dataset(const Dataset& data, const NetworkSpec& spec) {
  if (data.size() == 0) throw ValidationError("trainer: empty dataset");
  if (!(data.dims() == spec.input)) throw ShapeError("trainer: dataset dims do not match the network input");
  if (data.classes != spec.classes) {
    throw ValidationError("trainer: dataset has " + std::to_string(data.classes) + " classes, network expects " +
                          std::to_string(spec.classes));
  }
  data.validate();
}

struct Pipeline {
  const Dataset& data;
  NetworkSpec spec;
  std::vector<LayerPlan> plans;
  TrainConfig cfg;
};

// Trains every layer of p.spec. When `first` is set it replaces the
// accumulation pass of the first conv layer.
TrainedNetwork run_pipeline(const Pipeline& p, const GramAccumulator* first, double first_accumulate_s,
                            TrainReport* report) {
  const auto t_total = Clock::now();
  const bool bias = p.spec.append_bias;
  ImageSource images(p.data.images);
  std::unique_ptr<ActivationStore> store;
  const SampleSource* cur = &images;
  std::uint64_t reads = first ? first->samples_seen() : 0;

  TrainedNetwork net;
  net.spec = p.spec;
  TrainReport rep;

  for (std::size_t l = 0; l < p.plans.size(); ++l) {
    const auto& plan = p.plans[l];
    LayerReport lr;
    lr.layer = l + 1;
    lr.dense = plan.dense;

    GramAccumulator acc;
    auto t0 = Clock::now();
    if (plan.dense) {
      acc = accumulate_dense(*cur, p.data.labels, p.spec.classes, bias, p.cfg);
      lr.accumulate_seconds = seconds_since(t0);
    } else {
      lr.encoder_seed = derive_layer_seed(p.cfg.encoder_seed, l);
      if (l == 0 && first) {
        acc = *first;
        lr.accumulate_seconds = first_accumulate_s;
      } else {
        const auto enc = make_encoder(p.spec.classes, plan.conv_out.channels, plan.conv.positions(), lr.encoder_seed,
                                      p.cfg.encoder_scale);
        acc = accumulate_conv_layer(*cur, p.data.labels, plan, enc, bias, p.cfg);
        lr.accumulate_seconds = seconds_since(t0);
      }
    }

    t0 = Clock::now();
    auto sol = solve_layer_detailed(acc, p.spec.gamma);
    lr.solve_seconds = seconds_since(t0);
    fill_report(lr, acc, sol);

    if (!plan.dense) {
      t0 = Clock::now();
      const auto& layer = std::get<ConvLayer>(p.spec.layers[l]);
      auto next = activate_conv_layer(*cur, sol.weights, plan, layer, bias, p.cfg);
      lr.activate_seconds = seconds_since(t0);
      reads += cur->reads();
      store = std::move(next);
      cur = store.get();
    } else {
      reads += cur->reads();
    }
    net.weights.push_back(std::move(sol.weights));
    rep.layers.push_back(lr);
  }

  rep.total_seconds = seconds_since(t_total) + first_accumulate_s;
  rep.passes_per_sample = static_cast<double>(reads) / static_cast<double>(p.data.size());
  net.metadata.prng_id = std::string(kPrngId);
  net.metadata.train_fingerprint = p.data.fingerprint();
  net.metadata.trained_at = utc_now();
  if (report) *report = std::move(rep);
  return net;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw ValidationError("train config: gamma must be finite and >= 0");
  if (!(encoder_scale > 0) || !std::isfinite(encoder_scale)) {
    throw ValidationError("train config: encoder scale must be finite and positive");
  }
  if (workers < 1) throw ValidationError("train config: workers must be >= 1");
  if (shard_samples < 1) throw ValidationError("train config: shard size must be >= 1");
  if (batch_rows < 1) throw ValidationError("train config: batch rows must be >= 1");
}

GramAccumulator accumulate_conv_layer(const SampleSource& inputs, std::span<const std::uint32_t> labels,
                                      const LayerPlan& plan, const LabelEncoder& encoder, bool bias,
                                      const TrainConfig& cfg) {
  cfg.validate();
  if (plan.dense) throw ValidationError("accumulate_conv_layer: layer is dense");
  check_labels(inputs, labels, encoder.classes);
  check_dims(inputs, plan.in, "accumulate_conv_layer");
  const std::size_t positions = plan.conv.positions();
  const std::size_t j = plan.weight_cols;
  if (encoder.channels != j || encoder.positions != positions) {
    throw ShapeError("accumulate_conv_layer: encoder does not match the layer output");
  }

  // Per-class targets laid out like the layer output (positions x J).
  std::vector<Mat> targets;
  targets.reserve(encoder.classes);
  for (std::size_t k = 0; k < encoder.classes; ++k) targets.push_back(reshape_target(encoder.q.row(k), j, positions));

  const std::size_t width = plan.weight_rows;
  const std::size_t per_batch = batch_samples(cfg, positions, width);

  return sharded_accumulate(inputs.size(), width, j, cfg, [&](GramAccumulator& acc, std::size_t b, std::size_t e) {
    Mat x;
    Mat z;
    for (std::size_t s = b; s < e; s += per_batch) {
      const std::size_t n = std::min(per_batch, e - s);
      x.resize(n * positions, width);
      z.resize(n * positions, j);
      for (std::size_t i = 0; i < n; ++i) {
        const Tensor3 sample = inputs.get(s + i);
        conv_design_into(sample, plan, bias, x.data().subspan(i * positions * width, positions * width));
        const auto& t = targets[labels[s + i]].data();
        std::copy(t.begin(), t.end(), z.data().begin() + static_cast<std::ptrdiff_t>(i * positions * j));
      }
      acc.accumulate(x, z, n);
    }
  });
}

std::unique_ptr<ActivationStore> activate_conv_layer(const SampleSource& inputs, const Mat& weights,
                                                     const LayerPlan& plan, const ConvLayer& layer, bool bias,
                                                     const TrainConfig& cfg) {
  cfg.validate();
  check_dims(inputs, plan.in, "activate_conv_layer");
  if (weights.rows() != plan.weight_rows || weights.cols() != plan.weight_cols) {
    throw ShapeError("activate_conv_layer: weight shape does not match the layer");
  }
  auto store = ActivationStore::create(cfg.layer_cache, inputs.size(), plan.out, cfg.cache_dir);
  const Shards shards{inputs.size(), cfg.shard_samples};
  run_parallel(shards.number(), cfg.workers, [&](std::size_t s, std::size_t) {
    for (std::size_t i = shards.begin(s); i < shards.end(s); ++i) {
      store->put(i, conv_forward(inputs.get(i), weights, plan, layer, bias));
    }
  });
  return store;
}

ConvLayerResult train_layer_conv(const SampleSource& inputs, const Mat& onehot, const LayerPlan& plan,
                                 const ConvLayer& layer, bool bias, std::size_t layer_index, const TrainConfig& cfg) {
  cfg.validate();
  if (plan.dense) throw ValidationError("train_layer_conv: layer is dense");
  const auto labels = labels_of(onehot);
  ConvLayerResult out;
  out.report.layer = layer_index + 1;
  out.report.encoder_seed = derive_layer_seed(cfg.encoder_seed, layer_index);
  const auto enc = make_encoder(onehot.cols(), plan.conv_out.channels, plan.conv.positions(),
                                out.report.encoder_seed, cfg.encoder_scale);

  auto t0 = Clock::now();
  const auto acc = accumulate_conv_layer(inputs, labels, plan, enc, bias, cfg);
  out.report.accumulate_seconds = seconds_since(t0);

  t0 = Clock::now();
  auto sol = solve_layer_detailed(acc, cfg.gamma);
  out.report.solve_seconds = seconds_since(t0);
  fill_report(out.report, acc, sol);

  t0 = Clock::now();
  out.activations = activate_conv_layer(inputs, sol.weights, plan, layer, bias, cfg);
  out.report.activate_seconds = seconds_since(t0);
  out.weights = std::move(sol.weights);
  return out;
}

GramAccumulator accumulate_dense(const SampleSource& features, std::span<const std::uint32_t> labels,
                                 std::size_t classes, bool bias, const TrainConfig& cfg) {
  cfg.validate();
  check_labels(features, labels, classes);
  const std::size_t dim = features.dims().size();
  const std::size_t width = dim + (bias ? 1 : 0);
  const std::size_t per_batch = batch_samples(cfg, 1, width);

  return sharded_accumulate(features.size(), width, classes, cfg,
                            [&](GramAccumulator& acc, std::size_t b, std::size_t e) {
                              Mat x;
                              Mat z;
                              for (std::size_t s = b; s < e; s += per_batch) {
                                const std::size_t n = std::min(per_batch, e - s);
                                x.resize(n, width);
                                z.resize(n, classes);
                                z.fill(0);
                                for (std::size_t i = 0; i < n; ++i) {
                                  const Tensor3 f = features.get(s + i);
                                  if (f.data().size() != dim) throw ShapeError("accumulate_dense: feature size varies");
                                  auto row = x.row(i);
                                  std::copy(f.data().begin(), f.data().end(), row.begin());
                                  if (bias) row[dim] = 1;
                                  z(i, labels[s + i]) = 1;
                                }
                                acc.accumulate(x, z, n);
                              }
                            });
}

Mat train_final_mlp(const SampleSource& features, const Mat& onehot, double gamma, bool bias,
                    const TrainConfig& cfg) {
  const auto labels = labels_of(onehot);
  return solve_layer(accumulate_dense(features, labels, onehot.cols(), bias, cfg), gamma);
}

TrainedNetwork train_acnnl(const Dataset& data, const NetworkSpec& spec, const TrainConfig& cfg,
                           TrainReport* report) {
  cfg.validate();
  Pipeline p{data, effective_spec(spec, cfg, cfg.gamma), {}, cfg};
  p.plans = plan_network(p.spec);
  check_dataset(data, p.spec);
  return run_pipeline(p, nullptr, 0, report);
}

std::vector<TrainedNetwork> train_acnnl_sweep(const Dataset& data, const NetworkSpec& spec, const TrainConfig& cfg,
                                              std::span<const double> gammas, std::vector<TrainReport>* reports) {
  cfg.validate();
  if (gammas.empty()) throw ValidationError("gamma sweep: no gamma values");
  for (double g : gammas) {
    if (!(g >= 0) || !std::isfinite(g)) throw ValidationError("gamma sweep: gamma must be finite and >= 0");
  }
  Pipeline p{data, effective_spec(spec, cfg, gammas.front()), {}, cfg};
  p.plans = plan_network(p.spec);
  check_dataset(data, p.spec);

  GramAccumulator first;
  double first_s = 0;
  const bool shared = !p.plans.front().dense;
  if (shared) {
    const auto& plan = p.plans.front();
    const auto enc = make_encoder(p.spec.classes, plan.conv_out.channels, plan.conv.positions(),
                                  derive_layer_seed(cfg.encoder_seed, 0), cfg.encoder_scale);
    ImageSource images(data.images);
    const auto t0 = Clock::now();
    first = accumulate_conv_layer(images, data.labels, plan, enc, p.spec.append_bias, cfg);
    first_s = seconds_since(t0);
  }

  std::vector<TrainedNetwork> nets;
  if (reports) reports->clear();
  for (double g : gammas) {
    p.spec.gamma = g;
    TrainReport rep;
    nets.push_back(run_pipeline(p, shared ? &first : nullptr, first_s, &rep));
    if (reports) reports->push_back(std::move(rep));
  }
  return nets;
}

TrainedNetwork train_mlp_baseline(const Dataset& data, double gamma, const TrainConfig& cfg) {
  NetworkSpec spec;
  spec.input = data.dims();
  spec.classes = data.classes;
  spec.layers = {DenseLayer{data.classes}};
  TrainConfig c = cfg;
  c.gamma = gamma;
  return train_acnnl(data, spec, c);
}

Evaluation evaluate(const TrainedNetwork& net, const Dataset& data, std::size_t workers) {
  validate_network(net);
  if (workers < 1) throw ValidationError("evaluate: workers must be >= 1");
  const std::size_t k = net.spec.classes;
  if (data.classes > k) throw ValidationError("evaluate: dataset has more classes than the network");
  if (data.size() > 0 && !(data.dims() == net.spec.input)) {
    throw ShapeError("evaluate: dataset dims do not match the network input");
  }

  const Shards shards{data.size(), 256};
  using Counts = std::vector<std::vector<std::uint64_t>>;
  std::vector<Counts> partial(std::max<std::size_t>(1, std::min(workers, shards.number())),
                              Counts(k, std::vector<std::uint64_t>(k, 0)));
  run_parallel(shards.number(), workers, [&](std::size_t s, std::size_t w) {
    for (std::size_t i = shards.begin(s); i < shards.end(s); ++i) {
      ++partial[w][data.labels[i]][predict(net, data.images[i])];
    }
  });

  Evaluation ev;
  ev.confusion.assign(k, std::vector<std::uint64_t>(k, 0));
  for (const auto& c : partial)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) ev.confusion[a][b] += c[a][b];
  ev.total = data.size();
  ev.per_class.assign(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    std::uint64_t row = 0;
    for (auto v : ev.confusion[a]) row += v;
    ev.correct += ev.confusion[a][a];
    ev.per_class[a] = row == 0 ? 0 : static_cast<double>(ev.confusion[a][a]) / static_cast<double>(row);
  }
  ev.accuracy = ev.total == 0 ? 0 : static_cast<double>(ev.correct) / static_cast<double>(ev.total);
  return ev;
}

double small_sample_protocol(const Dataset& train, const Dataset& test, std::size_t n_c, std::uint64_t seed,
                             const NetworkSpec& spec, const TrainConfig& cfg) {
  const auto subset = subsample_per_class(train, n_c, seed);
  return evaluate(train_acnnl(subset, spec, cfg), test, cfg.workers).accuracy;
}

}  // namespace acnnl

#include "acnnl/network.hpp"

#include <cmath>
#include <string>

#include "acnnl/errors.hpp"

namespace acnnl {
namespace {

std::string fmt_dims(const InputDims& d) {
  return std::to_string(d.channels) + "x" + std::to_string(d.width) + "x" + std::to_string(d.height);
}

}  // namespace

std::vector<LayerPlan> plan_network(const NetworkSpec& spec) {
  if (spec.input.size() == 0) throw ShapeError("network: input dims must be non-zero");
  if (spec.classes == 0) throw ValidationError("network: class count must be positive");
  if (spec.layers.empty()) throw ValidationError("network: no layers");
  if (!(spec.gamma >= 0) || !std::isfinite(spec.gamma)) throw ValidationError("network: gamma must be >= 0");

  const std::size_t bias = spec.append_bias ? 1 : 0;
  std::vector<LayerPlan> plans;
  plans.reserve(spec.layers.size());
  InputDims cur = spec.input;

  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const bool last = l + 1 == spec.layers.size();
    LayerPlan plan;
    plan.in = cur;

    if (const auto* dense = std::get_if<DenseLayer>(&spec.layers[l])) {
      if (!last) throw ValidationError("network: the dense layer must be the last layer");
      if (dense->out_dim != spec.classes) {
        throw ValidationError("network: dense output " + std::to_string(dense->out_dim) + " != classes " +
                              std::to_string(spec.classes));
      }
      plan.dense = true;
      plan.out = {dense->out_dim, 1, 1};
      plan.rows_per_sample = 1;
      plan.weight_rows = cur.size() + bias;
      plan.weight_cols = dense->out_dim;
      plans.push_back(plan);
      break;
    }

    if (last) throw ValidationError("network: the last layer must be dense");
    const auto& conv = std::get<ConvLayer>(spec.layers[l]);
    if (conv.out_channels == 0) throw ShapeError("network: conv layer " + std::to_string(l + 1) + " has 0 channels");
    if (!std::isfinite(conv.slope)) throw ValidationError("network: non-finite activation slope");
    try {
      plan.conv = ConvGeometry::make(cur.channels, cur.width, cur.height, conv.kernel);
    } catch (const ShapeError&) {
      throw ShapeError("network: conv layer " + std::to_string(l + 1) + " kernel " + std::to_string(conv.kernel) +
                       " does not fit input " + fmt_dims(cur));
    }
    plan.conv_out = {conv.out_channels, plan.conv.out_width(), plan.conv.out_height()};
    plan.rows_per_sample = plan.conv.positions();
    plan.weight_rows = plan.conv.patch_size() + bias;
    plan.weight_cols = conv.out_channels;

    const std::size_t target_dim = conv.out_channels * plan.conv.positions();
    if (target_dim < spec.classes) {
      throw ValidationError("network: conv layer " + std::to_string(l + 1) + " output size " +
                            std::to_string(target_dim) + " is smaller than the class count");
    }

    plan.out = plan.conv_out;
    if (conv.pool > 0) {
      if (plan.out.width % conv.pool != 0 || plan.out.height % conv.pool != 0) {
        throw ShapeError("network: conv layer " + std::to_string(l + 1) + " output " + fmt_dims(plan.out) +
                         " is not divisible by pool " + std::to_string(conv.pool));
      }
      plan.out.width /= conv.pool;
      plan.out.height /= conv.pool;
    }
    cur = plan.out;
    plans.push_back(plan);
  }
  return plans;
}

NetworkSpec build_cnn5(std::size_t c, InputDims input, std::size_t classes, std::size_t depth) {
  if (depth < 2 || depth > 5) throw ValidationError("build_cnn5: depth must be in [2, 5]");
  if (c == 0) throw ValidationError("build_cnn5: channel parameter must be positive");

  constexpr std::size_t kernels[] = {5, 3, 3, 3};
  constexpr std::size_t multipliers[] = {1, 2, 4, 4};
  constexpr std::size_t pools[] = {2, 2, 0, 0};

  NetworkSpec spec;
  spec.input = input;
  spec.classes = classes;
  const std::size_t convs = depth - 1;
  for (std::size_t l = 0; l < convs; ++l) {
    const bool followed_by_conv = l + 1 < convs;
    spec.layers.emplace_back(ConvLayer{kernels[l], multipliers[l] * c, 0.1, followed_by_conv ? pools[l] : 0});
  }
  spec.layers.emplace_back(DenseLayer{classes});
  plan_network(spec);
  return spec;
}

Tensor3 avg_pool(const Tensor3& x, std::size_t p) {
  if (p == 0 || x.width() % p != 0 || x.height() % p != 0) {
    throw ShapeError("avg_pool: " + std::to_string(x.width()) + "x" + std::to_string(x.height()) +
                     " is not divisible by " + std::to_string(p));
  }
  const std::size_t ow = x.width() / p;
  const std::size_t oh = x.height() / p;
  const Real inv = Real{1} / static_cast<Real>(p * p);
  Tensor3 out(x.channels(), ow, oh);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t w = 0; w < ow; ++w)
      for (std::size_t h = 0; h < oh; ++h) {
        Real sum = 0;
        for (std::size_t a = 0; a < p; ++a)
          for (std::size_t b = 0; b < p; ++b) sum += x(c, w * p + a, h * p + b);
        out(c, w, h) = sum * inv;
      }
  return out;
}

void validate_network(const TrainedNetwork& net) {
  const auto plans = plan_network(net.spec);
  if (net.weights.size() != plans.size()) {
    throw ShapeError("network: " + std::to_string(net.weights.size()) + " weight matrices for " +
                     std::to_string(plans.size()) + " layers");
  }
  for (std::size_t l = 0; l < plans.size(); ++l) {
    const auto& w = net.weights[l];
    if (w.rows() != plans[l].weight_rows || w.cols() != plans[l].weight_cols) {
      throw ShapeError("network: layer " + std::to_string(l + 1) + " weight is " + std::to_string(w.rows()) + "x" +
                       std::to_string(w.cols()) + ", expected " + std::to_string(plans[l].weight_rows) + "x" +
                       std::to_string(plans[l].weight_cols));
    }
  }
}

void conv_design_into(const Tensor3& x, const LayerPlan& plan, bool bias, std::span<Real> out) {
  im2col_into(x, plan.conv, out, plan.weight_rows);
  if (bias) {
    for (std::size_t p = 0; p < plan.conv.positions(); ++p) out[p * plan.weight_rows + plan.weight_rows - 1] = 1;
  }
}

Mat conv_response(const Tensor3& x, const Mat& w, const LayerPlan& plan, bool bias) {
  if (w.rows() != plan.weight_rows) throw ShapeError("conv_response: weight rows do not match layer");
  Mat design(plan.conv.positions(), plan.weight_rows);
  conv_design_into(x, plan, bias, design.data());
  return matmul(design, w);
}

Tensor3 conv_forward(const Tensor3& x, const Mat& w, const LayerPlan& plan, const ConvLayer& layer, bool bias) {
  Mat response = conv_response(x, w, plan, bias);
  for (Real& v : response.data()) v = leaky_relu(v, layer.slope);
  Tensor3 fmap = col2im(response, plan.conv);
  return layer.pool > 0 ? avg_pool(fmap, layer.pool) : fmap;
}

std::vector<Real> dense_forward(std::span<const Real> features, const Mat& w, bool bias) {
  const std::size_t n = features.size() + (bias ? 1 : 0);
  if (w.rows() != n) throw ShapeError("dense_forward: feature length does not match weight rows");
  std::vector<Real> logits(w.cols(), Real{0});
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Real f = features[i];
    const auto r = w.row(i);
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += f * r[k];
  }
  if (bias) {
    const auto r = w.row(n - 1);
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += r[k];
  }
  return logits;
}

std::vector<Real> forward(const TrainedNetwork& net, const Tensor3& x) {
  const auto plans = plan_network(net.spec);
  if (net.weights.size() != plans.size()) throw ShapeError("forward: weight count does not match layers");
  const InputDims in{x.channels(), x.width(), x.height()};
  if (!(in == net.spec.input)) {
    throw ShapeError("forward: input is " + fmt_dims(in) + ", network expects " + fmt_dims(net.spec.input));
  }

  Tensor3 cur = x;
  for (std::size_t l = 0; l + 1 < plans.size(); ++l) {
    cur = conv_forward(cur, net.weights[l], plans[l], std::get<ConvLayer>(net.spec.layers[l]), net.spec.append_bias);
  }
  return dense_forward(cur.data(), net.weights.back(), net.spec.append_bias);
}

std::size_t argmax(std::span<const Real> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t predict(const TrainedNetwork& net, const Tensor3& x) { return argmax(forward(net, x)); }

}  // namespace acnnl

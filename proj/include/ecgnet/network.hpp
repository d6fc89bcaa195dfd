#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ecgnet/errors.hpp"
#include "ecgnet/layers.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet::nn {

struct Conv2dSpec {
  int out_channels;
  int kernel_h, kernel_w;
  int pad_h, pad_w;
  int stride_h, stride_w;
};

struct MaxPoolSpec {
  int kernel_h, kernel_w;
  int stride_h, stride_w;
};

struct ReluSpec {};

struct FullyConnectedSpec {
  int out_features;
};

using LayerSpec = std::variant<Conv2dSpec, MaxPoolSpec, ReluSpec, FullyConnectedSpec>;

struct NetworkSpec {
  std::array<int, 3> input_dims{1, 32, 4};  // [C, H, W]
  std::vector<LayerSpec> layers;
  int num_classes = 20;
  // canonical preset string ("h1".."h6", "baseline_1d", "deep6:classes=N");
  // empty for hand-built specs
  std::string descriptor;
};

// Per-layer output dims, [C,H,W] with FC reported as [N,1,1].
inline std::vector<std::array<int, 3>> infer_shapes(const NetworkSpec& spec) {
  std::vector<std::array<int, 3>> out;
  std::array<int, 3> cur = spec.input_dims;
  int layer_idx = 0;
  for (const auto& layer : spec.layers) {
    try {
      if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
        cur = {c->out_channels, conv_out_extent(cur[1], c->pad_h, c->kernel_h, c->stride_h),
               conv_out_extent(cur[2], c->pad_w, c->kernel_w, c->stride_w)};
      } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
        cur = {cur[0], pool_out_extent(cur[1], p->kernel_h, p->stride_h),
               pool_out_extent(cur[2], p->kernel_w, p->stride_w)};
      } else if (std::get_if<ReluSpec>(&layer)) {
        // shape preserved
      } else if (const auto* f = std::get_if<FullyConnectedSpec>(&layer)) {
        cur = {f->out_features, 1, 1};
      }
    } catch (const ShapeMismatch& e) {
      throw ShapeMismatch("layer " + std::to_string(layer_idx) + ": " + e.what());
    }
    out.push_back(cur);
    ++layer_idx;
  }
  if (!out.empty() && out.back()[0] != spec.num_classes)
    throw ShapeMismatch("final layer emits " + std::to_string(out.back()[0]) +
                        " values, expected " + std::to_string(spec.num_classes));
  return out;
}

// Bias-free weight count: conv outC*inC*kh*kw, fc out*in.
inline long long count_params(const NetworkSpec& spec) {
  long long total = 0;
  std::array<int, 3> cur = spec.input_dims;
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
      total += static_cast<long long>(c->out_channels) * cur[0] * c->kernel_h * c->kernel_w;
      cur = {c->out_channels, conv_out_extent(cur[1], c->pad_h, c->kernel_h, c->stride_h),
             conv_out_extent(cur[2], c->pad_w, c->kernel_w, c->stride_w)};
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      cur = {cur[0], pool_out_extent(cur[1], p->kernel_h, p->stride_h),
             pool_out_extent(cur[2], p->kernel_w, p->stride_w)};
    } else if (const auto* f = std::get_if<FullyConnectedSpec>(&layer)) {
      total += static_cast<long long>(f->out_features) * cur[0] * cur[1] * cur[2];
      cur = {f->out_features, 1, 1};
    }
  }
  return total;
}

// Multiply-accumulate count: conv outC*outH*outW*inC*kh*kw, fc out*in.
// Pools and activations excluded.
inline long long count_flops(const NetworkSpec& spec) {
  long long total = 0;
  std::array<int, 3> cur = spec.input_dims;
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
      const int ho = conv_out_extent(cur[1], c->pad_h, c->kernel_h, c->stride_h);
      const int wo = conv_out_extent(cur[2], c->pad_w, c->kernel_w, c->stride_w);
      total += static_cast<long long>(c->out_channels) * ho * wo * cur[0] * c->kernel_h *
               c->kernel_w;
      cur = {c->out_channels, ho, wo};
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      cur = {cur[0], pool_out_extent(cur[1], p->kernel_h, p->stride_h),
             pool_out_extent(cur[2], p->kernel_w, p->stride_w)};
    } else if (const auto* f = std::get_if<FullyConnectedSpec>(&layer)) {
      total += static_cast<long long>(f->out_features) * cur[0] * cur[1] * cur[2];
      cur = {f->out_features, 1, 1};
    }
  }
  return total;
}

// ---- presets ----------------------------------------------------------------

// Scale-specific model h_s: the pool1 time stride is 2^{s-1} so the first
// fully-connected layer always sees 32x2x2 regardless of input width.
inline NetworkSpec build_h_level(int level, int num_classes = 20) {
  if (level < 1 || level > 6) throw InvalidLevel("h level must be in 1..6");
  const int a = 1 << (level - 1);
  NetworkSpec spec;
  spec.input_dims = {1, 32, 4 * a};
  spec.num_classes = num_classes;
  spec.layers = {
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      MaxPoolSpec{4, a, 4, a},
      ReluSpec{},
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      MaxPoolSpec{4, 2, 4, 2},
      ReluSpec{},
      FullyConnectedSpec{64},
      FullyConnectedSpec{num_classes},
  };
  spec.descriptor = "h" + std::to_string(level);
  if (num_classes != 20) spec.descriptor += ":classes=" + std::to_string(num_classes);
  return spec;
}

// 1-D reference network realized as height-1 2-D layers.
inline NetworkSpec build_baseline_1d() {
  NetworkSpec spec;
  spec.input_dims = {1, 1, 512};
  spec.num_classes = 20;
  spec.layers = {
      Conv2dSpec{32, 1, 15, 0, 7, 1, 6},
      ReluSpec{},
      Conv2dSpec{16, 1, 15, 0, 7, 1, 6},
      ReluSpec{},
      Conv2dSpec{16, 1, 15, 0, 7, 1, 6},
      MaxPoolSpec{1, 3, 1, 1},
      FullyConnectedSpec{10},
      FullyConnectedSpec{20},
  };
  spec.descriptor = "baseline_1d";
  return spec;
}

// Level-6 model with one extra identical conv after each of the two convs.
inline NetworkSpec build_deep_variant(int num_classes) {
  NetworkSpec spec;
  const int a = 32;  // level 6
  spec.input_dims = {1, 32, 4 * a};
  spec.num_classes = num_classes;
  spec.layers = {
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      MaxPoolSpec{4, a, 4, a},
      ReluSpec{},
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      Conv2dSpec{32, 3, 3, 1, 1, 1, 1},
      MaxPoolSpec{4, 2, 4, 2},
      ReluSpec{},
      FullyConnectedSpec{64},
      FullyConnectedSpec{num_classes},
  };
  spec.descriptor = "deep6:classes=" + std::to_string(num_classes);
  return spec;
}

inline NetworkSpec build_preset(const std::string& name) {
  std::string base = name;
  int classes = -1;
  if (const auto pos = name.find(":classes="); pos != std::string::npos) {
    base = name.substr(0, pos);
    classes = std::stoi(name.substr(pos + 9));
  }
  if (base.size() == 2 && base[0] == 'h' && base[1] >= '1' && base[1] <= '6') {
    return build_h_level(base[1] - '0', classes > 0 ? classes : 20);
  }
  if (base == "baseline_1d") return build_baseline_1d();
  if (base == "deep6") return build_deep_variant(classes > 0 ? classes : 4);
  throw InvalidLevel("unknown preset '" + name + "'");
}

// ---- model ------------------------------------------------------------------

// Shapes of the learnable tensors in layer order.
inline std::vector<std::vector<int>> param_shapes(const NetworkSpec& spec) {
  std::vector<std::vector<int>> shapes;
  std::array<int, 3> cur = spec.input_dims;
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
      shapes.push_back({c->out_channels, cur[0], c->kernel_h, c->kernel_w});
      cur = {c->out_channels, conv_out_extent(cur[1], c->pad_h, c->kernel_h, c->stride_h),
             conv_out_extent(cur[2], c->pad_w, c->kernel_w, c->stride_w)};
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      cur = {cur[0], pool_out_extent(cur[1], p->kernel_h, p->stride_h),
             pool_out_extent(cur[2], p->kernel_w, p->stride_w)};
    } else if (const auto* f = std::get_if<FullyConnectedSpec>(&layer)) {
      shapes.push_back({f->out_features, cur[0] * cur[1] * cur[2]});
      cur = {f->out_features, 1, 1};
    }
  }
  return shapes;
}

template <typename T>
struct Model {
  NetworkSpec spec;
  std::vector<Tensor<T>> params;

  template <typename U>
  Model<U> cast() const {
    Model<U> out;
    out.spec = spec;
    for (const auto& p : params) out.params.push_back(p.template cast<U>());
    return out;
  }
};

// Uniform init on [-b, b] with b = sqrt(6 / fan_in), splitmix64-seeded.
template <typename T>
Model<T> init_model(const NetworkSpec& spec, std::uint64_t seed) {
  infer_shapes(spec);  // validate
  Model<T> m;
  m.spec = spec;
  SplitMix64 rng(seed);
  for (const auto& shape : param_shapes(spec)) {
    Tensor<T> t(shape);
    long long fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    const double b = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-b, b));
    m.params.push_back(std::move(t));
  }
  return m;
}

template <typename T>
Model<T> zero_model(const NetworkSpec& spec) {
  infer_shapes(spec);
  Model<T> m;
  m.spec = spec;
  for (const auto& shape : param_shapes(spec)) m.params.emplace_back(shape);
  return m;
}

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> inputs;          // input to each layer
  std::vector<std::vector<int>> argmax;   // per layer; empty unless maxpool
  std::vector<T> logits;
  std::vector<T> probs;
  Tensor<T> penultimate;                  // input to the final FC
};

template <typename T>
std::vector<T> forward(const Model<T>& model, const Tensor<T>& input,
                       ForwardCache<T>* cache = nullptr) {
  Tensor<T> cur = input;
  std::size_t param_idx = 0;
  const std::size_t n_layers = model.spec.layers.size();
  if (cache) {
    cache->inputs.clear();
    cache->argmax.assign(n_layers, {});
  }
  for (std::size_t li = 0; li < n_layers; ++li) {
    const auto& layer = model.spec.layers[li];
    if (cache) cache->inputs.push_back(cur);
    if (cache && li + 1 == n_layers) cache->penultimate = cur;
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
      cur = conv2d_forward(cur, model.params[param_idx], c->pad_h, c->pad_w, c->stride_h,
                           c->stride_w);
      ++param_idx;
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      auto [y, arg] = maxpool_forward(cur, p->kernel_h, p->kernel_w, p->stride_h, p->stride_w);
      cur = std::move(y);
      if (cache) cache->argmax[li] = std::move(arg);
    } else if (std::get_if<ReluSpec>(&layer)) {
      cur = relu_forward(cur);
    } else {
      cur = fc_forward(cur, model.params[param_idx]);
      ++param_idx;
    }
  }
  std::vector<T> logits(cur.data.begin(), cur.data.end());
  auto probs = softmax(logits);
  if (cache) {
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return probs;
}

// grad_logits is the loss gradient wrt the pre-softmax outputs.
// Accumulates parameter gradients into grads (shape-matched, pre-zeroed or
// carrying a previous sample's sums).
template <typename T>
void backward(const Model<T>& model, const ForwardCache<T>& cache,
              const std::vector<T>& grad_logits, std::vector<Tensor<T>>& grads) {
  if (grads.size() != model.params.size()) throw ShapeMismatch("grads count");
  const auto n_layers = static_cast<int>(model.spec.layers.size());
  Tensor<T> g({static_cast<int>(grad_logits.size())},
              std::vector<T>(grad_logits.begin(), grad_logits.end()));
  std::size_t param_idx = model.params.size();
  for (int li = n_layers - 1; li >= 0; --li) {
    const auto& layer = model.spec.layers[static_cast<std::size_t>(li)];
    const auto& x = cache.inputs[static_cast<std::size_t>(li)];
    if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
      --param_idx;
      // grad may arrive flattened from an FC above
      Tensor<T> go = g;
      const auto& w = model.params[param_idx];
      const int ho = conv_out_extent(x.dims[1], c->pad_h, c->kernel_h, c->stride_h);
      const int wo = conv_out_extent(x.dims[2], c->pad_w, c->kernel_w, c->stride_w);
      go.dims = {c->out_channels, ho, wo};
      auto [gx, gw] = conv2d_backward(x, w, go, c->pad_h, c->pad_w, c->stride_h, c->stride_w);
      for (std::size_t i = 0; i < gw.data.size(); ++i) grads[param_idx].data[i] += gw.data[i];
      g = std::move(gx);
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      Tensor<T> go = g;
      go.dims = {x.dims[0], pool_out_extent(x.dims[1], p->kernel_h, p->stride_h),
                 pool_out_extent(x.dims[2], p->kernel_w, p->stride_w)};
      g = maxpool_backward(cache.argmax[static_cast<std::size_t>(li)], go, x.dims);
    } else if (std::get_if<ReluSpec>(&layer)) {
      Tensor<T> go = g;
      go.dims = x.dims;
      g = relu_backward(x, go);
    } else {
      --param_idx;
      auto [gx, gw] = fc_backward(x, model.params[param_idx], g);
      for (std::size_t i = 0; i < gw.data.size(); ++i) grads[param_idx].data[i] += gw.data[i];
      g = std::move(gx);
    }
  }
}

}  // namespace ecgnet::nn

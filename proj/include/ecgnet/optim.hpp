#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ecgnet/dsp.hpp"
#include "ecgnet/errors.hpp"
#include "ecgnet/network.hpp"
#include "ecgnet/rng.hpp"

namespace ecgnet::optim {

struct TrainConfig {
  int batch_size = 128;
  int total_iters = 20000;
  double lr0 = 0.01;
  int lr_halve_every = 5000;
  double lr_floor = 6.25e-4;
  double momentum = 0.9;
  double weight_decay = 5e-6;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Loss and combined softmax/cross-entropy gradient wrt logits (p - onehot).
template <typename T>
std::pair<double, std::vector<T>> cross_entropy(const std::vector<T>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw LabelOutOfRange("label " + std::to_string(label));
  const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(label)]), 1e-12);
  std::vector<T> grad(probs.begin(), probs.end());
  grad[static_cast<std::size_t>(label)] -= T(1);
  return {-std::log(p), std::move(grad)};
}

// Step schedule: the rate halves after each lr_halve_every-iteration block and
// is clamped below at lr_floor. With the defaults the last iteration of a
// 20,000-iteration run uses lr0 / 16 = 6.25e-4.
inline double lr_at(long long t, const TrainConfig& cfg) {
  const long long halvings = (t + 1) / cfg.lr_halve_every;
  return std::max(cfg.lr_floor, cfg.lr0 * std::pow(2.0, -static_cast<double>(halvings)));
}

template <typename T>
struct MomentumState {
  std::vector<Tensor<T>> velocity;

  static MomentumState zeros_like(const nn::Model<T>& model) {
    MomentumState st;
    for (const auto& p : model.params) st.velocity.emplace_back(p.dims);
    return st;
  }
};

// g' = g + weight_decay * theta; v <- momentum * v - lr * g'; theta <- theta + v
template <typename T>
void sgd_momentum_step(nn::Model<T>& model, const std::vector<Tensor<T>>& grads,
                       MomentumState<T>& state, long long t, const TrainConfig& cfg) {
  if (grads.size() != model.params.size() || state.velocity.size() != model.params.size())
    throw ShapeMismatch("optimizer tensor count");
  const double lr = lr_at(t, cfg);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    auto& theta = model.params[i];
    const auto& g = grads[i];
    auto& v = state.velocity[i];
    if (!g.same_shape(theta)) throw ShapeMismatch("gradient shape");
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double gk = static_cast<double>(g.data[k]);
      if (!std::isfinite(gk)) throw NonFiniteGradient("at tensor " + std::to_string(i));
      const double gp = gk + cfg.weight_decay * static_cast<double>(theta.data[k]);
      const double vk = cfg.momentum * static_cast<double>(v.data[k]) - lr * gp;
      v.data[k] = static_cast<T>(vk);
      theta.data[k] = static_cast<T>(static_cast<double>(theta.data[k]) + vk);
    }
  }
}

struct TrainHistory {
  std::vector<double> loss;  // per iteration
  std::vector<double> lr;
  std::vector<std::pair<long long, double>> eval_acc;  // (iter, accuracy)

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    os << "iter,loss,lr\n";
    for (std::size_t i = 0; i < loss.size(); ++i)
      os << i << "," << loss[i] << "," << lr[i] << "\n";
  }
};

struct TrainSample {
  Tensor<float> input;
  int label;
};

namespace detail {

// Per-sample gradients are computed independently (possibly in parallel) and
// reduced in sample-index order, so the sum is identical for any thread count.
inline void batch_grads(const nn::Model<float>& model,
                        const std::vector<const TrainSample*>& batch,
                        std::vector<Tensor<float>>& grads, double& mean_loss, int threads) {
  const std::size_t B = batch.size();
  std::vector<std::vector<Tensor<float>>> per_sample(B);
  std::vector<double> losses(B, 0.0);

  auto work = [&](std::size_t i) {
    nn::ForwardCache<float> cache;
    auto probs = nn::forward(model, batch[i]->input, &cache);
    auto [loss, grad_logits] = cross_entropy(probs, batch[i]->label);
    losses[i] = loss;
    auto& g = per_sample[i];
    for (const auto& p : model.params) g.emplace_back(p.dims);
    nn::backward(model, cache, grad_logits, g);
  };

  if (threads <= 1 || B < 2) {
    for (std::size_t i = 0; i < B; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), B));
    for (int tix = 0; tix < n_threads; ++tix) {
      pool.emplace_back([&, tix]() {
        for (std::size_t i = static_cast<std::size_t>(tix); i < B;
             i += static_cast<std::size_t>(n_threads))
          work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  const float inv_b = 1.0f / static_cast<float>(B);
  for (std::size_t pi = 0; pi < grads.size(); ++pi) {
    auto& acc = grads[pi].data;
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t i = 0; i < B; ++i) {
      const auto& src = per_sample[i][pi].data;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += src[k];
    }
    for (auto& v : acc) v *= inv_b;
  }
  mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(B);
}

}  // namespace detail

// Mini-batch SGD training. Batches are drawn by seeded epoch shuffling without
// replacement; results are bit-identical across runs with the same seed.
inline std::pair<nn::Model<float>, TrainHistory> train(const nn::NetworkSpec& spec,
                                                       const std::vector<TrainSample>& samples,
                                                       const TrainConfig& cfg) {
  if (samples.empty()) throw EmptyDataset("train on empty sample set");
  auto model = nn::init_model<float>(spec, cfg.seed);
  if (cfg.total_iters <= 0) return {std::move(model), TrainHistory{}};

  auto state = MomentumState<float>::zeros_like(model);
  std::vector<Tensor<float>> grads;
  for (const auto& p : model.params) grads.emplace_back(p.dims);

  TrainHistory hist;
  hist.loss.reserve(static_cast<std::size_t>(cfg.total_iters));
  hist.lr.reserve(static_cast<std::size_t>(cfg.total_iters));

  SplitMix64 shuffle_rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::size_t cursor = order.size();  // force shuffle on first use

  std::vector<const TrainSample*> batch;
  for (long long t = 0; t < cfg.total_iters; ++t) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        // Fisher-Yates reshuffle at each epoch boundary
        for (std::size_t i = order.size(); i > 1; --i) {
          const std::size_t j = shuffle_rng.uniform_int(i);
          std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
      }
      batch.push_back(&samples[order[cursor++]]);
    }
    double mean_loss = 0.0;
    detail::batch_grads(model, batch, grads, mean_loss, cfg.threads);
    if (!std::isfinite(mean_loss)) throw DivergenceDetected("loss at iter " + std::to_string(t));
    hist.loss.push_back(mean_loss);
    hist.lr.push_back(lr_at(t, cfg));
    sgd_momentum_step(model, grads, state, t, cfg);
  }
  return {std::move(model), std::move(hist)};
}

// Full-network gradient check in double precision: analytic gradients against
// central finite differences (eps = 1e-5) on a seeded random subset of
// coordinates per tensor. Returns the max relative error.
inline double grad_check(const nn::NetworkSpec& spec, std::uint64_t seed,
                         int coords_per_tensor = 24) {
  auto model = nn::init_model<double>(spec, seed);
  SplitMix64 rng(seed ^ 0x1234567ULL);
  Tensor<double> input({spec.input_dims[0], spec.input_dims[1], spec.input_dims[2]});
  nn::ForwardCache<double> cache;
  std::vector<double> probs;
  int label = 0;
  // Redraw instances whose label probability sits inside the cross-entropy
  // clamp region: there the loss is flat while the analytic gradient is not,
  // so finite differences cannot say anything useful.
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (auto& v : input.data) v = rng.normal();
    label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_classes)));
    probs = nn::forward(model, input, &cache);
    if (probs[static_cast<std::size_t>(label)] > 1e-6) break;
  }
  auto [loss0, grad_logits] = cross_entropy(probs, label);
  (void)loss0;
  std::vector<Tensor<double>> grads;
  for (const auto& p : model.params) grads.emplace_back(p.dims);
  nn::backward(model, cache, grad_logits, grads);

  const double eps = 1e-5;
  auto loss_at = [&]() {
    auto p = nn::forward(model, input);
    return cross_entropy(p, label).first;
  };

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < model.params.size(); ++pi) {
    auto& data = model.params[pi].data;
    const int n_coords = std::min<int>(coords_per_tensor, static_cast<int>(data.size()));
    for (int c = 0; c < n_coords; ++c) {
      const std::size_t k = static_cast<std::size_t>(rng.uniform_int(data.size()));
      const double orig = data[k];
      data[k] = orig + eps;
      const double lp = loss_at();
      data[k] = orig - eps;
      const double lm = loss_at();
      const double numeric = (lp - lm) / (2.0 * eps);
      // Half-step estimate to detect nonsmooth points (max-pool argmax flips,
      // relu kinks): where the two disagree, finite differences are invalid
      // and the coordinate is skipped rather than scored.
      data[k] = orig + 0.5 * eps;
      const double lp2 = loss_at();
      data[k] = orig - 0.5 * eps;
      const double lm2 = loss_at();
      data[k] = orig;
      const double numeric2 = (lp2 - lm2) / eps;
      if (std::abs(numeric - numeric2) >
          1e-2 * std::max({std::abs(numeric), std::abs(numeric2), 1e-4}))
        continue;
      const double analytic = grads[pi].data[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
      max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
    }
  }
  return max_rel;
}

}  // namespace ecgnet::optim

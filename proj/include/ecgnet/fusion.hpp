#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgnet/dataset.hpp"
#include "ecgnet/dsp.hpp"
#include "ecgnet/errors.hpp"
#include "ecgnet/network.hpp"
#include "ecgnet/rng.hpp"

namespace ecgnet::fusion {

enum class WeightScheme { Uniform, Geometric };

inline const char* scheme_name(WeightScheme s) {
  return s == WeightScheme::Uniform ? "uniform" : "geometric";
}

struct FusionWeights {
  WeightScheme scheme = WeightScheme::Uniform;
  int s_l = 1;
  std::vector<double> w;  // length s_l, sums to 1
};

// Uniform: w_s = 1/s_l. Geometric: w_s = 2^{s-1} / (2^{s_l} - 1), favouring
// the higher-level models.
inline FusionWeights fusion_weights(int s_l, WeightScheme scheme) {
  if (s_l < 1 || s_l > 6) throw InvalidLevel("s_l must be in 1..6");
  FusionWeights fw;
  fw.scheme = scheme;
  fw.s_l = s_l;
  fw.w.resize(static_cast<std::size_t>(s_l));
  if (scheme == WeightScheme::Uniform) {
    for (auto& v : fw.w) v = 1.0 / s_l;
  } else {
    const double denom = static_cast<double>((1LL << s_l) - 1);
    for (int s = 1; s <= s_l; ++s)
      fw.w[static_cast<std::size_t>(s - 1)] = static_cast<double>(1LL << (s - 1)) / denom;
  }
  return fw;
}

// per_scale_probs[s-1] holds the k_s = 2^{s_l - s} per-segment probability
// vectors of level s. Result is sum_s w_s * (1/k_s) sum_k p_sk.
inline std::vector<double> fuse(const std::vector<std::vector<std::vector<double>>>& per_scale_probs,
                                const FusionWeights& weights) {
  const int s_l = weights.s_l;
  if (per_scale_probs.size() != static_cast<std::size_t>(s_l))
    throw SegmentCountMismatch("expected " + std::to_string(s_l) + " levels");
  std::size_t C = 0;
  for (int s = 1; s <= s_l; ++s) {
    const auto& level = per_scale_probs[static_cast<std::size_t>(s - 1)];
    const std::size_t k_s = static_cast<std::size_t>(1) << (s_l - s);
    if (level.size() != k_s)
      throw SegmentCountMismatch("level " + std::to_string(s) + ": expected " +
                                 std::to_string(k_s) + " segments, got " +
                                 std::to_string(level.size()));
    for (const auto& p : level) {
      if (C == 0) C = p.size();
      if (p.size() != C) throw SegmentCountMismatch("class count varies across inputs");
      double sum = 0.0;
      for (double v : p) {
        if (v < -1e-9) throw NotOnSimplex("negative probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) throw NotOnSimplex("probabilities sum to " + std::to_string(sum));
    }
  }
  std::vector<double> out(C, 0.0);
  for (int s = 1; s <= s_l; ++s) {
    const auto& level = per_scale_probs[static_cast<std::size_t>(s - 1)];
    const double coeff = weights.w[static_cast<std::size_t>(s - 1)] /
                         static_cast<double>(level.size());
    for (const auto& p : level)
      for (std::size_t c = 0; c < C; ++c) out[c] += coeff * p[c];
  }
  return out;
}

// lowest index wins exact ties
inline int argmax_class(const std::vector<double>& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

struct ScaleBank {
  std::vector<nn::Model<float>> models;  // index s-1 holds h_s
  int base_len = data::kBaseLen;
  int num_classes = 20;
};

struct ProgressiveDecision {
  int level;                   // s_l used for this decision
  std::vector<double> probs;   // fused probability vector
  int predicted;               // argmax class
};

// Streams through the record: at each level L the length-(base_len * 2^{L-1})
// prefix is segmented and models h_1..h_L are fused with weights for s_l = L.
inline std::vector<ProgressiveDecision> predict_progressive(const ScaleBank& bank,
                                                            const data::EcgRecord& record,
                                                            WeightScheme scheme,
                                                            const dsp::StftConfig& cfg = {}) {
  const auto seg_full = data::segment(record, bank.base_len);
  const int s_l = seg_full.max_level;
  if (bank.models.size() < static_cast<std::size_t>(s_l))
    throw InvalidLevel("bank holds " + std::to_string(bank.models.size()) +
                       " models, record needs " + std::to_string(s_l));

  std::vector<ProgressiveDecision> out;
  for (int L = 1; L <= s_l; ++L) {
    data::EcgRecord prefix;
    prefix.sample_rate_hz = record.sample_rate_hz;
    prefix.label = record.label;
    const std::size_t plen = static_cast<std::size_t>(bank.base_len) << (L - 1);
    prefix.samples.assign(record.samples.begin(),
                          record.samples.begin() + static_cast<std::ptrdiff_t>(plen));
    const auto seg = data::segment(prefix, bank.base_len);

    std::vector<std::vector<std::vector<double>>> per_scale;
    for (int s = 1; s <= L; ++s) {
      std::vector<std::vector<double>> level_probs;
      for (const auto& piece : seg.per_level[static_cast<std::size_t>(s - 1)]) {
        const auto input = dsp::preprocess<float>(piece.samples, piece.sample_rate_hz, s, cfg);
        const auto p = nn::forward(bank.models[static_cast<std::size_t>(s - 1)], input);
        level_probs.emplace_back(p.begin(), p.end());
      }
      per_scale.push_back(std::move(level_probs));
    }
    const auto fused = fuse(per_scale, fusion_weights(L, scheme));
    out.push_back({L, fused, argmax_class(fused)});
  }
  return out;
}

// Closed-form fused-variance multiplier of sigma under sigma_s = sigma / k_s.
inline double variance_factor(int s_l, WeightScheme scheme) {
  if (s_l < 1 || s_l > 6) throw InvalidLevel("s_l must be in 1..6");
  const double p2sl = std::pow(2.0, 2 * s_l);
  if (scheme == WeightScheme::Uniform) {
    return (std::pow(2.0, 2 * s_l + 2) - 4.0) /
           (p2sl * static_cast<double>(s_l) * static_cast<double>(s_l) * 3.0);
  }
  const double d = std::pow(2.0, s_l) - 1.0;
  return (std::pow(2.0, 4 * s_l + 2) - 4.0) / (p2sl * d * d * 15.0);
}

struct MonteCarloResult {
  double mean = 0.0;
  double variance = 0.0;
};

// Samples independent per-scale, per-segment decisions with common mean mu and
// variance sigma / k_s, fuses each trial, and reports the empirical mean and
// variance of the fused scalar.
inline MonteCarloResult variance_monte_carlo(int s_l, WeightScheme scheme, double sigma,
                                             long long trials, std::uint64_t seed,
                                             double mu = 0.0) {
  if (s_l < 1 || s_l > 6) throw InvalidLevel("s_l must be in 1..6");
  const auto fw = fusion_weights(s_l, scheme);
  SplitMix64 rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (long long t = 0; t < trials; ++t) {
    double fused = 0.0;
    for (int s = 1; s <= s_l; ++s) {
      const int k_s = 1 << (s_l - s);
      const double sd = std::sqrt(sigma / static_cast<double>(k_s));
      double level_mean = 0.0;
      for (int k = 0; k < k_s; ++k) level_mean += mu + sd * rng.normal();
      level_mean /= static_cast<double>(k_s);
      fused += fw.w[static_cast<std::size_t>(s - 1)] * level_mean;
    }
    sum += fused;
    sum_sq += fused * fused;
  }
  MonteCarloResult r;
  r.mean = sum / static_cast<double>(trials);
  r.variance = sum_sq / static_cast<double>(trials) - r.mean * r.mean;
  return r;
}

}  // namespace ecgnet::fusion

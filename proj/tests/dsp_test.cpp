#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "ecgnet/dsp.hpp"
#include "ecgnet/rng.hpp"

using namespace ecgnet;
using namespace ecgnet::dsp;

namespace {

// Independent oracle: naive O(N^2) per-frame windowed DFT with the same
// padding and absolute-index phase convention.
ComplexGrid stft_oracle(const std::vector<double>& x, const StftConfig& cfg) {
  const int L = cfg.window.length;
  const int hop = cfg.hop;
  const auto win = window_weights(cfg.window);
  const int frames =
      static_cast<int>((x.size() + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop));
  const int bins = L / 2 + 1;
  ComplexGrid out(bins, frames);
  for (int m = 0; m < frames; ++m) {
    for (int k = 0; k < bins; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int u = 0; u < L; ++u) {
        const std::size_t n = static_cast<std::size_t>(m) * hop + static_cast<std::size_t>(u);
        const double xv = n < x.size() ? x[n] : 0.0;
        const double ang = -2.0 * kPi * k * static_cast<double>(n) / L;
        acc += xv * win[static_cast<std::size_t>(u)] *
               std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out.at(k, m) = acc;
    }
  }
  return out;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST(WindowWeights, HammingEndpoints) {
  WindowFn w{WindowKind::Hamming, 256};
  const auto v = window_weights(w);
  ASSERT_EQ(v.size(), 256u);
  EXPECT_NEAR(v[0], 0.08, 1e-12);
  EXPECT_NEAR(v[255], 0.08, 1e-12);
  for (double x : v) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(WindowWeights, Rectangular) {
  const auto v = window_weights({WindowKind::Rectangular, 4});
  EXPECT_EQ(v, (std::vector<double>{1, 1, 1, 1}));
}

TEST(WindowWeights, HammingOddMidpoint) {
  const auto v = window_weights({WindowKind::Hamming, 257});
  EXPECT_NEAR(v[128], 1.0, 1e-12);
}

TEST(WindowWeights, LengthOne) {
  EXPECT_EQ(window_weights({WindowKind::Hamming, 1}), std::vector<double>{1.0});
}

TEST(Stft, ZeroSignalIsZero) {
  std::vector<double> x(512, 0.0);
  const auto out = stft(x, StftConfig{});
  for (const auto& z : out.v) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(Stft, FrameAndBinCounts) {
  std::vector<double> x(512, 0.5);
  const auto out = stft(x, StftConfig{});
  EXPECT_EQ(out.rows, 129);
  EXPECT_EQ(out.cols, 4);
}

TEST(Stft, EmptySignalThrows) {
  std::vector<double> x;
  EXPECT_THROW(stft(x, StftConfig{}), EmptySignal);
}

TEST(Stft, CosineBinDominance) {
  // cosine at exactly bin 8 of a 256-point rectangular window
  const int rate = 512;
  const double f = 8.0 * rate / 256.0;
  std::vector<double> x(512);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::cos(2.0 * kPi * f * static_cast<double>(i) / rate);
  StftConfig cfg;
  cfg.window = {WindowKind::Rectangular, 256};
  const auto out = stft(x, cfg);
  for (int m = 0; m < 2; ++m) {  // full frames only
    const double peak = std::abs(out.at(8, m));
    ASSERT_GT(peak, 1.0);
    for (int k = 0; k < out.rows; ++k) {
      if (k == 8) continue;
      EXPECT_LT(std::abs(out.at(k, m)), 1e-9 * peak) << "bin " << k << " frame " << m;
    }
  }
}

TEST(Stft, MatchesNaiveDftOracle) {
  for (std::size_t len : {256u, 512u, 777u, 2048u}) {
    const auto x = random_signal(len, 40 + len);
    const auto got = stft(x, StftConfig{});
    const auto want = stft_oracle(x, StftConfig{});
    ASSERT_EQ(got.rows, want.rows);
    ASSERT_EQ(got.cols, want.cols);
    double max_err = 0.0;
    for (std::size_t i = 0; i < got.v.size(); ++i)
      max_err = std::max(max_err, std::abs(got.v[i] - want.v[i]));
    EXPECT_LT(max_err, 1e-10) << "len " << len;
  }
}

TEST(Stft, OracleAgreesWithNonPow2Window) {
  StftConfig cfg;
  cfg.window = {WindowKind::Hamming, 100};
  cfg.hop = 50;
  cfg.band_bins = 20;
  const auto x = random_signal(333, 7);
  const auto got = stft(x, cfg);
  const auto want = stft_oracle(x, cfg);
  double max_err = 0.0;
  for (std::size_t i = 0; i < got.v.size(); ++i)
    max_err = std::max(max_err, std::abs(got.v[i] - want.v[i]));
  EXPECT_LT(max_err, 1e-10);
}

TEST(Stft, Linearity) {
  const auto x = random_signal(700, 1);
  const auto y = random_signal(700, 2);
  const double a = 1.7, b = -0.4;
  std::vector<double> z(700);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto sx = stft(x, StftConfig{});
  const auto sy = stft(y, StftConfig{});
  const auto sz = stft(z, StftConfig{});
  for (std::size_t i = 0; i < sz.v.size(); ++i)
    EXPECT_LT(std::abs(sz.v[i] - (a * sx.v[i] + b * sy.v[i])), 1e-9);
}

TEST(Stft, FrameCountIsCeilLenOverHop) {
  for (std::size_t len : {1u, 127u, 128u, 129u, 512u, 1000u, 2048u}) {
    const auto x = random_signal(len, len);
    const auto out = stft(x, StftConfig{});
    EXPECT_EQ(out.cols, static_cast<int>((len + 127) / 128)) << "len " << len;
  }
}

TEST(SpectrogramOp, ZeroInputConstantRule) {
  ComplexGrid grid(129, 4);
  const auto sp = spectrogram(grid, StftConfig{});
  EXPECT_EQ(sp.rows, 32);
  EXPECT_EQ(sp.cols, 4);
  for (double v : sp.values) EXPECT_EQ(v, 0.0);
}

TEST(SpectrogramOp, SingleEntryStandardization) {
  // |z| = e - 1 so log1p gives exactly 1; grid {1,0,0,0}
  ComplexGrid grid(2, 2);
  grid.at(0, 0) = {std::exp(1.0) - 1.0, 0.0};
  StftConfig cfg;
  cfg.band_bins = 2;
  const auto sp = spectrogram(grid, cfg);
  // hand-computed standardization of {1,0,0,0}: mean .25, var .1875
  const double hi = 0.75 / std::sqrt(0.1875);
  const double lo = -0.25 / std::sqrt(0.1875);
  EXPECT_NEAR(sp.at(0, 0), hi, 1e-9);
  EXPECT_NEAR(sp.at(0, 1), lo, 1e-9);
  EXPECT_NEAR(sp.at(1, 0), lo, 1e-9);
  EXPECT_NEAR(sp.at(1, 1), lo, 1e-9);
}

TEST(SpectrogramOp, BandTooWideThrows) {
  ComplexGrid grid(16, 4);
  StftConfig cfg;
  cfg.band_bins = 32;
  EXPECT_THROW(spectrogram(grid, cfg), BandTooWide);
}

TEST(SpectrogramOp, MeanVarianceInvariant) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_signal(512, 100 + seed);
    const auto sp = spectrogram(stft(x, StftConfig{}), StftConfig{});
    double mean = 0.0;
    for (double v : sp.values) mean += v;
    mean /= static_cast<double>(sp.values.size());
    double var = 0.0;
    for (double v : sp.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sp.values.size());
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
}

TEST(Preprocess, Level1Shape) {
  std::vector<float> x(512, 0.0f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.1 * static_cast<double>(i));
  const auto t = preprocess<float>(x, 512, 1, StftConfig{});
  EXPECT_EQ(t.dims, (std::vector<int>{1, 32, 4}));
}

TEST(Preprocess, Level3Shape) {
  std::vector<float> x(2048);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.05 * static_cast<double>(i));
  const auto t = preprocess<float>(x, 512, 3, StftConfig{});
  EXPECT_EQ(t.dims, (std::vector<int>{1, 32, 16}));
}

TEST(Preprocess, LengthMismatchThrows) {
  std::vector<float> x(500, 0.1f);
  EXPECT_THROW(preprocess<float>(x, 512, 1, StftConfig{}), LengthMismatch);
}

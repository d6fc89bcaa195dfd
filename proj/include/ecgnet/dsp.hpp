#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ecgnet/errors.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet::dsp {

inline constexpr double kPi = 3.14159265358979323846;

enum class WindowKind { Hamming, Rectangular };

struct WindowFn {
  WindowKind kind = WindowKind::Hamming;
  int length = 256;
};

struct StftConfig {
  WindowFn window{WindowKind::Hamming, 256};
  int hop = 128;
  int band_bins = 32;
};

inline std::vector<double> window_weights(const WindowFn& w) {
  if (w.length < 1) throw ShapeMismatch("window length must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(w.length));
  if (w.kind == WindowKind::Rectangular || w.length == 1) {
    for (auto& v : out) v = 1.0;
    if (w.kind == WindowKind::Hamming && w.length == 1) out[0] = 1.0;
    return out;
  }
  const double denom = static_cast<double>(w.length - 1);
  for (int i = 0; i < w.length; ++i) {
    out[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / denom);
  }
  return out;
}

// bins x frames complex grid, row-major
struct ComplexGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> v;

  ComplexGrid() = default;
  ComplexGrid(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}
  std::complex<double>& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::complex<double> at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// in-place iterative radix-2 DIT FFT, n a power of two
inline void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto t = a[i + k + len / 2] * w;
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wl;
      }
    }
  }
}

inline void dft_naive(const std::vector<std::complex<double>>& in,
                      std::vector<std::complex<double>>& out) {
  const std::size_t n = in.size();
  out.assign(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      const double ang = -2.0 * kPi * static_cast<double>(k * m) / static_cast<double>(n);
      acc += in[m] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
}

}  // namespace detail

// Windowed one-sided STFT. The signal is zero-padded at the tail so the frame
// count is ceil(len / hop); frame m covers samples [m*hop, m*hop + L). Bin k of
// frame m holds sum_n x(n) w(n - m*hop) e^{-j 2 pi k n / L} over the frame,
// with n the absolute sample index.
template <typename T>
ComplexGrid stft(const std::vector<T>& signal, const StftConfig& cfg) {
  if (signal.empty()) throw EmptySignal("stft on empty signal");
  const int L = cfg.window.length;
  const int hop = cfg.hop;
  if (hop < 1 || hop > L) throw ShapeMismatch("hop must be in [1, window length]");
  const auto win = window_weights(cfg.window);

  const int frames = static_cast<int>((signal.size() + static_cast<std::size_t>(hop) - 1) /
                                      static_cast<std::size_t>(hop));
  const int bins = L / 2 + 1;
  ComplexGrid out(bins, frames);

  std::vector<std::complex<double>> frame(static_cast<std::size_t>(L));
  std::vector<std::complex<double>> spec;
  for (int m = 0; m < frames; ++m) {
    const std::size_t start = static_cast<std::size_t>(m) * hop;
    for (int u = 0; u < L; ++u) {
      const std::size_t n = start + static_cast<std::size_t>(u);
      const double x = n < signal.size() ? static_cast<double>(signal[n]) : 0.0;
      frame[static_cast<std::size_t>(u)] = x * win[static_cast<std::size_t>(u)];
    }
    if (detail::is_pow2(L)) {
      spec = frame;
      detail::fft_pow2(spec);
    } else {
      detail::dft_naive(frame, spec);
    }
    for (int k = 0; k < bins; ++k) {
      // phase factor restoring the absolute sample index n = start + u
      const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(start) /
                         static_cast<double>(L);
      out.at(k, m) = spec[static_cast<std::size_t>(k)] *
                     std::complex<double>(std::cos(ang), std::sin(ang));
    }
  }
  return out;
}

struct Spectrogram {
  int rows = 0;  // band_bins
  int cols = 0;  // frames
  std::vector<double> values;  // row-major
  double freq_resolution_hz = 0.0;
  int hop_samples = 0;

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Keep the lowest band_bins rows, map z -> log(1 + |z|), standardize the whole
// grid to zero mean / unit population variance. A constant grid maps to zeros.
inline Spectrogram spectrogram(const ComplexGrid& stft_out, const StftConfig& cfg,
                               int sample_rate_hz = 0) {
  if (cfg.band_bins > stft_out.rows) throw BandTooWide("band_bins exceeds available bins");
  Spectrogram sp;
  sp.rows = cfg.band_bins;
  sp.cols = stft_out.cols;
  sp.hop_samples = cfg.hop;
  sp.freq_resolution_hz =
      sample_rate_hz > 0 ? static_cast<double>(sample_rate_hz) / cfg.window.length : 0.0;
  sp.values.resize(static_cast<std::size_t>(sp.rows) * sp.cols);
  for (int r = 0; r < sp.rows; ++r) {
    for (int c = 0; c < sp.cols; ++c) {
      sp.at(r, c) = std::log1p(std::abs(stft_out.at(r, c)));
    }
  }
  const std::size_t n = sp.values.size();
  double mean = 0.0;
  for (double v : sp.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sp.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  bool constant = true;
  for (double v : sp.values) {
    if (v != sp.values[0]) {
      constant = false;
      break;
    }
  }
  if (constant) {
    for (double& v : sp.values) v = 0.0;
    return sp;
  }
  const double inv_std = 1.0 / std::sqrt(var);
  for (double& v : sp.values) v = (v - mean) * inv_std;
  return sp;
}

// Full pipeline for one record segment at a given level: expects exactly
// 512 * 2^{level-1} samples and yields a 1 x band_bins x frames input tensor.
template <typename T>
Tensor<T> preprocess(const std::vector<float>& samples, int sample_rate_hz, int level,
                     const StftConfig& cfg) {
  if (level < 1 || level > 6) throw InvalidLevel("level must be in 1..6");
  const std::size_t expect = static_cast<std::size_t>(512) << (level - 1);
  if (samples.size() != expect) {
    throw LengthMismatch("expected " + std::to_string(expect) + " samples, got " +
                         std::to_string(samples.size()));
  }
  const auto grid = stft(samples, cfg);
  const auto sp = spectrogram(grid, cfg, sample_rate_hz);
  Tensor<T> out({1, sp.rows, sp.cols});
  for (std::size_t i = 0; i < sp.values.size(); ++i) out.data[i] = static_cast<T>(sp.values[i]);
  return out;
}

}  // namespace ecgnet::dsp

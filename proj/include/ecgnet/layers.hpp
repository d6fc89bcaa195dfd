#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ecgnet/errors.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet::nn {

// Convolution output extent uses floor division; negative extents are errors.
inline int conv_out_extent(int in, int pad, int kernel, int stride) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) throw ShapeMismatch("kernel exceeds padded input");
  return span / stride + 1;
}

// Pooling requires exact tiling of the input.
inline int pool_out_extent(int in, int kernel, int stride) {
  const int span = in - kernel;
  if (span < 0) throw ShapeMismatch("pool kernel exceeds input");
  if (span % stride != 0) throw ShapeMismatch("pool does not tile input exactly");
  return span / stride + 1;
}

// x: [C,H,W], w: [O,C,kh,kw], zero padding, no bias.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, int pad_h, int pad_w,
                         int stride_h, int stride_w) {
  if (x.dims.size() != 3 || w.dims.size() != 4) throw ShapeMismatch("conv2d rank");
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  const int O = w.dims[0], kh = w.dims[2], kw = w.dims[3];
  if (w.dims[1] != C) throw ShapeMismatch("conv2d channel mismatch");
  const int Ho = conv_out_extent(H, pad_h, kh, stride_h);
  const int Wo = conv_out_extent(W, pad_w, kw, stride_w);

  Tensor<T> y({O, Ho, Wo});
  for (int o = 0; o < O; ++o) {
    for (int c = 0; c < C; ++c) {
      const T* wbase = &w.data[((static_cast<std::size_t>(o) * C + c) * kh) * kw];
      for (int i = 0; i < Ho; ++i) {
        for (int j = 0; j < Wo; ++j) {
          T acc = 0;
          const int h0 = i * stride_h - pad_h;
          const int w0 = j * stride_w - pad_w;
          for (int u = 0; u < kh; ++u) {
            const int hi = h0 + u;
            if (hi < 0 || hi >= H) continue;
            for (int v = 0; v < kw; ++v) {
              const int wi = w0 + v;
              if (wi < 0 || wi >= W) continue;
              acc += wbase[u * kw + v] * x.at(c, hi, wi);
            }
          }
          y.at(o, i, j) += acc;
        }
      }
    }
  }
  return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                                                const Tensor<T>& grad_out, int pad_h, int pad_w,
                                                int stride_h, int stride_w) {
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  const int O = w.dims[0], kh = w.dims[2], kw = w.dims[3];
  const int Ho = grad_out.dims[1], Wo = grad_out.dims[2];
  if (grad_out.dims[0] != O) throw ShapeMismatch("conv2d_backward grad channels");

  Tensor<T> gx(x.dims);
  Tensor<T> gw(w.dims);
  for (int o = 0; o < O; ++o) {
    for (int c = 0; c < C; ++c) {
      T* gwbase = &gw.data[((static_cast<std::size_t>(o) * C + c) * kh) * kw];
      const T* wbase = &w.data[((static_cast<std::size_t>(o) * C + c) * kh) * kw];
      for (int i = 0; i < Ho; ++i) {
        for (int j = 0; j < Wo; ++j) {
          const T g = grad_out.at(o, i, j);
          if (g == T(0)) continue;
          const int h0 = i * stride_h - pad_h;
          const int w0 = j * stride_w - pad_w;
          for (int u = 0; u < kh; ++u) {
            const int hi = h0 + u;
            if (hi < 0 || hi >= H) continue;
            for (int v = 0; v < kw; ++v) {
              const int wi = w0 + v;
              if (wi < 0 || wi >= W) continue;
              gwbase[u * kw + v] += g * x.at(c, hi, wi);
              gx.at(c, hi, wi) += g * wbase[u * kw + v];
            }
          }
        }
      }
    }
  }
  return {std::move(gx), std::move(gw)};
}

// Returns pooled tensor plus, per output element, the flat index of its source
// in x. Ties break toward the lowest flat index.
template <typename T>
std::pair<Tensor<T>, std::vector<int>> maxpool_forward(const Tensor<T>& x, int kh, int kw,
                                                       int stride_h, int stride_w) {
  if (x.dims.size() != 3) throw ShapeMismatch("maxpool rank");
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  const int Ho = pool_out_extent(H, kh, stride_h);
  const int Wo = pool_out_extent(W, kw, stride_w);

  Tensor<T> y({C, Ho, Wo});
  std::vector<int> arg(static_cast<std::size_t>(C) * Ho * Wo);
  std::size_t out_idx = 0;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        T best = x.at(c, i * stride_h, j * stride_w);
        int best_flat = (c * H + i * stride_h) * W + j * stride_w;
        for (int u = 0; u < kh; ++u) {
          for (int v = 0; v < kw; ++v) {
            const int hi = i * stride_h + u;
            const int wi = j * stride_w + v;
            const T val = x.at(c, hi, wi);
            if (val > best) {
              best = val;
              best_flat = (c * H + hi) * W + wi;
            }
          }
        }
        y.data[out_idx] = best;
        arg[out_idx] = best_flat;
        ++out_idx;
      }
    }
  }
  return {std::move(y), std::move(arg)};
}

template <typename T>
Tensor<T> maxpool_backward(const std::vector<int>& argmax, const Tensor<T>& grad_out,
                           const std::vector<int>& x_dims) {
  Tensor<T> gx(x_dims);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    gx.data[static_cast<std::size_t>(argmax[i])] += grad_out.data[i];
  }
  return gx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.dims);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return y;
}

// subgradient at 0 is 0
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  Tensor<T> gx(x.dims);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    gx.data[i] = x.data[i] > T(0) ? grad_out.data[i] : T(0);
  return gx;
}

// x flattened to [in], w: [out, in], no bias.
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& w) {
  if (w.dims.size() != 2) throw ShapeMismatch("fc weight rank");
  const int out = w.dims[0], in = w.dims[1];
  if (static_cast<std::size_t>(in) != x.numel()) throw ShapeMismatch("fc input size");
  Tensor<T> y({out});
  for (int o = 0; o < out; ++o) {
    T acc = 0;
    const T* row = &w.data[static_cast<std::size_t>(o) * in];
    for (int i = 0; i < in; ++i) acc += row[i] * x.data[static_cast<std::size_t>(i)];
    y.data[static_cast<std::size_t>(o)] = acc;
  }
  return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> fc_backward(const Tensor<T>& x, const Tensor<T>& w,
                                            const Tensor<T>& grad_out) {
  const int out = w.dims[0], in = w.dims[1];
  if (grad_out.numel() != static_cast<std::size_t>(out)) throw ShapeMismatch("fc grad size");
  Tensor<T> gx(x.dims);
  Tensor<T> gw(w.dims);
  for (int o = 0; o < out; ++o) {
    const T g = grad_out.data[static_cast<std::size_t>(o)];
    const T* row = &w.data[static_cast<std::size_t>(o) * in];
    T* grow = &gw.data[static_cast<std::size_t>(o) * in];
    for (int i = 0; i < in; ++i) {
      grow[i] += g * x.data[static_cast<std::size_t>(i)];
      gx.data[static_cast<std::size_t>(i)] += g * row[i];
    }
  }
  return {std::move(gx), std::move(gw)};
}

// numerically stable, max-subtracted
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
  std::vector<T> p(logits.size());
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace ecgnet::nn

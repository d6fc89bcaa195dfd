#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ecgnet/errors.hpp"

namespace ecgnet {

// Dense row-major tensor. dims follow [C, H, W] for feature maps and [N] for
// flat vectors; layers interpret them as needed.
template <typename T>
struct Tensor {
  std::vector<int> dims;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(numel_of(dims), T(0));
  }
  Tensor(std::vector<int> d, std::vector<T> v) : dims(std::move(d)), data(std::move(v)) {
    if (data.size() != numel_of(dims)) throw ShapeMismatch("tensor data/dims mismatch");
  }

  static std::size_t numel_of(const std::vector<int>& d) {
    std::size_t n = 1;
    for (int x : d) {
      if (x <= 0) throw ShapeMismatch("non-positive tensor dim");
      n *= static_cast<std::size_t>(x);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }

  // [C,H,W] accessors
  T& at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * dims[1] + h) * dims[2] + w];
  }
  T at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * dims[1] + h) * dims[2] + w];
  }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.dims = dims;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

}  // namespace ecgnet

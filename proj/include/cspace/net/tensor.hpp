#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cspace::net {

// Dense NCHW tensor. Row-major with w fastest; channel planes are
// contiguous, which the conv/pool kernels rely on.
template <typename S>
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};  // n, c, h, w
  std::vector<S> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w)
      : shape{n, c, h, w},
        data(static_cast<std::size_t>(n) * c * h * w, S(0)) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t plane() const { return static_cast<std::int64_t>(shape[2]) * shape[3]; }

  S* ptr(int n = 0, int c = 0) {
    return data.data() + (static_cast<std::size_t>(n) * shape[1] + c) * plane();
  }
  const S* ptr(int n = 0, int c = 0) const {
    return data.data() + (static_cast<std::size_t>(n) * shape[1] + c) * plane();
  }

  S& at(int n, int c, int y, int x) {
    return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }
  S at(int n, int c, int y, int x) const {
    return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }

  void zero() { std::fill(data.begin(), data.end(), S(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <typename S>
Tensor<S> zeros_like(const Tensor<S>& t) {
  return Tensor<S>(t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
}

}  // namespace cspace::net

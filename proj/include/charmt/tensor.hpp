#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "charmt/error.hpp"
#include "charmt/rng.hpp"

namespace charmt {

// Dense row-major tensor of rank 1 or 2. Values are float or double; the
// whole stack is templated on the scalar so tests can run in 64-bit while
// training runs in 32-bit.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    vals_.assign(static_cast<std::size_t>(count(shape_)), S{0});
  }

  Tensor(std::vector<int> shape, std::vector<S> vals)
      : shape_(std::move(shape)), vals_(std::move(vals)) {
    require(static_cast<std::size_t>(count(shape_)) == vals_.size(),
            "tensor value count does not match shape");
  }

  static Tensor vector_of(std::vector<S> vals) {
    const int n = static_cast<int>(vals.size());
    return Tensor({n}, std::move(vals));
  }

  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.vals_) v = static_cast<S>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor constant(std::vector<int> shape, S value) {
    Tensor t(std::move(shape));
    for (auto& v : t.vals_) v = value;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int size() const { return static_cast<int>(vals_.size()); }

  int rows() const { return shape_.empty() ? 0 : shape_[0]; }
  int cols() const {
    require(rank() == 2, "cols() on non-matrix tensor");
    return shape_[1];
  }

  S* data() { return vals_.data(); }
  const S* data() const { return vals_.data(); }

  S& operator[](std::size_t i) { return vals_[i]; }
  const S& operator[](std::size_t i) const { return vals_[i]; }

  S& at(int r, int c) { return vals_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  const S& at(int r, int c) const {
    return vals_[static_cast<std::size_t>(r) * shape_[1] + c];
  }

  const S* row(int r) const { return vals_.data() + static_cast<std::size_t>(r) * shape_[1]; }
  S* row(int r) { return vals_.data() + static_cast<std::size_t>(r) * shape_[1]; }

  void fill(S value) {
    for (auto& v : vals_) v = value;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (const S v : vals_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  void check_finite(const char* what) const {
    if (!all_finite()) [[unlikely]] fail(std::string("non-finite value in ") + what);
  }

  template <typename T>
  Tensor<T> cast() const {
    std::vector<T> out(vals_.size());
    for (std::size_t i = 0; i < vals_.size(); ++i) out[i] = static_cast<T>(vals_[i]);
    return Tensor<T>(shape_, std::move(out));
  }

 private:
  static long long count(const std::vector<int>& shape) {
    long long n = 1;
    for (const int d : shape) {
      require(d > 0, "tensor extents must be positive");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<int> shape_;
  std::vector<S> vals_;
};

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace charmt

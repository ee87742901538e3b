#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmt/error.hpp"
#include "charmt/rng.hpp"
#include "charmt/tensor.hpp"

namespace charmt {

// One named parameter tensor with its gradient accumulator.
template <typename S>
struct Param {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
};

// The single mutable state of training: a named collection of parameter
// tensors. Registration order is fixed, which keeps checkpoints and update
// sweeps deterministic.
template <typename S>
class ParamStore {
 public:
  Param<S>& add(const std::string& name, std::vector<int> shape, Rng& rng,
                double lo = -0.1, double hi = 0.1) {
    Param<S>& p = add_raw(name, Tensor<S>::uniform(shape, rng, lo, hi));
    return p;
  }

  Param<S>& add_constant(const std::string& name, std::vector<int> shape, S value) {
    return add_raw(name, Tensor<S>::constant(shape, value));
  }

  Param<S>& add_raw(const std::string& name, Tensor<S> init) {
    require(index_.find(name) == index_.end(), "duplicate parameter name: " + name);
    auto p = std::make_unique<Param<S>>();
    p->name = name;
    p->grad = Tensor<S>(init.shape());
    p->value = std::move(init);
    Param<S>* raw = p.get();
    index_[name] = raw;
    params_.push_back(std::move(p));
    return *raw;
  }

  Param<S>& at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter: " + name);
    return *it->second;
  }

  const Param<S>& at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter: " + name);
    return *it->second;
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }

  // Registration order.
  const std::vector<std::unique_ptr<Param<S>>>& all() const { return params_; }

  void zero_grads() {
    for (auto& p : params_) p->grad.fill(S{0});
  }

  double grad_norm() const {
    double sq = 0;
    for (const auto& p : params_) {
      const S* g = p->grad.data();
      for (int i = 0; i < p->grad.size(); ++i) sq += double(g[i]) * double(g[i]);
    }
    return std::sqrt(sq);
  }

  // Rescales gradients so their global norm is at most max_norm.
  void clip_grads(double max_norm) {
    const double norm = grad_norm();
    if (norm <= max_norm || norm == 0) return;
    const S scale = static_cast<S>(max_norm / norm);
    for (auto& p : params_) {
      S* g = p->grad.data();
      for (int i = 0; i < p->grad.size(); ++i) g[i] *= scale;
    }
  }

  void sgd_step(double lr) {
    for (auto& p : params_) {
      S* v = p->value.data();
      const S* g = p->grad.data();
      for (int i = 0; i < p->value.size(); ++i)
        v[i] -= static_cast<S>(lr) * g[i];
    }
  }

  long long scalar_count() const {
    long long n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
  std::unordered_map<std::string, Param<S>*> index_;
};

}  // namespace charmt

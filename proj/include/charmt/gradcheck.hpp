#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "charmt/error.hpp"
#include "charmt/params.hpp"
#include "charmt/rng.hpp"

namespace charmt {

// Compares analytic gradients against central finite differences on a random
// sample of scalar parameters. `loss` must rebuild its graph and run backward
// into the store's gradient accumulators on every call.
//
// The returned figure is the worst relative error over the sample, with the
// denominator floored so that near-zero gradients are compared absolutely.
template <typename S>
double finite_difference_check(const std::function<double()>& loss,
                               ParamStore<S>& store, double epsilon,
                               int sample_count, Rng& rng) {
  require(epsilon > 0, "epsilon must be positive");

  store.zero_grads();
  const double base = loss();
  require(std::isfinite(base), "non-finite loss at base point");

  // Snapshot analytic gradients before perturbing anything.
  std::vector<std::pair<Param<S>*, int>> coords;
  for (const auto& p : store.all())
    for (int i = 0; i < p->value.size(); ++i) coords.push_back({p.get(), i});
  require(!coords.empty(), "store has no parameters");

  std::vector<double> analytic(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    analytic[i] = static_cast<double>(coords[i].first->grad[coords[i].second]);

  double worst = 0;
  for (int s = 0; s < sample_count; ++s) {
    const std::size_t pick = static_cast<std::size_t>(rng.below(coords.size()));
    Param<S>* p = coords[pick].first;
    const int idx = coords[pick].second;

    const S saved = p->value[idx];
    p->value[idx] = saved + static_cast<S>(epsilon);
    store.zero_grads();
    const double up = loss();
    p->value[idx] = saved - static_cast<S>(epsilon);
    store.zero_grads();
    const double down = loss();
    p->value[idx] = saved;
    require(std::isfinite(up) && std::isfinite(down),
            "non-finite loss at perturbed point");

    const double numeric = (up - down) / (2 * epsilon);
    const double a = analytic[pick];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace charmt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "charmt/attention.hpp"
#include "charmt/gradcheck.hpp"
#include "reference.hpp"

using namespace charmt;
using D = double;

namespace {

struct Fixture {
  ParamStore<D> store;
  AttentionParams<D> att;
  int d_lstm, d_z;

  explicit Fixture(std::uint64_t seed, int d_lstm_ = 5, int d_z_ = 4)
      : d_lstm(d_lstm_), d_z(d_z_) {
    Rng rng(seed);
    att = AttentionParams<D>::create(store, "att", d_lstm, d_z, rng);
  }
};

}  // namespace

TEST_CASE("a single source vector receives all the attention") {
  Fixture f(1);
  Rng rng(2);
  Graph<D> g;
  Expr l = g.input(Tensor<D>::uniform({f.d_lstm}, rng, -1, 1));
  Expr b0 = g.input(Tensor<D>::uniform({f.d_z}, rng, -1, 1));
  auto res = attend(g, f.att, l, {b0});
  CHECK(g.value(res.coeffs).size() == 1);
  CHECK(g.value(res.coeffs)[0] == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i < f.d_z; ++i)
    CHECK(g.value(res.context)[i] == doctest::Approx(g.value(b0)[i]).epsilon(1e-12));
}

TEST_CASE("identical source vectors get uniform coefficients") {
  Fixture f(3);
  Rng rng(4);
  Graph<D> g;
  Expr l = g.input(Tensor<D>::uniform({f.d_lstm}, rng, -1, 1));
  Tensor<D> b = Tensor<D>::uniform({f.d_z}, rng, -1, 1);
  std::vector<Expr> bs = {g.input(b), g.input(b), g.input(b)};
  auto res = attend(g, f.att, l, bs);
  for (int i = 0; i < 3; ++i)
    CHECK(g.value(res.coeffs)[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  for (int i = 0; i < f.d_z; ++i)
    CHECK(g.value(res.context)[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("attention matches the straight-line reference on a 3-word instance") {
  Fixture f(5);
  Rng rng(6);
  Graph<D> g;
  refimpl::Vec l_ref(f.d_lstm);
  for (auto& v : l_ref) v = rng.uniform(-1, 1);
  std::vector<refimpl::Vec> b_ref(3, refimpl::Vec(f.d_z));
  for (auto& b : b_ref)
    for (auto& v : b) v = rng.uniform(-1, 1);

  Expr l = g.input(Tensor<D>::vector_of(l_ref));
  std::vector<Expr> bs;
  for (const auto& b : b_ref) bs.push_back(g.input(Tensor<D>::vector_of(b)));
  auto res = attend(g, f.att, l, bs);
  auto oracle = refimpl::attend(f.att, l_ref, b_ref);

  for (int i = 0; i < 3; ++i) {
    CHECK(g.value(res.scores)[i] == doctest::Approx(oracle.scores[i]).epsilon(1e-12));
    CHECK(g.value(res.coeffs)[i] == doctest::Approx(oracle.coeffs[i]).epsilon(1e-12));
  }
  for (int i = 0; i < f.d_z; ++i)
    CHECK(g.value(res.context)[i] == doctest::Approx(oracle.context[i]).epsilon(1e-12));
}

TEST_CASE("coefficients form a probability vector, shift invariant") {
  Fixture f(7);
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Graph<D> g;
    const int n = 1 + static_cast<int>(rng.below(6));
    Expr l = g.input(Tensor<D>::uniform({f.d_lstm}, rng, -2, 2));
    std::vector<Expr> bs;
    for (int i = 0; i < n; ++i)
      bs.push_back(g.input(Tensor<D>::uniform({f.d_z}, rng, -2, 2)));
    auto res = attend(g, f.att, l, bs);
    D total = 0;
    for (int i = 0; i < n; ++i) {
      const D a = g.value(res.coeffs)[i];
      CHECK(a > 0);
      CHECK(a < 1 + 1e-12);
      total += a;
    }
    CHECK(std::abs(total - 1) < 1e-9);

    // shifting every score leaves the coefficients unchanged
    std::vector<D> z(g.value(res.scores).data(),
                     g.value(res.scores).data() + n);
    auto base = softmax_vector(z);
    for (auto& v : z) v += 17.5;
    auto shifted = softmax_vector(z);
    for (int i = 0; i < n; ++i) CHECK(std::abs(base[i] - shifted[i]) < 1e-12);
  }
}

TEST_CASE("supervision penalty values") {
  Graph<D> g;
  // a_k = 1: single source position
  AttentionResult<D> certain;
  certain.scores = g.input(Tensor<D>::vector_of({0.0}));
  Expr p0 = supervision_penalty(g, certain, 0, 1.0);
  CHECK(g.scalar(p0) == doctest::Approx(0.0).epsilon(1e-15));

  // softmax([0, log(e-1)]) = [1/e, (e-1)/e], so -log a_0 = 1
  AttentionResult<D> crafted;
  crafted.scores = g.input(Tensor<D>::vector_of({0.0, std::log(std::exp(1.0) - 1)}));
  Expr p1 = supervision_penalty(g, crafted, 0, 1.0);
  CHECK(g.scalar(p1) == doctest::Approx(1.0).epsilon(1e-12));

  // lambda scales the penalty
  Expr p2 = supervision_penalty(g, crafted, 0, 2.5);
  CHECK(g.scalar(p2) == doctest::Approx(2.5).epsilon(1e-12));

  CHECK_THROWS_AS(supervision_penalty(g, crafted, 2, 1.0), Error);
  CHECK_THROWS_AS(supervision_penalty(g, crafted, -1, 1.0), Error);
}

TEST_CASE("penalty decreases as the aligned coefficient grows") {
  // -lambda log a is monotone decreasing in a
  std::vector<double> penalties;
  for (const double bump : {0.0, 0.5, 1.0, 2.0}) {
    Graph<D> g;
    AttentionResult<D> res;
    res.scores = g.input(Tensor<D>::vector_of({bump, 0.0, 0.0}));
    penalties.push_back(g.scalar(supervision_penalty(g, res, 0, 1.0)));
  }
  for (std::size_t i = 1; i < penalties.size(); ++i)
    CHECK(penalties[i] < penalties[i - 1]);
}

TEST_CASE("a gradient step on the penalty alone increases a_k") {
  Fixture f(9);
  Rng rng(10);
  Tensor<D> l = Tensor<D>::uniform({f.d_lstm}, rng, -1, 1);
  std::vector<Tensor<D>> bs;
  for (int i = 0; i < 4; ++i) bs.push_back(Tensor<D>::uniform({f.d_z}, rng, -1, 1));
  const int k = 2;

  auto coeff_at_k = [&]() {
    Graph<D> g;
    std::vector<Expr> b_exprs;
    for (const auto& b : bs) b_exprs.push_back(g.input(b));
    auto res = attend(g, f.att, g.input(l), b_exprs);
    return g.value(res.coeffs)[k];
  };

  const D before = coeff_at_k();
  {
    Graph<D> g;
    std::vector<Expr> b_exprs;
    for (const auto& b : bs) b_exprs.push_back(g.input(b));
    auto res = attend(g, f.att, g.input(l), b_exprs);
    Expr penalty = supervision_penalty(g, res, k, 1.0);
    f.store.zero_grads();
    g.backward(penalty);
    f.store.sgd_step(1e-3);
  }
  CHECK(coeff_at_k() > before);
}

TEST_CASE("attention gradients match finite differences") {
  Fixture f(11);
  Rng rng(12);
  Tensor<D> l = Tensor<D>::uniform({f.d_lstm}, rng, -1, 1);
  std::vector<Tensor<D>> bs;
  for (int i = 0; i < 3; ++i) bs.push_back(Tensor<D>::uniform({f.d_z}, rng, -1, 1));
  Tensor<D> probe = Tensor<D>::uniform({f.d_z}, rng, -1, 1);

  auto loss = [&]() -> double {
    Graph<D> g;
    std::vector<Expr> b_exprs;
    for (const auto& b : bs) b_exprs.push_back(g.input(b));
    auto res = attend(g, f.att, g.input(l), b_exprs);
    Expr obj = g.add(g.dot(res.context, g.input(probe)),
                     supervision_penalty(g, res, 1, 0.7));
    g.backward(obj);
    return g.scalar(obj);
  };
  Rng check_rng(13);
  const double err = finite_difference_check<D>(loss, f.store, 1e-5, 40, check_rng);
  CHECK(err < 1e-4);
}

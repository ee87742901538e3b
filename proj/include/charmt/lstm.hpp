#pragma once

#include <string>

#include "charmt/graph.hpp"
#include "charmt/params.hpp"

namespace charmt {

// Gated recurrent cell with input, forget and output gates and a tanh
// candidate, no peepholes. The forget-gate bias starts at 1 so long-range
// carry paths are open at the beginning of training.
template <typename S>
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Param<S>* wx_input = nullptr;
  Param<S>* wh_input = nullptr;
  Param<S>* b_input = nullptr;
  Param<S>* wx_forget = nullptr;
  Param<S>* wh_forget = nullptr;
  Param<S>* b_forget = nullptr;
  Param<S>* wx_output = nullptr;
  Param<S>* wh_output = nullptr;
  Param<S>* b_output = nullptr;
  Param<S>* wx_cand = nullptr;
  Param<S>* wh_cand = nullptr;
  Param<S>* b_cand = nullptr;

  static LstmParams create(ParamStore<S>& store, const std::string& prefix,
                           int input_dim, int hidden_dim, Rng& rng) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    auto mat = [&](const char* name) {
      return &store.add(prefix + "." + name, {hidden_dim, input_dim}, rng);
    };
    auto rec = [&](const char* name) {
      return &store.add(prefix + "." + name, {hidden_dim, hidden_dim}, rng);
    };
    p.wx_input = mat("wx_i");
    p.wh_input = rec("wh_i");
    p.b_input = &store.add(prefix + ".b_i", {hidden_dim}, rng);
    p.wx_forget = mat("wx_f");
    p.wh_forget = rec("wh_f");
    p.b_forget = &store.add_constant(prefix + ".b_f", {hidden_dim}, S{1});
    p.wx_output = mat("wx_o");
    p.wh_output = rec("wh_o");
    p.b_output = &store.add(prefix + ".b_o", {hidden_dim}, rng);
    p.wx_cand = mat("wx_c");
    p.wh_cand = rec("wh_c");
    p.b_cand = &store.add(prefix + ".b_c", {hidden_dim}, rng);
    return p;
  }
};

template <typename S>
struct LstmState {
  Expr h;
  Expr c;
};

template <typename S>
LstmState<S> lstm_zero_state(Graph<S>& g, const LstmParams<S>& p) {
  Expr z = g.input(Tensor<S>({p.hidden_dim}));
  return {z, z};
}

template <typename S>
LstmState<S> lstm_state_from(Graph<S>& g, const Tensor<S>& h, const Tensor<S>& c) {
  return {g.input(h), g.input(c)};
}

// One recurrence step: h = o * tanh(c), c = f * c_prev + i * cand.
template <typename S>
LstmState<S> lstm_step(Graph<S>& g, const LstmParams<S>& p, Expr x,
                       const LstmState<S>& prev) {
  require(g.value(x).size() == p.input_dim, "lstm input dimension mismatch");
  require(g.value(prev.h).size() == p.hidden_dim, "lstm state dimension mismatch");
  auto gate = [&](Param<S>* wx, Param<S>* wh, Param<S>* b) {
    Expr pre = g.add(g.add(g.matvec(g.param(*wx), x), g.matvec(g.param(*wh), prev.h)),
                     g.param(*b));
    return pre;
  };
  Expr i = g.sigmoid(gate(p.wx_input, p.wh_input, p.b_input));
  Expr f = g.sigmoid(gate(p.wx_forget, p.wh_forget, p.b_forget));
  Expr o = g.sigmoid(gate(p.wx_output, p.wh_output, p.b_output));
  Expr cand = g.tanh(gate(p.wx_cand, p.wh_cand, p.b_cand));
  Expr c = g.add(g.mul(f, prev.c), g.mul(i, cand));
  Expr h = g.mul(o, g.tanh(c));
  return {h, c};
}

}  // namespace charmt

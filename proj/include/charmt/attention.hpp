#pragma once

#include <string>
#include <vector>

#include "charmt/graph.hpp"
#include "charmt/params.hpp"

namespace charmt {

// Alignment scorer: z_i = s . tanh(W_t l + W_s b_i), normalized by softmax
// into coefficients whose weighted average of the b_i is the attended
// source context.
template <typename S>
struct AttentionParams {
  Param<S>* w_target = nullptr;  // d_z x d_lstm
  Param<S>* w_source = nullptr;  // d_z x d_z
  Param<S>* score = nullptr;     // d_z

  static AttentionParams create(ParamStore<S>& store, const std::string& prefix,
                                int d_lstm, int d_z, Rng& rng) {
    AttentionParams p;
    p.w_target = &store.add(prefix + ".w_target", {d_z, d_lstm}, rng);
    p.w_source = &store.add(prefix + ".w_source", {d_z, d_z}, rng);
    p.score = &store.add(prefix + ".score", {d_z}, rng);
    return p;
  }
};

template <typename S>
struct AttentionResult {
  Expr scores;   // z_0..z_n
  Expr coeffs;   // softmax(z)
  Expr context;  // sum_i a_i b_i
};

// W_s b_i depends only on the source sentence, so it is computed once and
// reused for every target position.
template <typename S>
std::vector<Expr> attention_source_proj(Graph<S>& g, const AttentionParams<S>& p,
                                        const std::vector<Expr>& b_list) {
  std::vector<Expr> out;
  out.reserve(b_list.size());
  Expr ws = g.param(*p.w_source);
  for (const Expr b : b_list) out.push_back(g.matvec(ws, b));
  return out;
}

template <typename S>
AttentionResult<S> attend(Graph<S>& g, const AttentionParams<S>& p, Expr target_state,
                          const std::vector<Expr>& b_list,
                          const std::vector<Expr>& src_proj) {
  require(!b_list.empty(), "attend needs at least one source vector");
  require(b_list.size() == src_proj.size(), "source projection cache mismatch");
  Expr wt_l = g.matvec(g.param(*p.w_target), target_state);
  Expr score_vec = g.param(*p.score);
  std::vector<Expr> scores;
  scores.reserve(b_list.size());
  for (const Expr proj : src_proj)
    scores.push_back(g.dot(score_vec, g.tanh(g.add(wt_l, proj))));
  Expr z = g.concat(scores);
  Expr a = g.softmax(z);
  Expr context = g.weighted_sum(a, b_list);
  return {z, a, context};
}

template <typename S>
AttentionResult<S> attend(Graph<S>& g, const AttentionParams<S>& p, Expr target_state,
                          const std::vector<Expr>& b_list) {
  return attend(g, p, target_state, b_list, attention_source_proj(g, p, b_list));
}

// -lambda * log a_k, pulling attention toward an externally supplied word
// alignment. Computed from the raw scores so the log stays stable even when
// a_k underflows.
template <typename S>
Expr supervision_penalty(Graph<S>& g, const AttentionResult<S>& att,
                         int aligned_index, double lambda) {
  const int n = g.value(att.scores).size();
  require(aligned_index >= 0 && aligned_index < n,
          "aligned source index out of range");
  return g.scale(g.pick_log_softmax(att.scores, aligned_index),
                 static_cast<S>(-lambda));
}

}  // namespace charmt

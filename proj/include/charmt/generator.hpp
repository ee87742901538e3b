#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "charmt/corpus.hpp"
#include "charmt/encoder.hpp"
#include "charmt/graph.hpp"
#include "charmt/lstm.hpp"
#include "charmt/rng.hpp"
#include "charmt/vocab.hpp"

namespace charmt {

// Target-side word projection feeding the forward context LSTM. The same
// lookup/C2W switch as the source encoder.
template <typename S>
struct TargetContextParams {
  Projection mode = Projection::kLookup;
  int d_word = 0;
  Param<S>* lookup = nullptr;
  bool has_c2w = false;
  C2wParams<S> c2w;
  Param<S>* sos_vec = nullptr;
  Param<S>* eos_vec = nullptr;
  LstmParams<S> lstm;  // d_word -> d_lstm

  static TargetContextParams create(ParamStore<S>& store, const std::string& prefix,
                                    int n_words, Param<S>* shared_char_table,
                                    int d_word, int d_char, int d_lstm, Rng& rng) {
    TargetContextParams p;
    p.d_word = d_word;
    p.lookup = &store.add(prefix + ".lookup", {n_words, d_word}, rng);
    if (shared_char_table) {
      p.has_c2w = true;
      p.c2w = C2wParams<S>::create_shared_table(store, prefix + ".c2w",
                                                *shared_char_table, d_char, d_lstm,
                                                d_word, rng);
      p.sos_vec = &store.add(prefix + ".sos", {d_word}, rng);
      p.eos_vec = &store.add(prefix + ".eos", {d_word}, rng);
    }
    p.lstm = LstmParams<S>::create(store, prefix + ".lstm", d_word, d_lstm, rng);
    return p;
  }
};

template <typename S>
Expr embed_target_word(Graph<S>& g, const TargetContextParams<S>& p,
                       const EncodedWord& w) {
  if (p.mode == Projection::kLookup) {
    require(w.word_id >= 0 && w.word_id < g.value(g.param(*p.lookup)).rows(),
            "word id out of lookup range");
    return g.lookup_row(g.param(*p.lookup), w.word_id);
  }
  require(p.has_c2w, "target side has no character composition parameters");
  if (w.is_sos) return g.param(*p.sos_vec);
  if (w.is_eos) return g.param(*p.eos_vec);
  return c2w_compose(g, p.c2w, w.char_ids);
}

// One forward step over the translated prefix; extending a prefix reuses
// the previous state, so the recurrence is incremental by construction.
template <typename S>
LstmState<S> target_context_step(Graph<S>& g, const TargetContextParams<S>& p,
                                 const EncodedWord& w, const LstmState<S>& prev) {
  return lstm_step(g, p.lstm, embed_target_word(g, p, w), prev);
}

// ---------------------------------------------------------------------------
// Word softmax baseline.

template <typename S>
struct WordSoftmaxParams {
  Param<S>* score_ctx = nullptr;    // |words| x d_z
  Param<S>* score_state = nullptr;  // |words| x d_lstm

  static WordSoftmaxParams create(ParamStore<S>& store, const std::string& prefix,
                                  int n_words, int d_z, int d_lstm, Rng& rng) {
    WordSoftmaxParams p;
    p.score_ctx = &store.add(prefix + ".score_ctx", {n_words, d_z}, rng);
    p.score_state = &store.add(prefix + ".score_state", {n_words, d_lstm}, rng);
    return p;
  }
};

// score_j = S_a^j . a + S_l^j . l for every word type j.
template <typename S>
Expr word_scores(Graph<S>& g, const WordSoftmaxParams<S>& p, Expr context,
                 Expr state) {
  return g.add(g.matvec(g.param(*p.score_ctx), context),
               g.matvec(g.param(*p.score_state), state));
}

template <typename S>
Expr word_softmax(Graph<S>& g, const WordSoftmaxParams<S>& p, Expr context,
                  Expr state) {
  return g.softmax(word_scores(g, p, context, state));
}

// Empirical unigram noise distribution for noise contrastive estimation.
struct NoiseDistribution {
  std::vector<double> probs;  // indexed by word id, sums to 1
  std::vector<double> cdf;

  static NoiseDistribution from_counts(const std::vector<long long>& counts) {
    NoiseDistribution d;
    double total = 0;
    for (const long long c : counts) total += static_cast<double>(c);
    require(total > 0, "noise distribution needs at least one count");
    d.probs.resize(counts.size());
    d.cdf.resize(counts.size());
    double acc = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      d.probs[i] = static_cast<double>(counts[i]) / total;
      acc += d.probs[i];
      d.cdf[i] = acc;
    }
    return d;
  }

  int sample(Rng& rng) const {
    // Zero-probability ids can never be drawn: the cdf is flat across them.
    return static_cast<int>(rng.sample_cdf(cdf));
  }
};

namespace detail {

// Unnormalized score of a single word type, sharing the softmax parameters.
template <typename S>
Expr single_word_score(Graph<S>& g, const WordSoftmaxParams<S>& p, Expr context,
                       Expr state, int word_id) {
  Expr row_ctx = g.lookup_row(g.param(*p.score_ctx), word_id);
  Expr row_state = g.lookup_row(g.param(*p.score_state), word_id);
  return g.add(g.dot(row_ctx, context), g.dot(row_state, state));
}

}  // namespace detail

// Binary NCE objective against k noise draws from the unigram distribution,
// with the usual log(k * P_noise) offsets and the normalizer fixed at 1.
template <typename S>
Expr nce_loss(Graph<S>& g, const WordSoftmaxParams<S>& p, Expr context, Expr state,
              int target_id, const NoiseDistribution& noise, int k, Rng& rng) {
  require(k >= 1, "nce needs at least one negative sample");
  require(target_id >= 0 &&
              target_id < static_cast<int>(noise.probs.size()),
          "nce target id out of range");
  require(noise.probs[target_id] > 0, "nce target has zero noise probability");

  std::vector<Expr> terms;
  const double offset_data = std::log(k * noise.probs[target_id]);
  Expr s_data = detail::single_word_score(g, p, context, state, target_id);
  Expr delta_data = g.add(s_data, g.input(Tensor<S>::vector_of(
                                      {static_cast<S>(-offset_data)})));
  terms.push_back(g.scale(g.log_sigmoid(delta_data), S{-1}));

  for (int i = 0; i < k; ++i) {
    const int noise_id = noise.sample(rng);
    const double offset = std::log(k * noise.probs[noise_id]);
    Expr s_noise = detail::single_word_score(g, p, context, state, noise_id);
    Expr delta = g.add(s_noise,
                       g.input(Tensor<S>::vector_of({static_cast<S>(-offset)})));
    terms.push_back(g.scale(g.log_sigmoid(g.scale(delta, S{-1})), S{-1}));
  }
  return g.add_all(terms);
}

// ---------------------------------------------------------------------------
// V2C: character-level generation of one target word, conditioned on the
// attended source context and the target context state at every step.

template <typename S>
struct V2cParams {
  Param<S>* char_table = nullptr;  // shared with the target C2W table
  int d_char = 0;
  LstmParams<S> lstm;             // (d_char + d_z + d_lstm) -> d_lstm
  Param<S>* out_proj = nullptr;   // |chars| x d_lstm

  static V2cParams create(ParamStore<S>& store, const std::string& prefix,
                          Param<S>& shared_char_table, int n_chars, int d_char,
                          int d_z, int d_lstm, Rng& rng) {
    V2cParams p;
    p.char_table = &shared_char_table;
    p.d_char = d_char;
    p.lstm = LstmParams<S>::create(store, prefix + ".lstm", d_char + d_z + d_lstm,
                                   d_lstm, rng);
    p.out_proj = &store.add(prefix + ".out_proj", {n_chars, d_lstm}, rng);
    return p;
  }
};

template <typename S>
struct V2cStep {
  Expr scores;  // over the character vocabulary
  LstmState<S> state;
};

// One generation step: embed the previous character, concatenate the source
// context and target state, advance the LSTM, and score every character.
template <typename S>
V2cStep<S> v2c_step(Graph<S>& g, const V2cParams<S>& p, int prev_char_id,
                    Expr context, Expr target_state, const LstmState<S>& prev) {
  const int n_chars = p.out_proj->value.rows();
  require(prev_char_id >= 0 && prev_char_id < p.char_table->value.rows(),
          "character id out of range");
  Expr emb = g.lookup_row(g.param(*p.char_table), prev_char_id);
  Expr x = g.concat({emb, context, target_state});
  LstmState<S> state = lstm_step(g, p.lstm, x, prev);
  Expr scores = g.matvec(g.param(*p.out_proj), state.h);
  require(g.value(scores).size() == n_chars, "v2c output projection mismatch");
  return {scores, state};
}

template <typename S>
Expr v2c_probs(Graph<S>& g, Expr scores) {
  return g.softmax(scores);
}

// Teacher-forced log probability of one word. A normal word arrives as
// [SOW, c1..ck, EOW] and every prediction including the final EOW counts;
// the sentence terminator arrives as [EOS] and costs exactly one step.
template <typename S>
Expr v2c_word_logprob(Graph<S>& g, const V2cParams<S>& p,
                      const std::vector<int>& char_ids, Expr context,
                      Expr target_state) {
  require(!char_ids.empty(), "empty character sequence");
  LstmState<S> state = lstm_zero_state(g, p.lstm);

  if (char_ids.size() == 1) {
    require(char_ids[0] == ids::kEosChar,
            "only the EOS word is a single-character sequence");
    V2cStep<S> step = v2c_step(g, p, ids::kSow, context, target_state, state);
    return g.pick_log_softmax(step.scores, ids::kEosChar);
  }

  require(char_ids.front() == ids::kSow, "word must start with SOW");
  require(char_ids.back() == ids::kEow, "word must end with EOW");
  std::vector<Expr> logs;
  logs.reserve(char_ids.size() - 1);
  for (std::size_t q = 1; q < char_ids.size(); ++q) {
    V2cStep<S> step = v2c_step(g, p, char_ids[q - 1], context, target_state, state);
    logs.push_back(g.pick_log_softmax(step.scores, char_ids[q]));
    state = step.state;
  }
  return g.add_all(logs);
}

}  // namespace charmt

#pragma once

#include <string>
#include <vector>

#include "charmt/corpus.hpp"
#include "charmt/graph.hpp"
#include "charmt/lstm.hpp"
#include "charmt/vocab.hpp"

namespace charmt {

// Whether word vectors come from a lookup table or are composed from
// characters. Layer-wise training starts on lookups and swaps later.
enum class Projection { kLookup, kC2w };

// Compositional word representation: two character LSTMs read the spelling
// in both directions and their final states are combined linearly.
template <typename S>
struct C2wParams {
  int d_char = 0;
  int d_word = 0;
  Param<S>* char_table = nullptr;  // |chars| x d_char
  LstmParams<S> fwd;
  LstmParams<S> bwd;
  Param<S>* comb_fwd = nullptr;  // d_word x d_lstm
  Param<S>* comb_bwd = nullptr;  // d_word x d_lstm
  Param<S>* bias = nullptr;      // d_word

  static C2wParams create(ParamStore<S>& store, const std::string& prefix,
                          int n_chars, int d_char, int d_lstm, int d_word,
                          Rng& rng) {
    C2wParams p;
    p.d_char = d_char;
    p.d_word = d_word;
    p.char_table = &store.add(prefix + ".chars", {n_chars, d_char}, rng);
    p.fwd = LstmParams<S>::create(store, prefix + ".fwd", d_char, d_lstm, rng);
    p.bwd = LstmParams<S>::create(store, prefix + ".bwd", d_char, d_lstm, rng);
    p.comb_fwd = &store.add(prefix + ".comb_fwd", {d_word, d_lstm}, rng);
    p.comb_bwd = &store.add(prefix + ".comb_bwd", {d_word, d_lstm}, rng);
    p.bias = &store.add(prefix + ".bias", {d_word}, rng);
    return p;
  }

  // Uses an existing character table (the generator shares the target one).
  static C2wParams create_shared_table(ParamStore<S>& store, const std::string& prefix,
                                       Param<S>& table, int d_char, int d_lstm,
                                       int d_word, Rng& rng) {
    C2wParams p;
    p.d_char = d_char;
    p.d_word = d_word;
    p.char_table = &table;
    p.fwd = LstmParams<S>::create(store, prefix + ".fwd", d_char, d_lstm, rng);
    p.bwd = LstmParams<S>::create(store, prefix + ".bwd", d_char, d_lstm, rng);
    p.comb_fwd = &store.add(prefix + ".comb_fwd", {d_word, d_lstm}, rng);
    p.comb_bwd = &store.add(prefix + ".comb_bwd", {d_word, d_lstm}, rng);
    p.bias = &store.add(prefix + ".bias", {d_word}, rng);
    return p;
  }
};

// Word vector from a character id sequence [SOW, c1..ck, EOW]. Only the two
// final LSTM states enter the combination.
template <typename S>
Expr c2w_compose(Graph<S>& g, const C2wParams<S>& p, const std::vector<int>& char_ids) {
  require(char_ids.size() >= 2, "c2w needs at least the SOW/EOW sentinels");
  require(char_ids.front() == ids::kSow, "c2w sequence must start with SOW");
  require(char_ids.back() == ids::kEow, "c2w sequence must end with EOW");

  Expr table = g.param(*p.char_table);
  std::vector<Expr> vecs;
  vecs.reserve(char_ids.size());
  for (const int id : char_ids) vecs.push_back(g.lookup_row(table, id));

  LstmState<S> f = lstm_zero_state(g, p.fwd);
  for (std::size_t i = 0; i < vecs.size(); ++i) f = lstm_step(g, p.fwd, vecs[i], f);
  LstmState<S> b = lstm_zero_state(g, p.bwd);
  for (std::size_t i = vecs.size(); i-- > 0;) b = lstm_step(g, p.bwd, vecs[i], b);

  Expr out = g.add(g.matvec(g.param(*p.comb_fwd), f.h),
                   g.matvec(g.param(*p.comb_bwd), b.h));
  return g.add(out, g.param(*p.bias));
}

// Source-side word projection plus the sentence-level bidirectional LSTM
// that turns word vectors into context vectors b_0..b_n.
template <typename S>
struct SourceEncoderParams {
  Projection mode = Projection::kLookup;
  int d_word = 0;
  int d_context = 0;
  Param<S>* lookup = nullptr;  // |words| x d_word; also the distillation target
  bool has_c2w = false;
  C2wParams<S> c2w;
  Param<S>* sos_vec = nullptr;  // control tokens get dedicated vectors in c2w mode
  Param<S>* eos_vec = nullptr;
  LstmParams<S> fwd;
  LstmParams<S> bwd;
  Param<S>* ctx_fwd = nullptr;   // d_context x d_lstm
  Param<S>* ctx_bwd = nullptr;   // d_context x d_lstm
  Param<S>* ctx_bias = nullptr;  // d_context

  static SourceEncoderParams create(ParamStore<S>& store, const std::string& prefix,
                                    int n_words, int n_chars, int d_word, int d_char,
                                    int d_lstm, int d_context, bool with_c2w,
                                    Rng& rng) {
    SourceEncoderParams p;
    p.d_word = d_word;
    p.d_context = d_context;
    p.lookup = &store.add(prefix + ".lookup", {n_words, d_word}, rng);
    if (with_c2w) {
      p.has_c2w = true;
      p.c2w = C2wParams<S>::create(store, prefix + ".c2w", n_chars, d_char, d_lstm,
                                   d_word, rng);
      p.sos_vec = &store.add(prefix + ".sos", {d_word}, rng);
      p.eos_vec = &store.add(prefix + ".eos", {d_word}, rng);
    }
    p.fwd = LstmParams<S>::create(store, prefix + ".fwd", d_word, d_lstm, rng);
    p.bwd = LstmParams<S>::create(store, prefix + ".bwd", d_word, d_lstm, rng);
    p.ctx_fwd = &store.add(prefix + ".ctx_fwd", {d_context, d_lstm}, rng);
    p.ctx_bwd = &store.add(prefix + ".ctx_bwd", {d_context, d_lstm}, rng);
    p.ctx_bias = &store.add(prefix + ".ctx_bias", {d_context}, rng);
    return p;
  }
};

template <typename S>
Expr embed_word(Graph<S>& g, const SourceEncoderParams<S>& p, const EncodedWord& w) {
  if (p.mode == Projection::kLookup) {
    require(w.word_id >= 0 && w.word_id < g.value(g.param(*p.lookup)).rows(),
            "word id out of lookup range");
    return g.lookup_row(g.param(*p.lookup), w.word_id);
  }
  require(p.has_c2w, "encoder has no character composition parameters");
  if (w.is_sos) return g.param(*p.sos_vec);
  if (w.is_eos) return g.param(*p.eos_vec);
  return c2w_compose(g, p.c2w, w.char_ids);
}

// Word vectors s_0..s_n for every position including SOS and EOS.
template <typename S>
std::vector<Expr> embed_source_words(Graph<S>& g, const SourceEncoderParams<S>& p,
                                     const EncodedSentence& sent) {
  require(sent.words.size() >= 2, "sentence must include SOS and EOS positions");
  std::vector<Expr> out;
  out.reserve(sent.words.size());
  for (const auto& w : sent.words) out.push_back(embed_word(g, p, w));
  return out;
}

// b_i = C_f g^f_i + C_b g^b_i + bias. The forward state at i depends only
// on the prefix up to i, the backward state only on the suffix from i.
template <typename S>
std::vector<Expr> bilstm_context(Graph<S>& g, const SourceEncoderParams<S>& p,
                                 const std::vector<Expr>& word_vecs) {
  require(!word_vecs.empty(), "bilstm_context needs at least one vector");
  const std::size_t n = word_vecs.size();
  std::vector<Expr> fwd(n), bwd(n);
  LstmState<S> f = lstm_zero_state(g, p.fwd);
  for (std::size_t i = 0; i < n; ++i) {
    f = lstm_step(g, p.fwd, word_vecs[i], f);
    fwd[i] = f.h;
  }
  LstmState<S> b = lstm_zero_state(g, p.bwd);
  for (std::size_t i = n; i-- > 0;) {
    b = lstm_step(g, p.bwd, word_vecs[i], b);
    bwd[i] = b.h;
  }
  std::vector<Expr> out(n);
  Expr cf = g.param(*p.ctx_fwd);
  Expr cb = g.param(*p.ctx_bwd);
  Expr bias = g.param(*p.ctx_bias);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = g.add(g.add(g.matvec(cf, fwd[i]), g.matvec(cb, bwd[i])), bias);
  return out;
}

template <typename S>
std::vector<Expr> encode_source(Graph<S>& g, const SourceEncoderParams<S>& p,
                                const EncodedSentence& sent) {
  return bilstm_context(g, p, embed_source_words(g, p, sent));
}

}  // namespace charmt

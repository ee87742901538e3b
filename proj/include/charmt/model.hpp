#pragma once

#include <string>
#include <vector>

#include "charmt/attention.hpp"
#include "charmt/config.hpp"
#include "charmt/corpus.hpp"
#include "charmt/encoder.hpp"
#include "charmt/generator.hpp"
#include "charmt/graph.hpp"
#include "charmt/vocab.hpp"

namespace charmt {

// Word baseline: lookup projections and a softmax over the target
// vocabulary. Character model: C2W projections and the V2C generator.
enum class ModelKind { kWord, kChar };

// Options for building one sentence's training loss.
struct LossOptions {
  double supervision_weight = 0;  // 0 disables alignment penalties
  const NoiseDistribution* noise = nullptr;  // enables NCE in word mode
  int nce_k = 0;
  Rng* nce_rng = nullptr;
};

struct LossTerms {
  Expr nll;                  // scalar: NLL plus any supervision penalties
  int word_predictions = 0;  // target words scored, terminator included
  int char_predictions = 0;  // character predictions, char mode only
};

inline std::string to_string(ModelKind k) {
  return k == ModelKind::kWord ? "word" : "char";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "word") return ModelKind::kWord;
  if (s == "char") return ModelKind::kChar;
  fail("unknown model kind: " + s);
}

// Full translation model. Parameter registration order is fixed by the
// constructor so checkpoints are reproducible; all forward passes are built
// through a Graph supplied by the caller.
template <typename S>
class TranslationModel {
 public:
  TranslationModel(const ModelConfig& config, ModelKind kind, CorpusVocabs vocabs)
      : config_(config), kind_(kind), vocabs_(std::move(vocabs)) {
    config_.validate();
    Rng rng(config_.seed);
    const bool with_chars = kind_ == ModelKind::kChar;

    source_ = SourceEncoderParams<S>::create(
        store_, "src", vocabs_.src_words.size(), vocabs_.src_chars.size(),
        config_.d_sw, config_.d_sc, config_.d_lstm, config_.d_z, with_chars, rng);
    attention_ = AttentionParams<S>::create(store_, "att", config_.d_lstm,
                                            config_.d_z, rng);

    if (with_chars) {
      // The generator and the target C2W share one character table.
      Param<S>& table = store_.add("tgt.chars", {vocabs_.tgt_chars.size(), config_.d_tc},
                                   rng);
      target_ = TargetContextParams<S>::create(store_, "tgt", vocabs_.tgt_words.size(),
                                               &table, config_.d_tw, config_.d_tc,
                                               config_.d_lstm, rng);
      v2c_ = V2cParams<S>::create(store_, "gen", table, vocabs_.tgt_chars.size(),
                                  config_.d_tc, config_.d_z, config_.d_lstm, rng);
    } else {
      target_ = TargetContextParams<S>::create(store_, "tgt", vocabs_.tgt_words.size(),
                                               nullptr, config_.d_tw, config_.d_tc,
                                               config_.d_lstm, rng);
      softmax_ = WordSoftmaxParams<S>::create(store_, "softmax",
                                              vocabs_.tgt_words.size(), config_.d_z,
                                              config_.d_lstm, rng);
    }
  }

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return kind_; }
  const CorpusVocabs& vocabs() const { return vocabs_; }
  ParamStore<S>& store() { return store_; }
  const ParamStore<S>& store() const { return store_; }

  Projection projection() const { return source_.mode; }

  // Layer-wise stage switch. The word baseline always uses lookups.
  void set_projection(Projection mode) {
    if (mode == Projection::kC2w)
      require(kind_ == ModelKind::kChar, "word baseline has no C2W parameters");
    source_.mode = mode;
    target_.mode = mode;
  }

  // Copies the learned control-token rows out of the lookup tables when the
  // projections switch from lookup to C2W, so SOS/EOS keep their vectors.
  void swap_to_c2w() {
    require(kind_ == ModelKind::kChar, "word baseline has no C2W parameters");
    for (int i = 0; i < config_.d_sw; ++i) {
      source_.sos_vec->value[i] = source_.lookup->value.at(ids::kSos, i);
      source_.eos_vec->value[i] = source_.lookup->value.at(ids::kEos, i);
    }
    for (int i = 0; i < config_.d_tw; ++i) {
      target_.sos_vec->value[i] = target_.lookup->value.at(ids::kSos, i);
      target_.eos_vec->value[i] = target_.lookup->value.at(ids::kEos, i);
    }
    set_projection(Projection::kC2w);
  }

  SourceEncoderParams<S>& source() { return source_; }
  AttentionParams<S>& attention() { return attention_; }
  TargetContextParams<S>& target() { return target_; }
  WordSoftmaxParams<S>& softmax() {
    require(kind_ == ModelKind::kWord, "softmax parameters exist in word mode only");
    return softmax_;
  }
  V2cParams<S>& v2c() {
    require(kind_ == ModelKind::kChar, "V2C parameters exist in char mode only");
    return v2c_;
  }

  // --- forward builders ----------------------------------------------------

  struct SourceContext {
    std::vector<Expr> b;     // context vectors b_0..b_n
    std::vector<Expr> proj;  // cached W_s b_i
  };

  SourceContext build_source_context(Graph<S>& g, const EncodedSentence& sent) {
    SourceContext ctx;
    ctx.b = encode_source(g, source_, sent);
    ctx.proj = attention_source_proj(g, attention_, ctx.b);
    return ctx;
  }

  LstmState<S> initial_target_state(Graph<S>& g) {
    return lstm_zero_state(g, target_.lstm);
  }

  LstmState<S> advance_target(Graph<S>& g, const EncodedWord& w,
                              const LstmState<S>& prev) {
    return target_context_step(g, target_, w, prev);
  }

  AttentionResult<S> attend_source(Graph<S>& g, Expr target_state,
                                   const SourceContext& src) {
    return attend(g, attention_, target_state, src.b, src.proj);
  }

  // Negative log probability of one target word under the word softmax.
  Expr word_nll(Graph<S>& g, const AttentionResult<S>& att, Expr target_state,
                int word_id) {
    Expr scores = word_scores(g, softmax_, att.context, target_state);
    return g.scale(g.pick_log_softmax(scores, word_id), S{-1});
  }

  // Negative log probability of one target word under the V2C generator.
  Expr char_word_nll(Graph<S>& g, const AttentionResult<S>& att, Expr target_state,
                     const EncodedWord& w) {
    require(!w.char_ids.empty(), "target word has no character encoding");
    return g.scale(
        v2c_word_logprob(g, v2c_, w.char_ids, att.context, target_state), S{-1});
  }

  // Teacher-forced loss of one sentence pair: the sum over target positions
  // (terminator included) of word or character NLL, plus the attention
  // supervision penalty wherever the pair carries a usable alignment.
  LossTerms build_nll(Graph<S>& g, const EncodedPair& pair, const LossOptions& opt) {
    const auto& tgt = pair.target.words;
    require(tgt.size() >= 2 && tgt.front().is_sos && tgt.back().is_eos,
            "target sentence must be wrapped in SOS/EOS");
    SourceContext src = build_source_context(g, pair.source);
    LstmState<S> state = advance_target(g, tgt.front(), initial_target_state(g));

    LossTerms terms;
    std::vector<Expr> parts;
    for (std::size_t p = 1; p < tgt.size(); ++p) {
      AttentionResult<S> att = attend_source(g, state.h, src);
      const EncodedWord& word = tgt[p];
      if (kind_ == ModelKind::kWord) {
        if (opt.noise) {
          require(opt.nce_rng && opt.nce_k >= 1, "NCE needs a sampler and k >= 1");
          parts.push_back(nce_loss(g, softmax_, att.context, state.h, word.word_id,
                                   *opt.noise, opt.nce_k, *opt.nce_rng));
        } else {
          parts.push_back(word_nll(g, att, state.h, word.word_id));
        }
        ++terms.word_predictions;
      } else {
        parts.push_back(char_word_nll(g, att, state.h, word));
        ++terms.word_predictions;
        terms.char_predictions += word.is_eos
                                      ? 1
                                      : static_cast<int>(word.char_ids.size()) - 1;
      }
      if (opt.supervision_weight > 0 && !word.is_eos) {
        const auto it = pair.alignment.find(static_cast<int>(p) - 1);
        if (it != pair.alignment.end()) {
          // word index -> attention position, offset by the SOS slot
          parts.push_back(
              supervision_penalty(g, att, it->second + 1, opt.supervision_weight));
        }
      }
      if (p + 1 < tgt.size()) state = advance_target(g, word, state);
    }
    terms.nll = g.add_all(parts);
    return terms;
  }

  // Word vector used for neighbor queries; runs a throwaway graph.
  Tensor<S> word_embedding(Side side, const EncodedWord& w, Projection mode) {
    Graph<S> g;
    Expr e;
    if (side == Side::kSource) {
      const Projection saved = source_.mode;
      source_.mode = mode;
      e = embed_word(g, source_, w);
      source_.mode = saved;
    } else {
      const Projection saved = target_.mode;
      target_.mode = mode;
      e = embed_target_word(g, target_, w);
      target_.mode = saved;
    }
    return g.value(e);
  }

 private:
  ModelConfig config_;
  ModelKind kind_;
  CorpusVocabs vocabs_;
  ParamStore<S> store_;
  SourceEncoderParams<S> source_;
  AttentionParams<S> attention_;
  TargetContextParams<S> target_;
  WordSoftmaxParams<S> softmax_;
  V2cParams<S> v2c_;
};

}  // namespace charmt

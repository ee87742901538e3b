#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "charmt/gradcheck.hpp"
#include "charmt/model.hpp"

namespace charmt {

struct GradCheckReport {
  std::string component;
  double max_rel_error = 0;
};

// Finite-difference sweep over every differentiable component, each against
// its own parameter store so that sampled coordinates always participate in
// the loss. Runs in the scalar type of the caller; the acceptance gate uses
// 64-bit.
template <typename S>
std::vector<GradCheckReport> gradient_check_suite(std::uint64_t seed,
                                                  double epsilon = 1e-5,
                                                  int samples = 25) {
  std::vector<GradCheckReport> reports;
  Rng data_rng(seed ^ 0x6772616463686bULL);

  auto run = [&](const std::string& name, ParamStore<S>& store,
                 const std::function<double()>& loss) {
    Rng check_rng(seed + reports.size() + 1);
    reports.push_back({name, finite_difference_check<S>(loss, store, epsilon,
                                                        samples, check_rng)});
  };

  {  // character composition
    ParamStore<S> store;
    Rng rng(seed + 11);
    C2wParams<S> c2w = C2wParams<S>::create(store, "c2w", 8, 4, 6, 5, rng);
    Tensor<S> probe = Tensor<S>::uniform({5}, data_rng, -1, 1);
    const std::vector<int> word = {ids::kSow, 4, 6, 7, ids::kEow};
    run("c2w", store, [&]() -> double {
      Graph<S> g;
      Expr loss = g.dot(c2w_compose(g, c2w, word), g.input(probe));
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // bidirectional sentence encoder over lookup projections
    ParamStore<S> store;
    Rng rng(seed + 12);
    SourceEncoderParams<S> enc =
        SourceEncoderParams<S>::create(store, "enc", 9, 8, 4, 3, 5, 4, false, rng);
    EncodedSentence sent;
    EncodedWord sos;
    sos.word_id = ids::kSos;
    sos.is_sos = true;
    sent.words.push_back(sos);
    for (const int id : {5, 7, 4}) {
      EncodedWord w;
      w.word_id = id;
      sent.words.push_back(w);
    }
    EncodedWord eos;
    eos.word_id = ids::kEos;
    eos.is_eos = true;
    sent.words.push_back(eos);
    std::vector<Tensor<S>> probes;
    for (std::size_t i = 0; i < sent.words.size(); ++i)
      probes.push_back(Tensor<S>::uniform({4}, data_rng, -1, 1));
    run("bilstm_encoder", store, [&]() -> double {
      Graph<S> g;
      auto b = encode_source(g, enc, sent);
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < b.size(); ++i)
        terms.push_back(g.dot(b[i], g.input(probes[i])));
      Expr loss = g.add_all(terms);
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // attention scorer and context
    ParamStore<S> store;
    Rng rng(seed + 13);
    AttentionParams<S> att = AttentionParams<S>::create(store, "att", 5, 4, rng);
    Tensor<S> l = Tensor<S>::uniform({5}, data_rng, -1, 1);
    std::vector<Tensor<S>> bs;
    for (int i = 0; i < 3; ++i) bs.push_back(Tensor<S>::uniform({4}, data_rng, -1, 1));
    Tensor<S> probe = Tensor<S>::uniform({4}, data_rng, -1, 1);
    run("attention", store, [&]() -> double {
      Graph<S> g;
      std::vector<Expr> b_exprs;
      for (const auto& b : bs) b_exprs.push_back(g.input(b));
      auto res = attend(g, att, g.input(l), b_exprs);
      Expr loss = g.dot(res.context, g.input(probe));
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // word softmax negative log likelihood
    ParamStore<S> store;
    Rng rng(seed + 14);
    WordSoftmaxParams<S> sm = WordSoftmaxParams<S>::create(store, "sm", 9, 4, 5, rng);
    Tensor<S> ctx = Tensor<S>::uniform({4}, data_rng, -1, 1);
    Tensor<S> state = Tensor<S>::uniform({5}, data_rng, -1, 1);
    run("word_softmax", store, [&]() -> double {
      Graph<S> g;
      Expr scores = word_scores(g, sm, g.input(ctx), g.input(state));
      Expr loss = g.scale(g.pick_log_softmax(scores, 6), S{-1});
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // character generator
    ParamStore<S> store;
    Rng rng(seed + 15);
    Param<S>& table = store.add("chars", {8, 3}, rng);
    V2cParams<S> v2c = V2cParams<S>::create(store, "v2c", table, 8, 3, 4, 5, rng);
    Tensor<S> ctx = Tensor<S>::uniform({4}, data_rng, -1, 1);
    Tensor<S> state = Tensor<S>::uniform({5}, data_rng, -1, 1);
    const std::vector<int> word = {ids::kSow, 5, 4, ids::kEow};
    run("v2c", store, [&]() -> double {
      Graph<S> g;
      Expr loss = g.scale(
          v2c_word_logprob(g, v2c, word, g.input(ctx), g.input(state)), S{-1});
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // supervision penalty through the attention scores
    ParamStore<S> store;
    Rng rng(seed + 16);
    AttentionParams<S> att = AttentionParams<S>::create(store, "att", 5, 4, rng);
    Tensor<S> l = Tensor<S>::uniform({5}, data_rng, -1, 1);
    std::vector<Tensor<S>> bs;
    for (int i = 0; i < 4; ++i) bs.push_back(Tensor<S>::uniform({4}, data_rng, -1, 1));
    run("supervision_penalty", store, [&]() -> double {
      Graph<S> g;
      std::vector<Expr> b_exprs;
      for (const auto& b : bs) b_exprs.push_back(g.input(b));
      auto res = attend(g, att, g.input(l), b_exprs);
      Expr loss = supervision_penalty(g, res, 2, 1.3);
      g.backward(loss);
      return static_cast<double>(g.scalar(loss));
    });
  }

  {  // full character-model loss with supervision
    ModelConfig cfg;
    cfg.d_lstm = 5;
    cfg.d_sw = 4;
    cfg.d_tw = 4;
    cfg.d_sc = 3;
    cfg.d_tc = 3;
    cfg.d_z = 4;
    cfg.seed = seed + 17;
    CorpusVocabs vocabs;
    for (const char* w : {"ab", "ba", "aab"}) vocabs.src_words.add(w);
    for (const char* w : {"xy", "yx", "xxy"}) vocabs.tgt_words.add(w);
    for (const char* c : {"a", "b"}) vocabs.src_chars.add(c);
    for (const char* c : {"x", "y"}) vocabs.tgt_chars.add(c);
    auto model = std::make_shared<TranslationModel<S>>(cfg, ModelKind::kChar, vocabs);
    model->set_projection(Projection::kC2w);

    ParallelCorpus corpus;
    SentencePair pair;
    for (const char* w : {"ab", "ba", "aab"}) {
      CorpusWord cw;
      cw.text = w;
      cw.chars = utf8_decode(w);
      pair.source.push_back(cw);
    }
    for (const char* w : {"xy", "yx"}) {
      CorpusWord cw;
      cw.text = w;
      cw.chars = utf8_decode(w);
      pair.target.push_back(cw);
    }
    corpus.pairs.push_back(pair);
    auto encoded = encode_corpus(corpus, vocabs, true);
    EncodedPair example = encoded[0];
    example.alignment = {{0, 1}, {1, 0}};
    LossOptions opt;
    opt.supervision_weight = 0.8;

    Rng check_rng(seed + reports.size() + 1);
    auto loss = [model, example, opt]() -> double {
      Graph<S> g;
      auto terms = model->build_nll(g, example, opt);
      g.backward(terms.nll);
      return static_cast<double>(g.scalar(terms.nll));
    };
    reports.push_back({"full_char_model",
                       finite_difference_check<S>(loss, model->store(), epsilon,
                                                  samples, check_rng)});
  }

  return reports;
}

}  // namespace charmt

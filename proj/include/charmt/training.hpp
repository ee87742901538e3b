#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "charmt/checkpoint.hpp"
#include "charmt/eval.hpp"
#include "charmt/model.hpp"
#include "charmt/search.hpp"

namespace charmt {

// Teacher-forced loss of one pair, forward only.
template <typename S>
double sentence_loss(TranslationModel<S>& model, const EncodedPair& pair,
                     const LossOptions& opt = {}) {
  Graph<S> g;
  LossTerms terms = model.build_nll(g, pair, opt);
  const double loss = static_cast<double>(g.scalar(terms.nll));
  require(std::isfinite(loss), "non-finite sentence loss");
  return loss;
}

struct CorpusLoss {
  double total = 0;  // summed loss including penalties
  long long pairs = 0;
  long long word_predictions = 0;
  long long char_predictions = 0;

  double mean_per_pair() const { return pairs ? total / pairs : 0; }
  double char_perplexity() const {
    return char_predictions ? std::exp(total / char_predictions) : 0;
  }
  double word_perplexity() const {
    return word_predictions ? std::exp(total / word_predictions) : 0;
  }
};

template <typename S>
CorpusLoss corpus_loss(TranslationModel<S>& model, const std::vector<EncodedPair>& pairs,
                       const LossOptions& opt = {}) {
  CorpusLoss out;
  for (const EncodedPair& pair : pairs) {
    Graph<S> g;
    LossTerms terms = model.build_nll(g, pair, opt);
    const double loss = static_cast<double>(g.scalar(terms.nll));
    require(std::isfinite(loss), "non-finite corpus loss");
    out.total += loss;
    out.pairs += 1;
    out.word_predictions += terms.word_predictions;
    out.char_predictions += terms.char_predictions;
  }
  return out;
}

// One pass of shuffled mini-batch gradient descent. Gradients are summed
// over the pairs of a batch in index order, clipped by global norm, and
// applied in a single update. Returns the mean per-pair loss.
template <typename S>
double sgd_epoch(TranslationModel<S>& model, const std::vector<EncodedPair>& pairs,
                 int batch_size, double lr, Rng& rng, const LossOptions& opt = {},
                 double clip_norm = 5.0) {
  require(lr >= 0, "learning rate must be non-negative");
  require(batch_size >= 1, "batch size must be at least 1");
  require(!pairs.empty(), "cannot run an epoch on an empty corpus");

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  double total = 0;
  std::size_t done = 0;
  while (done < order.size()) {
    const std::size_t end = std::min(done + static_cast<std::size_t>(batch_size),
                                     order.size());
    model.store().zero_grads();
    for (std::size_t i = done; i < end; ++i) {
      Graph<S> g;
      LossTerms terms = model.build_nll(g, pairs[order[i]], opt);
      const double loss = static_cast<double>(g.scalar(terms.nll));
      if (!std::isfinite(loss))
        fail("non-finite loss on pair " + std::to_string(order[i]) +
             "; aborting the epoch");
      total += loss;
      g.backward(terms.nll);
    }
    if (clip_norm > 0) model.store().clip_grads(clip_norm);
    model.store().sgd_step(lr);
    done = end;
  }
  return total / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Stage B: train a C2W model to reproduce the rows of a learned lookup table.

struct DistillResult {
  double initial_mse = 0;
  double final_mse = 0;
};

// The word list pairs each lookup row with the word's character encoding.
template <typename S>
std::vector<std::pair<int, std::vector<int>>> distillation_words(
    const Vocab& words, const Vocab& chars, int max_word_len = 64) {
  std::vector<std::pair<int, std::vector<int>>> out;
  for (int id = ids::kReserved; id < words.size(); ++id) {
    const auto cps = utf8_decode(words.decode(id));
    out.push_back({id, encode_word_chars(cps, chars, max_word_len)});
  }
  return out;
}

// Full-batch gradient descent on the mean squared distance between the
// lookup rows (held fixed) and the composed vectors. The working step
// halves whenever an update overshoots and the update is rolled back, so
// the reported loss is non-increasing for any starting rate.
template <typename S>
DistillResult distill_c2w(ParamStore<S>& store, C2wParams<S>& c2w,
                          const Param<S>& lookup,
                          const std::vector<std::pair<int, std::vector<int>>>& words,
                          int epochs, double lr) {
  require(lookup.value.cols() == c2w.d_word,
          "lookup and C2W output dimensions differ");

  auto row_tensor = [&](int id) {
    Tensor<S> t({c2w.d_word});
    for (int j = 0; j < c2w.d_word; ++j) t[j] = lookup.value.at(id, j);
    return t;
  };

  const S inv_n = words.empty() ? S{0} : S{1} / static_cast<S>(words.size());
  auto mse_pass = [&](bool with_grads) {
    double total = 0;
    if (with_grads) store.zero_grads();
    for (const auto& [id, char_ids] : words) {
      Graph<S> g;
      Expr target = g.input(row_tensor(id));
      Expr composed = c2w_compose(g, c2w, char_ids);
      Expr loss = g.scale(g.squared_distance(target, composed), inv_n);
      total += static_cast<double>(g.scalar(loss));
      if (with_grads) g.backward(loss);
    }
    return total;
  };

  std::vector<Param<S>*> trained = {c2w.char_table, c2w.comb_fwd, c2w.comb_bwd,
                                    c2w.bias};
  for (const LstmParams<S>* cell : {&c2w.fwd, &c2w.bwd}) {
    for (Param<S>* p : {cell->wx_input, cell->wh_input, cell->b_input,
                        cell->wx_forget, cell->wh_forget, cell->b_forget,
                        cell->wx_output, cell->wh_output, cell->b_output,
                        cell->wx_cand, cell->wh_cand, cell->b_cand})
      trained.push_back(p);
  }
  auto snapshot = [&]() {
    std::vector<Tensor<S>> copy;
    copy.reserve(trained.size());
    for (Param<S>* p : trained) copy.push_back(p->value);
    return copy;
  };
  auto restore = [&](const std::vector<Tensor<S>>& copy) {
    for (std::size_t i = 0; i < trained.size(); ++i) trained[i]->value = copy[i];
  };

  DistillResult result;
  result.initial_mse = mse_pass(false);
  result.final_mse = result.initial_mse;
  if (words.empty()) return result;

  // One epoch sweeps the word list with per-word updates. Epochs that end
  // worse than the best seen are rolled back with a halved step, so the
  // final loss never exceeds the starting one for any initial rate.
  double step = lr;
  double best = result.initial_mse;
  auto best_params = snapshot();
  for (int e = 0; e < epochs; ++e) {
    for (const auto& [id, char_ids] : words) {
      Graph<S> g;
      Expr target = g.input(row_tensor(id));
      Expr composed = c2w_compose(g, c2w, char_ids);
      Expr loss = g.squared_distance(target, composed);
      for (Param<S>* p : trained) p->grad.fill(S{0});
      g.backward(loss);
      const S eta = static_cast<S>(step) * inv_n;
      for (Param<S>* p : trained) {
        S* v = p->value.data();
        const S* gr = p->grad.data();
        for (int i = 0; i < p->value.size(); ++i) v[i] -= eta * gr[i];
      }
    }
    const double now = mse_pass(false);
    if (!std::isfinite(now) || now > best) {
      restore(best_params);
      step /= 2;
      continue;
    }
    best = now;
    best_params = snapshot();
    step = std::min(step * 1.05, lr);
  }
  result.final_mse = best;
  return result;
}

// ---------------------------------------------------------------------------
// Layer-wise curriculum with dev-BLEU early stopping.

enum class Stage { kA, kB, kC };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::kA: return "A";
    case Stage::kB: return "B";
    case Stage::kC: return "C";
  }
  return "?";
}

struct TrainDataset {
  std::vector<EncodedPair> train;
  std::vector<EncodedPair> dev;             // teacher-forced dev loss
  std::vector<EncodedSentence> dev_sources; // decoding inputs
  std::vector<TokenSentence> dev_references;
};

// Mutable bookkeeping across one training run.
struct TrainState {
  int epoch = 0;  // global epoch counter across stages
  Stage stage = Stage::kA;
  double best_dev_bleu = -1;
  int epochs_since_improvement = 0;
  double lr = 0;
  Rng sampler;

  explicit TrainState(std::uint64_t seed, double initial_lr)
      : lr(initial_lr), sampler(seed) {}
};

struct LayerwiseResult {
  int epochs_stage_a = 0;
  int epochs_stage_c = 0;
  DistillResult distill_source;
  DistillResult distill_target;
  double stage_a_dev_loss = 0;   // mean per-pair dev loss at the end of stage A
  double post_swap_dev_loss = 0; // same metric right after the lookup->C2W swap
  double final_dev_bleu = -1;
};

template <typename S>
double dev_bleu(TranslationModel<S>& model, const TrainDataset& data) {
  if (data.dev_sources.empty()) return 0;
  std::vector<TokenSentence> outputs;
  outputs.reserve(data.dev_sources.size());
  const ModelConfig& cfg = model.config();
  for (const EncodedSentence& src : data.dev_sources) {
    BeamResult res =
        word_beam_translate(model, src, cfg.k_w, cfg.k_c, cfg.max_sent_len);
    outputs.push_back(result_to_words(model, res));
  }
  return bleu(outputs, data.dev_references).bleu;
}

namespace detail {

template <typename S>
void log_epoch(std::ostream* log, const TrainState& state, double train_loss,
               double bleu_score) {
  if (!log) return;
  std::ostringstream line;
  line << "epoch=" << state.epoch << " stage=" << to_string(state.stage)
       << " train_loss=" << std::fixed << std::setprecision(4) << train_loss
       << " dev_bleu=" << std::setprecision(2) << bleu_score
       << " lr=" << std::setprecision(6) << state.lr;
  *log << line.str() << '\n';
  log->flush();
}

// Runs epochs until dev BLEU fails to improve for `patience` epochs or the
// stage cap is reached. The learning rate halves after every second
// non-improving epoch. Returns the number of epochs run.
template <typename S>
int run_stage(TranslationModel<S>& model, const TrainDataset& data,
              TrainState& state, const LossOptions& opt,
              const std::string& checkpoint_dir, std::ostream* log) {
  const ModelConfig& cfg = model.config();
  state.lr = cfg.learning_rate;
  double best = -1;
  state.epochs_since_improvement = 0;
  int epochs = 0;
  while (epochs < cfg.max_epochs) {
    const double mean =
        sgd_epoch(model, data.train, cfg.batch_size, state.lr, state.sampler, opt);
    ++epochs;
    ++state.epoch;
    const double score = dev_bleu(model, data);
    log_epoch<S>(log, state, mean, score);
    if (score > best) {
      best = score;
      state.epochs_since_improvement = 0;
      if (!checkpoint_dir.empty())
        save_checkpoint(checkpoint_dir + "/model.best.ckpt", model);
    } else {
      ++state.epochs_since_improvement;
      if (state.epochs_since_improvement % 2 == 0) state.lr /= 2;
      if (state.epochs_since_improvement >= cfg.patience_epochs) break;
    }
  }
  if (best > state.best_dev_bleu) state.best_dev_bleu = best;
  return epochs;
}

}  // namespace detail

// Word baseline: one stage on lookup projections. NCE replaces the exact
// softmax when the target vocabulary is large.
template <typename S>
LayerwiseResult train_word_baseline(TranslationModel<S>& model,
                                    const TrainDataset& data,
                                    std::ostream* log = nullptr,
                                    const std::string& checkpoint_dir = "") {
  require(model.kind() == ModelKind::kWord, "word baseline training needs a word model");
  require(!data.dev_sources.empty(), "dev corpus must not be empty");
  const ModelConfig& cfg = model.config();
  TrainState state(cfg.seed ^ 0x74726e5f75ULL, cfg.learning_rate);

  LossOptions opt;
  opt.supervision_weight = cfg.supervision_weight;
  NoiseDistribution noise;
  if (model.vocabs().tgt_words.size() > 5000) {
    std::vector<long long> counts(model.vocabs().tgt_words.size(), 0);
    for (const EncodedPair& pair : data.train)
      for (const EncodedWord& w : pair.target.words)
        if (!w.is_sos) ++counts[w.word_id];
    noise = NoiseDistribution::from_counts(counts);
    opt.noise = &noise;
    opt.nce_k = cfg.nce_negatives;
    opt.nce_rng = &state.sampler;
  }

  LayerwiseResult result;
  result.epochs_stage_a = detail::run_stage(model, data, state, opt, checkpoint_dir, log);
  result.final_dev_bleu = state.best_dev_bleu;
  if (!checkpoint_dir.empty())
    save_checkpoint(checkpoint_dir + "/model.final.ckpt", model);
  return result;
}

// Character model curriculum. Stage A trains attention and the V2C
// generator over word lookup projections; stage B distills both C2W models
// to reproduce the learned lookups over all training word types; stage C
// swaps the projections to C2W and fine-tunes everything.
template <typename S>
LayerwiseResult train_layerwise(TranslationModel<S>& model, const TrainDataset& data,
                                std::ostream* log = nullptr,
                                const std::string& checkpoint_dir = "") {
  require(model.kind() == ModelKind::kChar, "layer-wise training needs a char model");
  require(!data.dev_sources.empty(), "dev corpus must not be empty");
  const ModelConfig& cfg = model.config();
  TrainState state(cfg.seed ^ 0x74726e5f75ULL, cfg.learning_rate);

  LossOptions opt;
  opt.supervision_weight = cfg.supervision_weight;

  LayerwiseResult result;

  // Stage A: lookup projections.
  model.set_projection(Projection::kLookup);
  state.stage = Stage::kA;
  if (log) *log << "stage A: training with word lookup projections\n";
  result.epochs_stage_a = detail::run_stage(model, data, state, opt, checkpoint_dir, log);
  result.stage_a_dev_loss = corpus_loss(model, data.dev).mean_per_pair();

  // Stage B: distill both C2W models against the learned lookups.
  state.stage = Stage::kB;
  if (log) *log << "stage B: distilling C2W toward the learned lookups\n";
  const auto src_words = distillation_words<S>(model.vocabs().src_words,
                                               model.vocabs().src_chars,
                                               cfg.max_word_len);
  const auto tgt_words = distillation_words<S>(model.vocabs().tgt_words,
                                               model.vocabs().tgt_chars,
                                               cfg.max_word_len);
  result.distill_source =
      distill_c2w(model.store(), model.source().c2w, *model.source().lookup,
                  src_words, cfg.distill_epochs, cfg.distill_lr);
  result.distill_target =
      distill_c2w(model.store(), model.target().c2w, *model.target().lookup,
                  tgt_words, cfg.distill_epochs, cfg.distill_lr);
  if (log)
    *log << "stage B: source mse " << result.distill_source.initial_mse << " -> "
         << result.distill_source.final_mse << ", target mse "
         << result.distill_target.initial_mse << " -> "
         << result.distill_target.final_mse << '\n';

  // Stage C: swap to C2W projections and fine-tune end to end.
  model.swap_to_c2w();
  result.post_swap_dev_loss = corpus_loss(model, data.dev).mean_per_pair();
  state.stage = Stage::kC;
  if (log) *log << "stage C: fine-tuning with C2W projections\n";
  result.epochs_stage_c = detail::run_stage(model, data, state, opt, checkpoint_dir, log);
  result.final_dev_bleu = state.best_dev_bleu;

  if (!checkpoint_dir.empty())
    save_checkpoint(checkpoint_dir + "/model.final.ckpt", model);
  return result;
}

}  // namespace charmt

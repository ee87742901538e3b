// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its headline measurements.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "charmt/cli.hpp"
#include "charmt/diagnostics.hpp"
#include "charmt/model.hpp"
#include "charmt/search.hpp"
#include "charmt/training.hpp"
#include "helpers.hpp"

using namespace charmt;
using namespace testing_helpers;
using D = double;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              name, detail.c_str());
  std::fflush(stdout);
}

// --- shared corpus builders -------------------------------------------------

ParallelCorpus sentences_to_corpus(const std::vector<std::string>& src_lines,
                                   const std::vector<std::string>& tgt_lines) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < src_lines.size(); ++i)
    pairs.push_back({src_lines[i], tgt_lines[i]});
  return corpus_from_lines(pairs);
}

// 20 short word types; every sentence has exactly three words and the
// target equals the source.
struct CopyTask {
  std::vector<std::string> types;
  ParallelCorpus train;
  ParallelCorpus dev;

  explicit CopyTask(int train_pairs = 100, int dev_pairs = 20) {
    Rng rng(99);
    const std::string cons = "bcdlmnprst";
    const std::string vow = "aeiou";
    while (types.size() < 20) {
      std::string w;
      w += cons[rng.below(cons.size())];
      w += vow[rng.below(vow.size())];
      if (rng.below(2)) w += cons[rng.below(cons.size())];
      if (std::find(types.begin(), types.end(), w) == types.end()) types.push_back(w);
    }
    auto sentence = [&]() {
      std::string s;
      for (int j = 0; j < 3; ++j) {
        if (j) s += ' ';
        s += types[rng.below(types.size())];
      }
      return s;
    };
    std::vector<std::string> train_lines, dev_lines;
    for (int i = 0; i < train_pairs; ++i) train_lines.push_back(sentence());
    for (int i = 0; i < dev_pairs; ++i) dev_lines.push_back(sentence());
    train = sentences_to_corpus(train_lines, train_lines);
    dev = sentences_to_corpus(dev_lines, dev_lines);
  }
};

ModelConfig halved_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.d_lstm = 75;
  cfg.d_sw = 25;
  cfg.d_tw = 25;
  cfg.d_sc = 25;
  cfg.d_tc = 25;
  cfg.d_z = 50;
  cfg.seed = seed;
  return cfg;
}

// SGD with halving on sustained plateaus of the epoch mean.
struct PlateauSchedule {
  double lr;
  double floor;
  double best = 1e300;
  int stall = 0;

  PlateauSchedule(double lr0, double floor0) : lr(lr0), floor(floor0) {}
  void observe(double mean_loss) {
    if (mean_loss < best - 1e-3) {
      best = mean_loss;
      stall = 0;
    } else if (++stall >= 6) {
      lr = std::max(lr * 0.5, floor);
      stall = 0;
    }
  }
};

int exact_matches(TranslationModel<D>& model, const ParallelCorpus& corpus,
                  const std::vector<EncodedPair>& pairs,
                  std::vector<TokenSentence>* outs_opt = nullptr,
                  std::vector<TokenSentence>* refs_opt = nullptr) {
  int exact = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    BeamResult r = word_beam_translate(model, pairs[i].source, 5, 5, 10);
    auto out = result_to_words(model, r);
    TokenSentence ref;
    for (const auto& w : corpus.pairs[i].target) ref.push_back(w.text);
    if (out == ref) ++exact;
    if (outs_opt) outs_opt->push_back(std::move(out));
    if (refs_opt) refs_opt->push_back(std::move(ref));
  }
  return exact;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: gradient correctness") {
  const auto t0 = Clock::now();
  const auto reports = gradient_check_suite<double>(1, 1e-5, 25);
  double worst = 0;
  std::string worst_name;
  REQUIRE(reports.size() == 7);
  for (const auto& r : reports) {
    CHECK(r.max_rel_error < 1e-4);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = r.component;
    }
  }
  const double secs = seconds_since(t0);
  CHECK(secs < 60.0);
  const bool pass = worst < 1e-4 && secs < 60.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max rel err %.2e in %s, %.1f s", worst,
                worst_name.c_str(), secs);
  report(1, "gradient correctness", pass, buf);
}

TEST_CASE("criterion 2: distribution sanity") {
  int trials = 0;
  double worst_dev = 0;
  for (std::uint64_t model_seed = 1; model_seed <= 20; ++model_seed) {
    ModelConfig cfg = tiny_config(model_seed);
    CorpusVocabs vocabs = make_vocabs({"u", "v", "w"}, {"x", "y", "z"}, "uvw", "xyz");
    TranslationModel<D> model(cfg, ModelKind::kChar, vocabs);
    model.set_projection(Projection::kC2w);
    Rng rng(model_seed * 77 + 1);
    for (int t = 0; t < 50; ++t) {
      ++trials;
      Graph<D> g;
      const int n = 1 + static_cast<int>(rng.below(5));
      std::vector<Expr> b;
      for (int i = 0; i < n; ++i)
        b.push_back(g.input(Tensor<D>::uniform({cfg.d_z}, rng, -2, 2)));
      Expr l = g.input(Tensor<D>::uniform({cfg.d_lstm}, rng, -2, 2));
      auto att = attend(g, model.attention(), l, b);
      double total = 0;
      for (int i = 0; i < n; ++i) total += g.value(att.coeffs)[i];
      worst_dev = std::max(worst_dev, std::abs(total - 1));

      V2cStep<D> step = v2c_step(g, model.v2c(), ids::kSow, att.context, l,
                                 lstm_zero_state(g, model.v2c().lstm));
      Expr probs = v2c_probs(g, step.scores);
      total = 0;
      for (int i = 0; i < g.value(probs).size(); ++i) total += g.value(probs)[i];
      worst_dev = std::max(worst_dev, std::abs(total - 1));
    }
  }
  // word softmax sums on a word-mode model
  for (std::uint64_t model_seed = 1; model_seed <= 20; ++model_seed) {
    ModelConfig cfg = tiny_config(model_seed);
    CorpusVocabs vocabs = make_vocabs({"u", "v", "w"}, {"x", "y", "z"}, "uvw", "xyz");
    TranslationModel<D> model(cfg, ModelKind::kWord, vocabs);
    Rng rng(model_seed * 91 + 5);
    for (int t = 0; t < 50; ++t) {
      Graph<D> g;
      Expr probs = word_softmax(g, model.softmax(),
                                g.input(Tensor<D>::uniform({cfg.d_z}, rng, -2, 2)),
                                g.input(Tensor<D>::uniform({cfg.d_lstm}, rng, -2, 2)));
      double total = 0;
      for (int i = 0; i < g.value(probs).size(); ++i) total += g.value(probs)[i];
      worst_dev = std::max(worst_dev, std::abs(total - 1));
    }
  }
  CHECK(trials == 1000);
  CHECK(worst_dev < 1e-9);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d randomized trials, worst |sum-1| = %.2e",
                trials, worst_dev);
  report(2, "distribution sanity", worst_dev < 1e-9, buf);
}

TEST_CASE("criterion 3: V2C normalization oracle") {
  // 2-letter alphabet; enumerate every word of up to 3 interior characters
  // with EOW forced at the cap.
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig cfg = tiny_config(seed);
    CorpusVocabs vocabs = make_vocabs({"x"}, {"y"}, "ab", "ab");
    TranslationModel<D> model(cfg, ModelKind::kChar, vocabs);
    const int n_chars = vocabs.tgt_chars.size();  // 4 reserved + a + b

    Graph<D> g;
    Rng rng(seed + 100);
    Expr ctx = g.input(Tensor<D>::uniform({cfg.d_z}, rng, -1, 1));
    Expr state = g.input(Tensor<D>::uniform({cfg.d_lstm}, rng, -1, 1));

    double total = 0;
    // words shorter than the cap, scored by the word scorer itself
    std::vector<std::vector<int>> frontier = {{}};
    for (int len = 0; len < 3; ++len) {
      std::vector<std::vector<int>> next;
      for (const auto& interior : frontier) {
        std::vector<int> word = {ids::kSow};
        word.insert(word.end(), interior.begin(), interior.end());
        word.push_back(ids::kEow);
        total += std::exp(g.scalar(v2c_word_logprob(g, model.v2c(), word, ctx, state)));
        for (int c = 0; c < n_chars; ++c) {
          if (c == ids::kEow) continue;
          auto ext = interior;
          ext.push_back(c);
          next.push_back(std::move(ext));
        }
      }
      frontier = std::move(next);
    }
    // length-3 words with the EOW factor replaced by 1
    for (const auto& interior : frontier) {
      double logp = 0;
      LstmState<D> s = lstm_zero_state(g, model.v2c().lstm);
      int prev = ids::kSow;
      for (const int c : interior) {
        V2cStep<D> step = v2c_step(g, model.v2c(), prev, ctx, state, s);
        logp += std::log(g.value(v2c_probs(g, step.scores))[c]);
        s = step.state;
        prev = c;
      }
      total += std::exp(logp);
    }
    worst = std::max(worst, std::abs(total - 1));
  }
  CHECK(worst < 1e-9);
  char buf[96];
  std::snprintf(buf, sizeof buf, "5 random models, worst |sum-1| = %.2e", worst);
  report(3, "V2C normalization oracle", worst < 1e-9, buf);
}

TEST_CASE("criterion 4: beam-search oracle equivalence") {
  const auto t0 = Clock::now();
  int agreements = 0;
  const int draws = 50;
  double worst_gap = 0;
  for (std::uint64_t seed = 1; seed <= draws; ++seed) {
    ModelConfig cfg = tiny_config(seed);
    cfg.max_word_len = 3;
    cfg.max_sent_len = 2;
    CorpusVocabs vocabs = make_vocabs({"p", "q"}, {"y"}, "pq", "ab");
    TranslationModel<D> model(cfg, ModelKind::kChar, vocabs);
    EncodedSentence src = encode_source_words(
        {"p", "q"}, vocabs.src_words, &vocabs.src_chars);

    // brute force over every sentence of at most two words, words being
    // nonempty strings over {a, b} of length at most 3
    std::vector<std::vector<int>> words;
    std::vector<std::vector<int>> frontier = {{}};
    for (int len = 1; len <= cfg.max_word_len; ++len) {
      std::vector<std::vector<int>> next;
      for (const auto& w : frontier)
        for (int c = ids::kReserved; c < vocabs.tgt_chars.size(); ++c) {
          auto ext = w;
          ext.push_back(c);
          words.push_back(ext);
          next.push_back(std::move(ext));
        }
      frontier = std::move(next);
    }

    double best_lp = -1e300;
    std::vector<std::vector<int>> best_key;
    std::function<void(std::vector<WordCandidate>&, int)> extend =
        [&](std::vector<WordCandidate>& prefix, int remaining) {
          const double lp = sequence_logprob(model, src, prefix);
          auto key = detail::sequence_key(prefix);
          if (lp > best_lp + 1e-12 ||
              (std::abs(lp - best_lp) <= 1e-12 && key < best_key)) {
            best_lp = lp;
            best_key = std::move(key);
          }
          if (remaining == 0) return;
          for (const auto& chars : words) {
            WordCandidate c;
            c.chars = chars;
            prefix.push_back(std::move(c));
            extend(prefix, remaining - 1);
            prefix.pop_back();
          }
        };
    std::vector<WordCandidate> prefix;
    extend(prefix, cfg.max_sent_len);

    BeamResult beam = word_beam_translate(model, src, 256, 64, cfg.max_sent_len);
    const double gap = std::abs(beam.logprob - best_lp);
    worst_gap = std::max(worst_gap, gap);
    if (gap < 1e-9 && detail::sequence_key(beam.words) == best_key) ++agreements;
  }
  const double secs = seconds_since(t0);
  CHECK(agreements == draws);
  CHECK(secs < 120.0);
  const bool pass = agreements == draws && secs < 120.0;
  char buf[120];
  std::snprintf(buf, sizeof buf, "%d/%d argmax agreements, worst gap %.1e, %.1f s",
                agreements, draws, worst_gap, secs);
  report(4, "beam-search oracle equivalence", pass, buf);
}

TEST_CASE("criterion 5: overfit on the copy task") {
  const auto t0 = Clock::now();
  CopyTask task;
  ModelConfig cfg = halved_config(1);
  CorpusVocabs vocabs = vocabs_from_corpus(task.train);
  TranslationModel<D> model(cfg, ModelKind::kChar, vocabs);
  auto pairs = encode_corpus(task.train, vocabs, true);

  Rng rng(2);
  int epochs = 0;
  double ppl = 1e18, score = 0;
  bool pass = false;

  // stage A: word lookups
  model.set_projection(Projection::kLookup);
  PlateauSchedule sched_a(0.5, 0.5 / 8);
  for (int e = 1; e <= 120 && epochs < 200; ++e) {
    sched_a.observe(sgd_epoch(model, pairs, 5, sched_a.lr, rng));
    ++epochs;
    if (e % 5 == 0 && corpus_loss(model, pairs).char_perplexity() < 1.01) break;
  }

  // stage B: distill both C2W models against the learned lookups
  auto src_words = distillation_words<D>(vocabs.src_words, vocabs.src_chars);
  auto tgt_words = distillation_words<D>(vocabs.tgt_words, vocabs.tgt_chars);
  distill_c2w(model.store(), model.source().c2w, *model.source().lookup, src_words,
              3000, 1.0);
  distill_c2w(model.store(), model.target().c2w, *model.target().lookup, tgt_words,
              1500, 1.0);

  // stage C: swap to character compositions and fine-tune
  model.swap_to_c2w();
  PlateauSchedule sched_c(0.3, 0.3 / 8);
  while (epochs < 200) {
    sched_c.observe(sgd_epoch(model, pairs, 5, sched_c.lr, rng));
    ++epochs;
    if (epochs % 5 != 0) continue;
    ppl = corpus_loss(model, pairs).char_perplexity();
    if (ppl >= 1.05) continue;
    std::vector<TokenSentence> outs, refs;
    exact_matches(model, task.train, pairs, &outs, &refs);
    score = bleu(outs, refs).bleu;
    if (score >= 99.0) {
      pass = true;
      break;
    }
  }
  const double secs = seconds_since(t0);
  CHECK(pass);
  CHECK(ppl < 1.05);
  CHECK(score >= 99.0);
  CHECK(epochs <= 200);
  CHECK(secs < 600.0);
  char buf[140];
  std::snprintf(buf, sizeof buf,
                "per-char perplexity %.4f, train BLEU %.2f at epoch %d, %.0f s", ppl,
                score, epochs, secs);
  report(5, "overfit on the copy task", pass && secs < 600.0, buf);
}

TEST_CASE("criterion 7: layer-wise pipeline") {
  CopyTask task;
  ModelConfig cfg = halved_config(1);
  CorpusVocabs vocabs = vocabs_from_corpus(task.train);
  TranslationModel<D> model(cfg, ModelKind::kChar, vocabs);
  auto pairs = encode_corpus(task.train, vocabs, true);
  auto dev_pairs = encode_corpus(task.dev, vocabs, true);

  // stage A
  Rng rng(3);
  model.set_projection(Projection::kLookup);
  PlateauSchedule sched(0.5, 0.5 / 8);
  for (int e = 1; e <= 110; ++e) {
    sched.observe(sgd_epoch(model, pairs, 5, sched.lr, rng));
    if (e % 5 == 0 && corpus_loss(model, pairs).char_perplexity() < 1.01) break;
  }
  const double stage_a_dev = corpus_loss(model, dev_pairs).mean_per_pair();

  // stage B
  auto src_words = distillation_words<D>(vocabs.src_words, vocabs.src_chars);
  auto tgt_words = distillation_words<D>(vocabs.tgt_words, vocabs.tgt_chars);
  DistillResult src = distill_c2w(model.store(), model.source().c2w,
                                  *model.source().lookup, src_words, 3000, 1.0);
  DistillResult tgt = distill_c2w(model.store(), model.target().c2w,
                                  *model.target().lookup, tgt_words, 1500, 1.0);
  const double src_ratio = src.initial_mse / std::max(src.final_mse, 1e-300);
  const double tgt_ratio = tgt.initial_mse / std::max(tgt.final_mse, 1e-300);
  CHECK(src_ratio >= 100.0);
  CHECK(tgt_ratio >= 100.0);

  // swap and measure the immediate degradation
  model.swap_to_c2w();
  const double post_swap_dev = corpus_loss(model, dev_pairs).mean_per_pair();
  const double increase = post_swap_dev / stage_a_dev - 1.0;
  CHECK(increase < 0.25);

  const bool pass = src_ratio >= 100.0 && tgt_ratio >= 100.0 && increase < 0.25;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "distill mse x%.0f (src) x%.0f (tgt); dev loss %.4f -> %.4f (%+.1f%%)",
                src_ratio, tgt_ratio, stage_a_dev, post_swap_dev, increase * 100);
  report(7, "layer-wise pipeline", pass, buf);
}

TEST_CASE("criterion 8: attention supervision") {
  // ten-word dictionary, monotone word-for-word translation with identity
  // alignments
  Rng gen(55);
  std::vector<std::string> src_words, tgt_words;
  for (int i = 0; i < 10; ++i) {
    src_words.push_back("s" + std::to_string(i));
    tgt_words.push_back("t" + std::to_string(i));
  }
  std::vector<std::pair<std::string, std::string>> lines;
  for (int i = 0; i < 30; ++i) {
    std::string s, t;
    for (int j = 0; j < 3; ++j) {
      const int w = static_cast<int>(gen.below(10));
      if (j) {
        s += ' ';
        t += ' ';
      }
      s += src_words[w];
      t += tgt_words[w];
    }
    lines.push_back({s, t});
  }
  ParallelCorpus corpus = corpus_from_lines(lines);
  for (auto& pair : corpus.pairs)
    for (int j = 0; j < 3; ++j) pair.alignment[j] = j;

  auto mean_aligned_coeff = [&](TranslationModel<D>& model,
                                const std::vector<EncodedPair>& pairs) {
    double total = 0;
    long long count = 0;
    for (const auto& pair : pairs) {
      Graph<D> g;
      auto src = model.build_source_context(g, pair.source);
      LstmState<D> state = model.advance_target(g, pair.target.words[0],
                                                model.initial_target_state(g));
      for (std::size_t p = 1; p + 1 < pair.target.words.size(); ++p) {
        auto att = model.attend_source(g, state.h, src);
        const auto it = pair.alignment.find(static_cast<int>(p) - 1);
        if (it != pair.alignment.end()) {
          total += g.value(att.coeffs)[it->second + 1];
          ++count;
        }
        state = model.advance_target(g, pair.target.words[p], state);
      }
    }
    return total / static_cast<double>(count);
  };

  int wins = 0;
  std::vector<std::pair<double, double>> measurements;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double coeff[2] = {0, 0};
    for (const double lambda : {1.0, 0.0}) {
      ModelConfig cfg = tiny_config(seed);
      cfg.d_lstm = 16;
      cfg.d_sw = 8;
      cfg.d_tw = 8;
      cfg.d_z = 12;
      CorpusVocabs vocabs = vocabs_from_corpus(corpus);
      TranslationModel<D> model(cfg, ModelKind::kWord, vocabs);
      auto pairs = encode_corpus(corpus, vocabs, false);
      LossOptions opt;
      opt.supervision_weight = lambda;
      Rng rng(seed + 10);
      for (int e = 0; e < 50; ++e) sgd_epoch(model, pairs, 5, 0.3, rng, opt);
      coeff[lambda > 0 ? 0 : 1] = mean_aligned_coeff(model, pairs);
    }
    measurements.push_back({coeff[0], coeff[1]});
    if (coeff[0] > coeff[1]) ++wins;
  }
  CHECK(wins >= 4);
  std::ostringstream detail;
  detail << wins << "/5 seeds supervised > unsupervised;";
  for (const auto& [sup, unsup] : measurements) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " %.3f vs %.3f", sup, unsup);
    detail << buf;
  }
  report(8, "attention supervision", wins >= 4, detail.str());
}

TEST_CASE("criterion 9: BLEU unit correctness") {
  const std::vector<TokenSentence> ref = {
      {"the", "cat", "sat", "on", "the", "mat"},
      {"time", "flies", "like", "an", "arrow"}};
  const double identity = bleu(ref, ref).bleu;

  const std::vector<TokenSentence> disjoint = {
      {"dog", "ran", "far", "away", "today", "again"},
      {"fruit", "stands", "near", "a", "target"}};
  const double zero = bleu(disjoint, ref).bleu;

  const std::vector<TokenSentence> repeated = {
      {"the", "the", "the", "the", "the", "the", "the"}};
  const std::vector<TokenSentence> single_ref = {
      {"the", "cat", "is", "on", "the", "mat"}};
  const BleuReport clipped = bleu(repeated, single_ref);

  CHECK(identity == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(zero == 0.0);
  CHECK(clipped.precisions[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  const bool pass = identity == doctest::Approx(100.0).epsilon(1e-12) &&
                    zero == 0.0 &&
                    clipped.precisions[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-12);
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "identity %.1f, disjoint %.1f, clipped p1 %.6f = 2/7", identity,
                zero, clipped.precisions[0]);
  report(9, "BLEU unit correctness", pass, buf);
}

TEST_CASE("criterion 10: determinism") {
  TempDir tmp;
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };

  CopyTask task(12, 4);
  std::vector<std::string> train_src, train_tgt, dev_src, dev_tgt;
  for (const auto& p : task.train.pairs) {
    std::string s;
    for (const auto& w : p.source) s += (s.empty() ? "" : " ") + w.text;
    train_src.push_back(s);
    train_tgt.push_back(s);
  }
  for (const auto& p : task.dev.pairs) {
    std::string s;
    for (const auto& w : p.source) s += (s.empty() ? "" : " ") + w.text;
    dev_src.push_back(s);
    dev_tgt.push_back(s);
  }

  auto make_run = [&](const std::string& tag) {
    nlohmann::json j = {{"mode", "char"},    {"precision", "float32"},
                        {"d_lstm", 10},      {"d_sw", 6},
                        {"d_tw", 6},         {"d_sc", 5},
                        {"d_tc", 5},         {"d_z", 8},
                        {"k_w", 2},          {"k_c", 2},
                        {"batch_size", 4},   {"patience_epochs", 2},
                        {"max_epochs", 3},   {"distill_epochs", 15},
                        {"learning_rate", 0.4}, {"seed", 20},
                        {"min_count", 1},
                        {"train_src", tmp.file(tag + ".train.src", train_src)},
                        {"train_tgt", tmp.file(tag + ".train.tgt", train_tgt)},
                        {"dev_src", tmp.file(tag + ".dev.src", dev_src)},
                        {"dev_tgt", tmp.file(tag + ".dev.tgt", dev_tgt)},
                        {"vocab", tmp.path(tag + ".vocab")},
                        {"checkpoint_dir", tmp.path(tag + ".ckpt")}};
    const std::string cfg_path = tmp.path(tag + ".json");
    std::ofstream out(cfg_path);
    out << j.dump(2);
    return cfg_path;
  };

  auto run_cli = [](const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"charmt"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  };

  const std::string cfg_a = make_run("a");
  const std::string cfg_b = make_run("b");
  REQUIRE(run_cli({"build-vocab", "--config", cfg_a}) == 0);
  REQUIRE(run_cli({"build-vocab", "--config", cfg_b}) == 0);
  REQUIRE(run_cli({"train", "--config", cfg_a}) == 0);
  REQUIRE(run_cli({"train", "--config", cfg_b}) == 0);
  const std::string ckpt_a = slurp(tmp.path("a.ckpt") + "/model.final.ckpt");
  const std::string ckpt_b = slurp(tmp.path("b.ckpt") + "/model.final.ckpt");
  const bool ckpt_identical = ckpt_a == ckpt_b;
  CHECK(ckpt_identical);

  const std::string input = tmp.file("in.txt", {train_src[0], train_src[1], "zz qq"});
  REQUIRE(run_cli({"translate", "--config", cfg_a, "--checkpoint",
                   tmp.path("a.ckpt") + "/model.final.ckpt", "--input", input,
                   "--output", tmp.path("out1.txt")}) == 0);
  REQUIRE(run_cli({"translate", "--config", cfg_a, "--checkpoint",
                   tmp.path("a.ckpt") + "/model.final.ckpt", "--input", input,
                   "--output", tmp.path("out2.txt")}) == 0);
  const bool outputs_identical = slurp(tmp.path("out1.txt")) == slurp(tmp.path("out2.txt"));
  CHECK(outputs_identical);

  char buf[120];
  std::snprintf(buf, sizeof buf,
                "checkpoints byte-identical: %s; translations identical: %s",
                ckpt_identical ? "yes" : "no", outputs_identical ? "yes" : "no");
  report(10, "determinism", ckpt_identical && outputs_identical, buf);
}

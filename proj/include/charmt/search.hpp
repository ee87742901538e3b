#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "charmt/model.hpp"

namespace charmt {

// One word proposed by the character-level beam (or by the word softmax).
// A candidate is either the sentence terminator or a nonempty sequence of
// interior characters; empty words are never proposed.
struct WordCandidate {
  std::vector<int> chars;  // interior character ids, char model
  int word_id = -1;        // word baseline
  bool is_eos = false;
  double logprob = 0;

  // Deterministic tie-break key: the emitted sequence itself.
  std::vector<int> key() const {
    if (is_eos) return {ids::kEosChar};
    if (word_id >= 0 && chars.empty()) return {word_id};
    return chars;
  }
};

// Beam state while generating one word character by character.
template <typename S>
struct CharHypothesis {
  std::vector<int> chars;  // emitted interior characters (after SOW)
  double logprob = 0;
  LstmState<S> state;  // V2C recurrence, expressions in the expansion graph
  int prev_char = ids::kSow;
};

struct CharBeamResult {
  std::vector<WordCandidate> words;  // sorted by logprob desc, ties by sequence
  bool truncated = false;            // fewer than k_w words were reachable
};

// Beam state over whole words.
template <typename S>
struct WordHypothesis {
  std::vector<WordCandidate> words;
  double logprob = 0;
  Tensor<S> state_h, state_c;  // target context LSTM after the emitted prefix
  bool finished = false;
};

struct BeamResult {
  std::vector<WordCandidate> words;  // the translation, terminator excluded
  double logprob = 0;
  bool truncated = false;
};

namespace detail {

inline bool candidate_before(const WordCandidate& a, const WordCandidate& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.key() < b.key();
}

inline std::vector<std::vector<int>> sequence_key(
    const std::vector<WordCandidate>& words) {
  std::vector<std::vector<int>> key;
  key.reserve(words.size());
  for (const auto& w : words) key.push_back(w.key());
  return key;
}

}  // namespace detail

// Inner beam: proposes finished words for one target position. Runs with
// width k_c until k_w finished words exist or every active hypothesis hits
// the word length cap. SOW, UNK and mid-word EOS are never valid
// continuations; EOS at the first step proposes the sentence terminator.
template <typename S>
CharBeamResult char_beam_expand(TranslationModel<S>& model, const Tensor<S>& context,
                                const Tensor<S>& target_state, int k_c, int k_w,
                                int max_word_len) {
  require(k_c >= 1 && k_w >= 1, "beam widths must be at least 1");
  V2cParams<S>& v2c = model.v2c();
  Graph<S> g;
  Expr ctx = g.input(context);
  Expr tstate = g.input(target_state);

  std::vector<CharHypothesis<S>> active;
  active.push_back({{}, 0.0, lstm_zero_state(g, v2c.lstm), ids::kSow});
  CharBeamResult result;

  // Runs until k_w finished words exist that no active prefix can still
  // beat; extending a prefix only lowers its log probability.
  auto search_done = [&]() {
    if (active.empty()) return true;
    if (static_cast<int>(result.words.size()) < k_w) return false;
    std::vector<double> scores;
    scores.reserve(result.words.size());
    for (const auto& w : result.words) scores.push_back(w.logprob);
    std::nth_element(scores.begin(), scores.begin() + (k_w - 1), scores.end(),
                     std::greater<double>());
    double best_active = -1e300;
    for (const auto& h : active) best_active = std::max(best_active, h.logprob);
    return scores[k_w - 1] >= best_active;
  };

  while (!search_done()) {
    // Pool finish events and extensions together so that finishing competes
    // with the beam: a finish only counts when it outranks the k_c-th
    // surviving extension. Finished words do not consume beam slots.
    struct Candidate {
      CharHypothesis<S> ext;  // populated when finish == false
      WordCandidate done;
      bool finish = false;
      double logprob = 0;
      std::vector<int> key;
    };
    std::vector<Candidate> pool;
    for (CharHypothesis<S>& hyp : active) {
      V2cStep<S> step = v2c_step(g, v2c, hyp.prev_char, ctx, tstate, hyp.state);
      const Tensor<S>& probs = g.value(v2c_probs(g, step.scores));
      for (int c = 0; c < probs.size(); ++c) {
        const double lp = hyp.logprob + std::log(static_cast<double>(probs[c]));
        Candidate cand;
        cand.logprob = lp;
        if (c == ids::kEow) {
          if (hyp.chars.empty()) continue;  // an empty word is not a word
          cand.finish = true;
          cand.done.chars = hyp.chars;
          cand.done.logprob = lp;
          cand.key = cand.done.key();
        } else if (c == ids::kEosChar) {
          if (!hyp.chars.empty()) continue;
          cand.finish = true;
          cand.done.is_eos = true;
          cand.done.logprob = lp;
          cand.key = cand.done.key();
        } else if (c >= ids::kReserved &&
                   static_cast<int>(hyp.chars.size()) < max_word_len) {
          cand.ext.chars = hyp.chars;
          cand.ext.chars.push_back(c);
          cand.ext.logprob = lp;
          cand.ext.state = step.state;
          cand.ext.prev_char = c;
          cand.key = cand.ext.chars;
        } else {
          continue;
        }
        pool.push_back(std::move(cand));
      }
    }
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (a.finish != b.finish) return a.finish;  // finals first on exact ties
      return a.key < b.key;
    });
    std::vector<CharHypothesis<S>> next;
    for (Candidate& cand : pool) {
      if (static_cast<int>(next.size()) >= k_c) break;  // rest is pruned
      if (cand.finish)
        result.words.push_back(std::move(cand.done));
      else
        next.push_back(std::move(cand.ext));
    }
    active = std::move(next);
  }

  std::sort(result.words.begin(), result.words.end(), detail::candidate_before);
  result.truncated = static_cast<int>(result.words.size()) < k_w;
  return result;
}

namespace detail {

// Source-side values exported from the encoding graph so each decoding step
// can run in its own small graph.
template <typename S>
struct SourceSnapshot {
  std::vector<Tensor<S>> b;
  std::vector<Tensor<S>> proj;
};

template <typename S>
SourceSnapshot<S> snapshot_source(TranslationModel<S>& model,
                                  const EncodedSentence& src) {
  Graph<S> g;
  auto ctx = model.build_source_context(g, src);
  SourceSnapshot<S> snap;
  for (const Expr b : ctx.b) snap.b.push_back(g.value(b));
  for (const Expr p : ctx.proj) snap.proj.push_back(g.value(p));
  return snap;
}

template <typename S>
AttentionResult<S> attend_snapshot(Graph<S>& g, TranslationModel<S>& model,
                                   const SourceSnapshot<S>& snap, Expr state_h) {
  std::vector<Expr> b, proj;
  for (const auto& t : snap.b) b.push_back(g.input(t));
  for (const auto& t : snap.proj) proj.push_back(g.input(t));
  return attend(g, model.attention(), state_h, b, proj);
}

// Lifts a proposed candidate into the encoded-word form the target side
// consumes; novel character words fall back to UNK for the lookup path.
template <typename S>
EncodedWord candidate_to_word(const TranslationModel<S>& model,
                              const WordCandidate& cand) {
  EncodedWord w;
  if (cand.is_eos) {
    w.word_id = ids::kEos;
    w.is_eos = true;
    w.char_ids = eos_word_char_ids();
    return w;
  }
  if (cand.word_id >= 0 && cand.chars.empty()) {
    w.word_id = cand.word_id;
    return w;
  }
  std::string text;
  for (const int c : cand.chars) text += model.vocabs().tgt_chars.decode(c);
  w.word_id = model.vocabs().tgt_words.encode(text);
  w.char_ids.reserve(cand.chars.size() + 2);
  w.char_ids.push_back(ids::kSow);
  w.char_ids.insert(w.char_ids.end(), cand.chars.begin(), cand.chars.end());
  w.char_ids.push_back(ids::kEow);
  return w;
}

}  // namespace detail

// Outer beam over target words. Word candidates come from the softmax in
// word mode and from the character beam in char mode. A hypothesis is final
// once it generates EOS; finished hypotheses are frozen and do not consume
// expansion slots. Scores are raw log probabilities unless length
// normalization is requested.
template <typename S>
BeamResult word_beam_translate(TranslationModel<S>& model, const EncodedSentence& src,
                               int k_w, int k_c, int max_sent_len,
                               bool length_normalize = false) {
  require(k_w >= 1 && k_c >= 1, "beam widths must be at least 1");
  require(src.real_words() >= 1, "empty source sentence");

  const auto snap = detail::snapshot_source(model, src);

  auto rank_score = [&](const WordHypothesis<S>& h) {
    if (!length_normalize) return h.logprob;
    return h.logprob / static_cast<double>(h.words.size() + 1);
  };

  std::vector<WordHypothesis<S>> active;
  {
    Graph<S> g;
    EncodedWord sos;
    sos.word_id = ids::kSos;
    sos.is_sos = true;
    LstmState<S> s = model.advance_target(g, sos, model.initial_target_state(g));
    WordHypothesis<S> init;
    init.state_h = g.value(s.h);
    init.state_c = g.value(s.c);
    active.push_back(std::move(init));
  }

  std::vector<WordHypothesis<S>> finished;
  double best_finished = -1e300;
  for (int step = 0; step < max_sent_len + 1; ++step) {
    if (active.empty()) break;
    if (!length_normalize) {
      // Extending a hypothesis can only lower its log probability, so once
      // the best finished sentence outranks every active prefix the search
      // is exact and can stop.
      double best_active = -1e300;
      for (const auto& h : active) best_active = std::max(best_active, h.logprob);
      if (best_finished >= best_active) break;
    } else if (static_cast<int>(finished.size()) >= k_w) {
      break;
    }

    struct Expansion {
      int hyp;
      WordCandidate cand;
      double total;
      std::vector<std::vector<int>> key;
    };
    std::vector<Expansion> expansions;

    for (std::size_t hi = 0; hi < active.size(); ++hi) {
      WordHypothesis<S>& hyp = active[hi];
      Graph<S> g;
      auto att = detail::attend_snapshot(g, model, snap, g.input(hyp.state_h));
      std::vector<WordCandidate> cands;
      if (model.kind() == ModelKind::kChar) {
        cands = char_beam_expand(model, g.value(att.context), hyp.state_h, k_c, k_w,
                                 model.config().max_word_len)
                    .words;
      } else {
        Expr probs = word_softmax(g, model.softmax(), att.context,
                                  g.input(hyp.state_h));
        const Tensor<S>& p = g.value(probs);
        for (int id = 0; id < p.size(); ++id) {
          if (id == ids::kSos || id == ids::kPad) continue;
          WordCandidate c;
          if (id == ids::kEos)
            c.is_eos = true;
          else
            c.word_id = id;
          c.logprob = std::log(static_cast<double>(p[id]));
          cands.push_back(std::move(c));
        }
        std::sort(cands.begin(), cands.end(), detail::candidate_before);
        if (static_cast<int>(cands.size()) > k_w) cands.resize(k_w);
      }
      for (WordCandidate& c : cands) {
        Expansion e;
        e.hyp = static_cast<int>(hi);
        e.total = hyp.logprob + c.logprob;
        e.cand = std::move(c);
        auto key = detail::sequence_key(hyp.words);
        key.push_back(e.cand.key());
        e.key = std::move(key);
        expansions.push_back(std::move(e));
      }
    }

    std::sort(expansions.begin(), expansions.end(),
              [](const Expansion& a, const Expansion& b) {
                if (a.total != b.total) return a.total > b.total;
                return a.key < b.key;
              });

    // Walk the ranked pool: EOS events above the k_w-th surviving extension
    // become finals without consuming beam slots; everything below the
    // filled beam is pruned. At the length cap only finals are harvested.
    const bool harvest_only = step == max_sent_len;
    std::vector<WordHypothesis<S>> next;
    int taken = 0;
    for (Expansion& e : expansions) {
      if (taken >= k_w) break;
      const WordHypothesis<S>& parent = active[e.hyp];
      if (e.cand.is_eos) {
        WordHypothesis<S> fin;
        fin.words = parent.words;
        fin.logprob = e.total;
        fin.finished = true;
        best_finished = std::max(best_finished, e.total);
        finished.push_back(std::move(fin));
        continue;
      }
      ++taken;
      if (harvest_only) continue;
      WordHypothesis<S> ext;
      ext.words = parent.words;
      ext.words.push_back(e.cand);
      ext.logprob = e.total;
      Graph<S> g;
      LstmState<S> s = model.advance_target(
          g, detail::candidate_to_word(model, e.cand),
          lstm_state_from(g, parent.state_h, parent.state_c));
      ext.state_h = g.value(s.h);
      ext.state_c = g.value(s.c);
      next.push_back(std::move(ext));
    }
    if (!harvest_only) active = std::move(next);
  }

  auto better = [&](const WordHypothesis<S>& a, const WordHypothesis<S>& b) {
    const double sa = rank_score(a), sb = rank_score(b);
    if (sa != sb) return sa > sb;
    return detail::sequence_key(a.words) < detail::sequence_key(b.words);
  };

  BeamResult out;
  if (!finished.empty()) {
    const auto& best = *std::min_element(
        finished.begin(), finished.end(),
        [&](const auto& a, const auto& b) { return better(a, b); });
    out.words = best.words;
    out.logprob = best.logprob;
  } else {
    require(!active.empty(), "beam search lost every hypothesis");
    const auto& best = *std::min_element(
        active.begin(), active.end(),
        [&](const auto& a, const auto& b) { return better(a, b); });
    out.words = best.words;
    out.logprob = best.logprob;
    out.truncated = true;
  }
  return out;
}

// Renders a beam result as output tokens.
template <typename S>
std::vector<std::string> result_to_words(const TranslationModel<S>& model,
                                         const BeamResult& result) {
  std::vector<std::string> out;
  out.reserve(result.words.size());
  for (const auto& cand : result.words) {
    if (cand.is_eos) continue;
    if (cand.word_id >= 0 && cand.chars.empty()) {
      out.push_back(model.vocabs().tgt_words.decode(cand.word_id));
    } else {
      std::string text;
      for (const int c : cand.chars) text += model.vocabs().tgt_chars.decode(c);
      out.push_back(std::move(text));
    }
  }
  return out;
}

// Teacher-forced log probability of a full word sequence (terminator
// included implicitly); the independent check that beam scores must match.
template <typename S>
double sequence_logprob(TranslationModel<S>& model, const EncodedSentence& src,
                        const std::vector<WordCandidate>& words) {
  EncodedPair pair;
  pair.source = src;
  EncodedWord sos;
  sos.word_id = ids::kSos;
  sos.is_sos = true;
  pair.target.words.push_back(sos);
  for (const auto& c : words)
    pair.target.words.push_back(detail::candidate_to_word(model, c));
  EncodedWord eos;
  eos.word_id = ids::kEos;
  eos.is_eos = true;
  eos.char_ids = eos_word_char_ids();
  pair.target.words.push_back(eos);

  Graph<S> g;
  auto terms = model.build_nll(g, pair, {});
  return -g.scalar(terms.nll);
}

}  // namespace charmt

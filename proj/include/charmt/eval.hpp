#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "charmt/error.hpp"

namespace charmt {

// Corpus-level BLEU-4 against a single reference per sentence.
struct BleuReport {
  double bleu = 0;                     // 0..100
  double precisions[4] = {0, 0, 0, 0};  // clipped n-gram precisions
  double brevity_penalty = 0;
  long long candidate_length = 0;
  long long reference_length = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"bleu", bleu},
                          {"p1", precisions[0]},
                          {"p2", precisions[1]},
                          {"p3", precisions[2]},
                          {"p4", precisions[3]},
                          {"brevity_penalty", brevity_penalty},
                          {"candidate_length", candidate_length},
                          {"reference_length", reference_length}};
  }
};

using TokenSentence = std::vector<std::string>;

namespace detail {

inline std::map<std::vector<std::string>, long long> ngram_counts(
    const TokenSentence& sent, int n) {
  std::map<std::vector<std::string>, long long> counts;
  if (static_cast<int>(sent.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= sent.size(); ++i)
    ++counts[std::vector<std::string>(sent.begin() + i, sent.begin() + i + n)];
  return counts;
}

}  // namespace detail

// Unsmoothed by default: any zero n-gram precision gives BLEU 0. The
// smoothed variant adds one to zero match counts, for tiny test corpora only.
inline BleuReport bleu(const std::vector<TokenSentence>& candidates,
                       const std::vector<TokenSentence>& references,
                       bool smooth = false) {
  require(!candidates.empty(), "empty candidate list");
  require(candidates.size() == references.size(),
          "candidate/reference count mismatch");

  BleuReport report;
  long long matches[4] = {0, 0, 0, 0};
  long long totals[4] = {0, 0, 0, 0};
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    report.candidate_length += static_cast<long long>(candidates[s].size());
    report.reference_length += static_cast<long long>(references[s].size());
    for (int n = 1; n <= 4; ++n) {
      const auto cand = detail::ngram_counts(candidates[s], n);
      const auto ref = detail::ngram_counts(references[s], n);
      for (const auto& [gram, count] : cand) {
        totals[n - 1] += count;
        const auto it = ref.find(gram);
        if (it != ref.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_precision_sum = 0;
  bool any_zero = false;
  for (int n = 0; n < 4; ++n) {
    double m = static_cast<double>(matches[n]);
    const double t = static_cast<double>(totals[n]);
    if (smooth && m == 0) m = 1;
    // no candidate n-grams at this order: vacuously perfect, so identical
    // corpora score 100 even when every sentence is shorter than n
    report.precisions[n] = t > 0 ? m / t : 1.0;
    if (report.precisions[n] == 0)
      any_zero = true;
    else
      log_precision_sum += std::log(report.precisions[n]);
  }

  if (report.candidate_length == 0) return report;
  report.brevity_penalty =
      report.candidate_length < report.reference_length
          ? std::exp(1.0 - static_cast<double>(report.reference_length) /
                               static_cast<double>(report.candidate_length))
          : 1.0;
  if (any_zero) return report;  // bleu stays 0
  report.bleu = 100.0 * report.brevity_penalty * std::exp(log_precision_sum / 4);
  return report;
}

// ---------------------------------------------------------------------------
// Cosine nearest neighbors over word embeddings.

struct Neighbor {
  std::string word;
  double similarity = 0;
};

inline double cosine_similarity(const std::vector<double>& a,
                                const std::vector<double>& b) {
  require(a.size() == b.size(), "cosine over mismatched dimensions");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;  // zero-norm vectors are similar to nothing
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Top-k neighbors of a query among candidate (word, vector) rows, excluding
// the query token itself. Ties break lexicographically.
inline std::vector<Neighbor> nearest_neighbors(
    const std::string& query, const std::vector<double>& query_vec,
    const std::vector<std::pair<std::string, std::vector<double>>>& vocabulary,
    int k) {
  require(k >= 1, "k must be at least 1");
  std::vector<Neighbor> scored;
  scored.reserve(vocabulary.size());
  for (const auto& [word, vec] : vocabulary) {
    if (word == query) continue;
    scored.push_back({word, cosine_similarity(query_vec, vec)});
  }
  std::sort(scored.begin(), scored.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.word < b.word;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

}  // namespace charmt

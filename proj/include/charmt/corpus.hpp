#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmt/error.hpp"
#include "charmt/unicode.hpp"
#include "charmt/vocab.hpp"

namespace charmt {

struct CorpusWord {
  std::string text;
  std::vector<std::uint32_t> chars;  // Unicode scalar values
};

using CorpusSentence = std::vector<CorpusWord>;

// One aligned pair. `alignment` maps a target word index to the single
// source word index it is aligned to; target words with no alignment or
// more than one are absent. Indices are 0-based over real words.
struct SentencePair {
  CorpusSentence source;
  CorpusSentence target;
  std::map<int, int> alignment;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::size_t size() const { return pairs.size(); }
};

enum class Side { kSource, kTarget };

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline CorpusSentence parse_sentence(const std::string& line, int line_no,
                                     int max_word_len, int max_sent_len) {
  require(!line.empty(), "empty line " + std::to_string(line_no));
  CorpusSentence sent;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(' ', start);
    if (end == std::string::npos) end = line.size();
    const std::string tok = line.substr(start, end - start);
    require(!tok.empty(), "blank token (doubled space?) on line " + std::to_string(line_no));
    CorpusWord w;
    w.text = tok;
    w.chars = utf8_decode(tok);
    require(static_cast<int>(w.chars.size()) <= max_word_len,
            "word longer than max_word_len on line " + std::to_string(line_no));
    sent.push_back(std::move(w));
    if (end == line.size()) break;
    start = end + 1;
  }
  require(static_cast<int>(sent.size()) <= max_sent_len,
          "sentence longer than max_sent_len on line " + std::to_string(line_no));
  return sent;
}

}  // namespace detail

// Reads two line-aligned, space-tokenized UTF-8 files into a corpus.
inline ParallelCorpus load_parallel(const std::string& src_path,
                                    const std::string& tgt_path,
                                    int max_word_len = 64,
                                    int max_sent_len = 128) {
  const auto src_lines = detail::read_lines(src_path);
  const auto tgt_lines = detail::read_lines(tgt_path);
  require(!src_lines.empty(), "empty corpus: " + src_path);
  require(src_lines.size() == tgt_lines.size(),
          "line-count mismatch: " + src_path + " has " +
              std::to_string(src_lines.size()) + " lines, " + tgt_path + " has " +
              std::to_string(tgt_lines.size()));
  ParallelCorpus corpus;
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair pair;
    pair.source = detail::parse_sentence(src_lines[i], static_cast<int>(i + 1),
                                         max_word_len, max_sent_len);
    pair.target = detail::parse_sentence(tgt_lines[i], static_cast<int>(i + 1),
                                         max_word_len, max_sent_len);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

// Word vocabulary from one corpus side: tokens with frequency >= min_count,
// ordered by (frequency desc, token asc) after the reserved ids.
inline Vocab build_word_vocab(const ParallelCorpus& corpus, Side side,
                              int min_count = 2) {
  require(min_count >= 1, "min_count must be at least 1");
  std::unordered_map<std::string, long long> freq;
  for (const auto& pair : corpus.pairs) {
    const CorpusSentence& sent = side == Side::kSource ? pair.source : pair.target;
    for (const auto& w : sent) ++freq[w.text];
  }
  std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v = Vocab::words();
  for (const auto& [tok, count] : items)
    if (count >= min_count) v.add(tok);
  return v;
}

// Character vocabulary: every scalar value seen on that side, by code point.
inline Vocab build_char_vocab(const ParallelCorpus& corpus, Side side) {
  require(!corpus.pairs.empty(), "cannot build a char vocab from an empty corpus");
  std::vector<std::uint32_t> seen;
  for (const auto& pair : corpus.pairs) {
    const CorpusSentence& sent = side == Side::kSource ? pair.source : pair.target;
    for (const auto& w : sent)
      seen.insert(seen.end(), w.chars.begin(), w.chars.end());
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  Vocab v = Vocab::chars();
  for (const std::uint32_t cp : seen) v.add(utf8_encode({cp}));
  return v;
}

// [SOS] word ids [EOS]; out-of-vocabulary words map to UNK.
inline std::vector<int> encode_sentence(const std::vector<std::string>& words,
                                        const Vocab& vocab) {
  require(vocab.is_word(), "encode_sentence needs a word vocab");
  std::vector<int> out;
  out.reserve(words.size() + 2);
  out.push_back(ids::kSos);
  for (const auto& w : words) out.push_back(vocab.encode(w));
  out.push_back(ids::kEos);
  return out;
}

// [SOW] char ids [EOW]; unseen characters map to the UNK char.
inline std::vector<int> encode_word_chars(const std::vector<std::uint32_t>& chars,
                                          const Vocab& vocab,
                                          int max_word_len = 64) {
  require(vocab.is_char(), "encode_word_chars needs a char vocab");
  require(static_cast<int>(chars.size()) <= max_word_len,
          "word longer than max_word_len");
  std::vector<int> out;
  out.reserve(chars.size() + 2);
  out.push_back(ids::kSow);
  for (const std::uint32_t cp : chars) out.push_back(vocab.encode(utf8_encode({cp})));
  out.push_back(ids::kEow);
  return out;
}

// The sentence terminator is a word whose only character is EOS.
inline std::vector<int> eos_word_char_ids() { return {ids::kEosChar}; }

// Pharaoh alignments, "i-j" meaning source word i aligns to target word j.
// Targets with multiple or no aligned sources get no entry.
inline void load_alignments(const std::string& path, ParallelCorpus& corpus) {
  const auto lines = detail::read_lines(path);
  require(lines.size() == corpus.pairs.size(),
          "alignment line count does not match corpus: " +
              std::to_string(lines.size()) + " vs " +
              std::to_string(corpus.pairs.size()));
  for (std::size_t n = 0; n < lines.size(); ++n) {
    SentencePair& pair = corpus.pairs[n];
    pair.alignment.clear();
    std::map<int, std::vector<int>> sources_per_target;
    const std::string& line = lines[n];
    std::size_t start = 0;
    while (start < line.size()) {
      std::size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      if (end > start) {
        const std::string tok = line.substr(start, end - start);
        const std::size_t dash = tok.find('-');
        require(dash != std::string::npos && dash > 0 && dash + 1 < tok.size(),
                "malformed alignment token '" + tok + "' on line " +
                    std::to_string(n + 1));
        int i = 0, j = 0;
        try {
          std::size_t used = 0;
          i = std::stoi(tok.substr(0, dash), &used);
          require(used == dash, "malformed alignment token: " + tok);
          j = std::stoi(tok.substr(dash + 1), &used);
          require(used == tok.size() - dash - 1, "malformed alignment token: " + tok);
        } catch (const Error&) {
          throw;
        } catch (...) {
          fail("malformed alignment token '" + tok + "' on line " + std::to_string(n + 1));
        }
        require(i >= 0 && i < static_cast<int>(pair.source.size()),
                "alignment source index out of range on line " + std::to_string(n + 1));
        require(j >= 0 && j < static_cast<int>(pair.target.size()),
                "alignment target index out of range on line " + std::to_string(n + 1));
        sources_per_target[j].push_back(i);
      }
      start = end + 1;
    }
    for (const auto& [j, sources] : sources_per_target)
      if (sources.size() == 1) pair.alignment[j] = sources.front();
  }
}

// Per-character simple lowercasing of both sides. The word baseline trains
// on lowercased data; the character model keeps true case.
inline ParallelCorpus lowercase_transform(const ParallelCorpus& corpus) {
  ParallelCorpus out = corpus;
  for (auto& pair : out.pairs) {
    for (CorpusSentence* sent : {&pair.source, &pair.target}) {
      for (auto& w : *sent) {
        for (auto& cp : w.chars) cp = lowercase_scalar(cp);
        w.text = utf8_encode(w.chars);
      }
    }
  }
  return out;
}

inline std::vector<std::string> lowercase_words(const std::vector<std::string>& words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    auto cps = utf8_decode(w);
    for (auto& cp : cps) cp = lowercase_scalar(cp);
    out.push_back(utf8_encode(cps));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Id-level encoding consumed by the model. A sentence keeps its SOS/EOS
// positions explicitly; the EOS position carries the single-character EOS
// word so the generator can score it like any other word.

struct EncodedWord {
  int word_id = ids::kUnk;
  std::vector<int> char_ids;  // [SOW .. EOW], or [EOS] for the terminator
  bool is_sos = false;
  bool is_eos = false;
};

struct EncodedSentence {
  std::vector<EncodedWord> words;  // positions 0..n including SOS and EOS
  int real_words() const { return static_cast<int>(words.size()) - 2; }
};

struct EncodedPair {
  EncodedSentence source;
  EncodedSentence target;
  std::map<int, int> alignment;  // target word index -> source word index
};

inline EncodedSentence encode_side(const CorpusSentence& sent, const Vocab& words,
                                   const Vocab* chars, int max_word_len = 64) {
  EncodedSentence out;
  EncodedWord sos;
  sos.word_id = ids::kSos;
  sos.is_sos = true;
  out.words.push_back(sos);
  for (const auto& w : sent) {
    EncodedWord e;
    e.word_id = words.encode(w.text);
    if (chars) e.char_ids = encode_word_chars(w.chars, *chars, max_word_len);
    out.words.push_back(std::move(e));
  }
  EncodedWord eos;
  eos.word_id = ids::kEos;
  eos.is_eos = true;
  eos.char_ids = eos_word_char_ids();
  out.words.push_back(eos);
  return out;
}

inline EncodedSentence encode_source_words(const std::vector<std::string>& words,
                                           const Vocab& word_vocab,
                                           const Vocab* char_vocab,
                                           int max_word_len = 64) {
  CorpusSentence sent;
  for (const auto& w : words) {
    CorpusWord cw;
    cw.text = w;
    cw.chars = utf8_decode(w);
    sent.push_back(std::move(cw));
  }
  return encode_side(sent, word_vocab, char_vocab, max_word_len);
}

struct CorpusVocabs {
  Vocab src_words = Vocab::words();
  Vocab tgt_words = Vocab::words();
  Vocab src_chars = Vocab::chars();
  Vocab tgt_chars = Vocab::chars();
};

inline std::vector<EncodedPair> encode_corpus(const ParallelCorpus& corpus,
                                              const CorpusVocabs& vocabs,
                                              bool with_chars,
                                              int max_word_len = 64) {
  std::vector<EncodedPair> out;
  out.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) {
    EncodedPair e;
    e.source = encode_side(pair.source, vocabs.src_words,
                           with_chars ? &vocabs.src_chars : nullptr, max_word_len);
    e.target = encode_side(pair.target, vocabs.tgt_words,
                           with_chars ? &vocabs.tgt_chars : nullptr, max_word_len);
    e.alignment = pair.alignment;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace charmt

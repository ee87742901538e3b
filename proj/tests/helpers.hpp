#pragma once

// Shared fixtures: synthetic vocabularies, corpora and model configs.

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "charmt/config.hpp"
#include "charmt/corpus.hpp"
#include "charmt/model.hpp"

namespace testing_helpers {

using namespace charmt;

inline ModelConfig tiny_config(std::uint64_t seed = 1) {
  ModelConfig cfg;
  cfg.d_lstm = 6;
  cfg.d_sw = 4;
  cfg.d_tw = 4;
  cfg.d_sc = 3;
  cfg.d_tc = 3;
  cfg.d_z = 5;
  cfg.seed = seed;
  return cfg;
}

inline Vocab word_vocab(const std::vector<std::string>& words) {
  Vocab v = Vocab::words();
  for (const auto& w : words) v.add(w);
  return v;
}

inline Vocab char_vocab(const std::string& letters) {
  Vocab v = Vocab::chars();
  for (const auto cps = utf8_decode(letters); const auto cp : cps)
    v.add(utf8_encode({cp}));
  return v;
}

inline CorpusVocabs make_vocabs(const std::vector<std::string>& src_words,
                                const std::vector<std::string>& tgt_words,
                                const std::string& src_letters,
                                const std::string& tgt_letters) {
  CorpusVocabs v;
  v.src_words = word_vocab(src_words);
  v.tgt_words = word_vocab(tgt_words);
  v.src_chars = char_vocab(src_letters);
  v.tgt_chars = char_vocab(tgt_letters);
  return v;
}

// Builds a corpus in memory from (source line, target line) pairs.
inline ParallelCorpus corpus_from_lines(
    const std::vector<std::pair<std::string, std::string>>& lines) {
  ParallelCorpus c;
  auto parse = [](const std::string& line) {
    CorpusSentence sent;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      CorpusWord w;
      w.text = line.substr(start, end - start);
      w.chars = utf8_decode(w.text);
      sent.push_back(std::move(w));
      if (end == line.size()) break;
      start = end + 1;
    }
    return sent;
  };
  for (const auto& [src, tgt] : lines) {
    SentencePair pair;
    pair.source = parse(src);
    pair.target = parse(tgt);
    c.pairs.push_back(std::move(pair));
  }
  return c;
}

inline CorpusVocabs vocabs_from_corpus(const ParallelCorpus& c, int min_count = 1) {
  CorpusVocabs v;
  v.src_words = build_word_vocab(c, Side::kSource, min_count);
  v.tgt_words = build_word_vocab(c, Side::kTarget, min_count);
  v.src_chars = build_char_vocab(c, Side::kSource);
  v.tgt_chars = build_char_vocab(c, Side::kTarget);
  return v;
}

class TempDir {
 public:
  TempDir() {
    dir_ = std::filesystem::temp_directory_path() /
           ("charmt_fix_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter_++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string file(const std::string& name, const std::vector<std::string>& lines) const {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path dir_;
};

}  // namespace testing_helpers

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "charmt/corpus.hpp"
#include "charmt/rng.hpp"
#include "charmt/unicode.hpp"
#include "charmt/vocab.hpp"

using namespace charmt;
namespace fs = std::filesystem;

namespace {

// Writes lines to a fresh file under a per-process temp directory.
class TempDir {
 public:
  TempDir() {
    dir_ = fs::temp_directory_path() /
           ("charmt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string file(const std::string& name, const std::vector<std::string>& lines) const {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

}  // namespace

TEST_CASE("load_parallel parses words and characters") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"a b"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  REQUIRE(c.size() == 1);
  REQUIRE(c.pairs[0].source.size() == 2);
  CHECK(c.pairs[0].source[0].text == "a");
  CHECK(c.pairs[0].source[1].text == "b");
  REQUIRE(c.pairs[0].target.size() == 1);
  CHECK(c.pairs[0].target[0].text == "x");
}

TEST_CASE("load_parallel rejects empty corpora and mismatched files") {
  TempDir tmp;
  const auto empty = tmp.file("e.txt", {});
  const auto one = tmp.file("o.txt", {"a"});
  const auto two = tmp.file("w.txt", {"a", "b"});
  CHECK_THROWS_WITH_AS(load_parallel(empty, empty), doctest::Contains("empty corpus"),
                       Error);
  CHECK_THROWS_WITH_AS(load_parallel(one, two), doctest::Contains("line-count mismatch"),
                       Error);
  const auto blank = tmp.file("b.txt", {"a", ""});
  CHECK_THROWS_AS(load_parallel(two, blank), Error);
}

TEST_CASE("multi-byte characters decode to single scalar values") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"ção x", "aa b", "cc d"});
  const auto tgt = tmp.file("t.txt", {"p q", "r s", "t u"});
  ParallelCorpus c = load_parallel(src, tgt);
  const CorpusWord& w = c.pairs[0].source[0];
  // oracle: enumerate the scalar values by hand
  REQUIRE(w.chars.size() == 3);
  CHECK(w.chars[0] == 0xE7u);  // c with cedilla
  CHECK(w.chars[1] == 0xE3u);  // a with tilde
  CHECK(w.chars[2] == 0x6Fu);  // o
}

TEST_CASE("invalid utf-8 is rejected") {
  TempDir tmp;
  const std::string bad = std::string("a") + char(0xC3);  // truncated sequence
  const auto src = tmp.file("s.txt", {bad});
  const auto tgt = tmp.file("t.txt", {"x"});
  CHECK_THROWS_AS(load_parallel(src, tgt), Error);
}

TEST_CASE("word vocab keeps frequent tokens in frequency order") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"a a b"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);

  Vocab v1 = build_word_vocab(c, Side::kSource, 1);
  CHECK(v1.contains("a"));
  CHECK(v1.contains("b"));
  CHECK(v1.encode("a") < v1.encode("b"));  // higher frequency first
  CHECK(v1.encode("a") == ids::kReserved);

  Vocab v2 = build_word_vocab(c, Side::kSource, 2);
  CHECK(v2.contains("a"));
  CHECK(!v2.contains("b"));
  CHECK(v2.encode("b") == ids::kUnk);
}

TEST_CASE("word vocab equals a brute-force frequency filter on a larger corpus") {
  // 100 sentences over a small token universe
  Rng rng(17);
  std::vector<std::string> tokens = {"ab", "cd", "ef", "gh", "ij", "kl", "mn", "op"};
  std::vector<std::string> lines;
  std::map<std::string, int> truth;
  for (int i = 0; i < 100; ++i) {
    std::string line;
    const int len = 1 + static_cast<int>(rng.below(6));
    for (int j = 0; j < len; ++j) {
      const std::string& t = tokens[rng.below(tokens.size())];
      ++truth[t];
      if (j) line += ' ';
      line += t;
    }
    lines.push_back(line);
  }
  TempDir tmp;
  const auto src = tmp.file("s.txt", lines);
  const auto tgt = tmp.file("t.txt", std::vector<std::string>(100, "x"));
  ParallelCorpus c = load_parallel(src, tgt);
  const int min_count = 30;
  Vocab v = build_word_vocab(c, Side::kSource, min_count);
  int expect = 0;
  for (const auto& [tok, count] : truth) {
    if (count >= min_count) {
      ++expect;
      CHECK(v.contains(tok));
    } else {
      CHECK(!v.contains(tok));
    }
  }
  CHECK(v.size() == ids::kReserved + expect);
}

TEST_CASE("char vocab covers exactly the characters on one side") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"ab ba"});
  const auto tgt = tmp.file("t.txt", {"xy"});
  ParallelCorpus c = load_parallel(src, tgt);
  Vocab v = build_char_vocab(c, Side::kSource);
  CHECK(v.size() == ids::kReserved + 2);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK(!v.contains("x"));
  CHECK(v.encode("z") == ids::kUnkChar);  // unseen at test time
}

TEST_CASE("char vocab equals the set union oracle") {
  TempDir tmp;
  std::vector<std::string> lines = {"maçã pera", "uva maçã", "figo"};
  const auto src = tmp.file("s.txt", lines);
  const auto tgt = tmp.file("t.txt", std::vector<std::string>(3, "x"));
  ParallelCorpus c = load_parallel(src, tgt);
  std::set<std::uint32_t> truth;
  for (const auto& line : lines)
    for (const auto cp : utf8_decode(line))
      if (cp != ' ') truth.insert(cp);
  Vocab v = build_char_vocab(c, Side::kSource);
  CHECK(v.size() == ids::kReserved + static_cast<int>(truth.size()));
  for (const auto cp : truth) CHECK(v.contains(utf8_encode({cp})));
}

TEST_CASE("encode_sentence wraps words in SOS and EOS") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"cat sat"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  Vocab v = build_word_vocab(c, Side::kSource, 1);

  auto enc = encode_sentence({"cat"}, v);
  REQUIRE(enc.size() == 3);
  CHECK(enc.front() == ids::kSos);
  CHECK(enc[1] == v.encode("cat"));
  CHECK(enc.back() == ids::kEos);

  CHECK(encode_sentence({}, v) == std::vector<int>{ids::kSos, ids::kEos});
  CHECK(encode_sentence({"dog"}, v) ==
        std::vector<int>{ids::kSos, ids::kUnk, ids::kEos});
}

TEST_CASE("encode_word_chars wraps characters in SOW and EOW") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"cat"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  Vocab v = build_char_vocab(c, Side::kSource);

  auto enc = encode_word_chars(utf8_decode("cat"), v);
  REQUIRE(enc.size() == 5);
  CHECK(enc.front() == ids::kSow);
  CHECK(enc.back() == ids::kEow);
  CHECK(enc[1] == v.encode("c"));

  CHECK(encode_word_chars({}, v) == std::vector<int>{ids::kSow, ids::kEow});
  CHECK(eos_word_char_ids() == std::vector<int>{ids::kEosChar});

  std::vector<std::uint32_t> too_long(65, 'a');
  CHECK_THROWS_AS(encode_word_chars(too_long, v, 64), Error);
}

TEST_CASE("round trip through a vocab file") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"gato céu mar"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  Vocab v = build_word_vocab(c, Side::kSource, 1);
  const auto path = tmp.path("words.vocab");
  v.save(path);
  Vocab loaded = Vocab::load(path, Vocab::Kind::kWord);
  CHECK(loaded.size() == v.size());
  for (int id = 0; id < v.size(); ++id) {
    CHECK(loaded.decode(id) == v.decode(id));
    CHECK(loaded.encode(v.decode(id)) == id);
  }
}

TEST_CASE("pharaoh alignments keep only uniquely aligned targets") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"a b", "c d", "e f"});
  const auto tgt = tmp.file("t.txt", {"x y", "z w", "v u"});
  ParallelCorpus c = load_parallel(src, tgt);

  const auto align = tmp.file("a.txt", {"0-0 1-1", "0-0 1-0", ""});
  load_alignments(align, c);

  CHECK(c.pairs[0].alignment == std::map<int, int>{{0, 0}, {1, 1}});
  CHECK(c.pairs[1].alignment.empty());  // target 0 aligned twice
  CHECK(c.pairs[2].alignment.empty());  // empty line
}

TEST_CASE("alignment errors: wrong line count, bad index, malformed token") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"a b"});
  const auto tgt = tmp.file("t.txt", {"x y"});
  ParallelCorpus c = load_parallel(src, tgt);

  CHECK_THROWS_AS(load_alignments(tmp.file("a1.txt", {"0-0", "1-1"}), c), Error);
  CHECK_THROWS_AS(load_alignments(tmp.file("a2.txt", {"7-0"}), c), Error);
  CHECK_THROWS_AS(load_alignments(tmp.file("a3.txt", {"0-9"}), c), Error);
  CHECK_THROWS_AS(load_alignments(tmp.file("a4.txt", {"zz"}), c), Error);
  CHECK_THROWS_AS(load_alignments(tmp.file("a5.txt", {"0-"}), c), Error);
}

TEST_CASE("alignment maps are stable under reloading") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"a b c"});
  const auto tgt = tmp.file("t.txt", {"x y z"});
  const auto align = tmp.file("a.txt", {"0-2 1-1 2-0"});
  ParallelCorpus c = load_parallel(src, tgt);
  load_alignments(align, c);
  const auto first = c.pairs[0].alignment;
  load_alignments(align, c);
  CHECK(c.pairs[0].alignment == first);
}

TEST_CASE("lowercase_transform applies per-character simple lowercasing") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"Play 123 ÇÃO ŁÓDŹ"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  ParallelCorpus lc = lowercase_transform(c);
  CHECK(lc.pairs[0].source[0].text == "play");
  CHECK(lc.pairs[0].source[1].text == "123");
  CHECK(lc.pairs[0].source[2].text == "ção");
  CHECK(lc.pairs[0].source[3].text == "łódź");
  // original corpus untouched
  CHECK(c.pairs[0].source[0].text == "Play");
}

TEST_CASE("token/id round trips hold for every token and id") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"um dois três quatro"});
  const auto tgt = tmp.file("t.txt", {"x"});
  ParallelCorpus c = load_parallel(src, tgt);
  for (const Vocab& v :
       {build_word_vocab(c, Side::kSource, 1), build_char_vocab(c, Side::kSource)}) {
    for (int id = 0; id < v.size(); ++id) CHECK(v.encode(v.decode(id)) == id);
  }
}

TEST_CASE("encode_side produces SOS/EOS positions with the EOS-only word") {
  TempDir tmp;
  const auto src = tmp.file("s.txt", {"ab cd"});
  const auto tgt = tmp.file("t.txt", {"xy"});
  ParallelCorpus c = load_parallel(src, tgt);
  CorpusVocabs vocabs;
  vocabs.src_words = build_word_vocab(c, Side::kSource, 1);
  vocabs.tgt_words = build_word_vocab(c, Side::kTarget, 1);
  vocabs.src_chars = build_char_vocab(c, Side::kSource);
  vocabs.tgt_chars = build_char_vocab(c, Side::kTarget);
  auto enc = encode_corpus(c, vocabs, true);
  REQUIRE(enc.size() == 1);
  const EncodedSentence& s = enc[0].source;
  REQUIRE(s.words.size() == 4);  // SOS ab cd EOS
  CHECK(s.words.front().is_sos);
  CHECK(s.words.back().is_eos);
  CHECK(s.words.back().char_ids == eos_word_char_ids());
  CHECK(s.real_words() == 2);
  CHECK(s.words[1].char_ids.front() == ids::kSow);
  CHECK(s.words[1].char_ids.back() == ids::kEow);
}

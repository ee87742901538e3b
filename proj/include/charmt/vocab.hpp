#pragma once

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "charmt/error.hpp"

namespace charmt {

// Reserved ids occupy slots 0..3 in every vocabulary; vocab files on disk
// list only the tokens from id 4 upward.
namespace ids {
// word vocabulary
constexpr int kSos = 0;
constexpr int kEos = 1;
constexpr int kUnk = 2;
constexpr int kPad = 3;
// character vocabulary
constexpr int kSow = 0;
constexpr int kEow = 1;
constexpr int kEosChar = 2;
constexpr int kUnkChar = 3;
constexpr int kReserved = 4;
}  // namespace ids

// Bidirectional token/id map, either over words or over single characters.
class Vocab {
 public:
  enum class Kind { kWord, kChar };

  static Vocab words() { return Vocab(Kind::kWord); }
  static Vocab chars() { return Vocab(Kind::kChar); }

  Kind kind() const { return kind_; }
  bool is_word() const { return kind_ == Kind::kWord; }
  bool is_char() const { return kind_ == Kind::kChar; }

  int size() const { return static_cast<int>(tokens_.size()); }

  // Appends a token if absent; returns its id either way.
  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = size();
    index_[token] = id;
    tokens_.push_back(token);
    return id;
  }

  int encode(const std::string& token) const {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    return is_word() ? ids::kUnk : ids::kUnkChar;
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  const std::string& decode(int id) const {
    require(id >= 0 && id < size(), "token id out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  int unk_id() const { return is_word() ? ids::kUnk : ids::kUnkChar; }

  // One token per line, line number = id - 4.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write vocab file: " + path);
    for (int id = ids::kReserved; id < size(); ++id) out << tokens_[id] << '\n';
  }

  static Vocab load(const std::string& path, Kind kind) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read vocab file: " + path);
    Vocab v(kind);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      require(!line.empty(), "empty token in vocab file: " + path);
      require(!v.contains(line), "duplicate token in vocab file: " + line);
      v.add(line);
    }
    return v;
  }

 private:
  explicit Vocab(Kind kind) : kind_(kind) {
    if (kind == Kind::kWord) {
      add("<s>");
      add("</s>");
      add("<unk>");
      add("<pad>");
    } else {
      add("<w>");
      add("</w>");
      add("</s>");
      add("<unk>");
    }
  }

  Kind kind_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace charmt

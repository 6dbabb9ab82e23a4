#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tgc/core/error.hpp"

namespace tgc {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kBos = 1;
inline constexpr std::size_t kEos = 2;
inline constexpr std::size_t kUnk = 3;

/// Lowercases, replaces punctuation with spaces and splits on whitespace.
inline std::vector<std::string> split_words(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (unsigned char c : text) {
    if (std::ispunct(c)) {
      clean.push_back(' ');
    } else {
      clean.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  std::istringstream in(clean);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

/// Canonical caption text: the normalized words joined by single spaces.
inline std::string normalize_caption(const std::string& text) {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

struct Caption {
  std::vector<std::size_t> tokens;
  std::string raw_text;
};

class Vocabulary {
 public:
  Vocabulary() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>"} {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
  }

  /// Reserved tokens first, then every corpus word in sorted order.
  static Vocabulary build(const std::vector<std::string>& corpus) {
    std::set<std::string> words;
    for (const auto& text : corpus) {
      for (auto& w : split_words(text)) words.insert(std::move(w));
    }
    Vocabulary v;
    for (const auto& w : words) v.add(w);
    return v;
  }

  std::size_t add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    index_[token] = tokens_.size();
    tokens_.push_back(token);
    return tokens_.size() - 1;
  }

  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] bool contains(const std::string& token) const { return index_.count(token) > 0; }

  [[nodiscard]] std::size_t index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  [[nodiscard]] const std::string& token(std::size_t index) const {
    if (index >= tokens_.size()) throw InputError("token index " + std::to_string(index) + " out of range");
    return tokens_[index];
  }

  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// One token per line; line number is the index.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vocabulary " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    const Vocabulary reserved;
    if (lines.size() < 4) throw FormatError("vocabulary " + path.string() + " lacks the reserved tokens");
    for (std::size_t i = 0; i < 4; ++i) {
      if (lines[i] != reserved.tokens_[i]) {
        throw FormatError("vocabulary line " + std::to_string(i + 1) + " must be " + reserved.tokens_[i]);
      }
    }
    Vocabulary v;
    for (std::size_t i = 4; i < lines.size(); ++i) {
      if (v.contains(lines[i])) throw FormatError("duplicate vocabulary token " + lines[i]);
      v.add(lines[i]);
    }
    return v;
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

inline Caption tokenize(const std::string& text, const Vocabulary& vocab) {
  const auto words = split_words(text);
  if (words.empty()) throw InputError("caption is empty after normalization");
  Caption c;
  c.raw_text = text;
  for (const auto& w : words) c.tokens.push_back(vocab.index_of(w));
  return c;
}

inline bool all_unknown(const Caption& c) {
  return std::all_of(c.tokens.begin(), c.tokens.end(), [](std::size_t t) { return t == kUnk; });
}

}  // namespace tgc

#include "duet/text.hpp"

#include "duet/common.hpp"

#include <cctype>
#include <fstream>

namespace duet {

Stemmer parse_stemmer(std::string_view name) {
  if (name == "porter") return Stemmer::kPorter;
  if (name == "none") return Stemmer::kNone;
  throw Error("unknown stemmer '" + std::string(name) + "' (expected porter|none)");
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!w.empty()) words.insert(w);
  }
  return words;
}

std::string TextPipeline::normalize_word(std::string_view word) const {
  if (word.empty() || options_.stopwords.contains(std::string(word))) return {};
  std::string current(word);
  bool has_digit = false;
  for (char c : current) has_digit |= std::isdigit(static_cast<unsigned char>(c)) != 0;
  if (options_.stemmer == Stemmer::kPorter && !has_digit) {
    // Porter stems are never longer than their input, so this terminates.
    for (;;) {
      std::string next = porter_stem(current);
      if (next == current) break;
      current = std::move(next);
    }
  }
  if (current.empty() || options_.stopwords.contains(current)) return {};
  return current;
}

std::vector<std::string> TextPipeline::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      std::string norm = normalize_word(word);
      if (!norm.empty()) tokens.push_back(std::move(norm));
      word.clear();
    }
  };
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      continue;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace duet

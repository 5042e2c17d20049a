#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace duet {

enum class Stemmer { kPorter, kNone };

Stemmer parse_stemmer(std::string_view name);

/// Classic Porter (1980) suffix stripper. Input must be lowercase ASCII.
std::string porter_stem(std::string_view word);

/// The bundled INQUERY-style stopword list.
const std::unordered_set<std::string>& default_stopwords();

std::unordered_set<std::string> load_stopwords(const std::string& path);

struct TextPipelineOptions {
  Stemmer stemmer = Stemmer::kPorter;
  std::unordered_set<std::string> stopwords = default_stopwords();
};

/// Lowercases, splits on anything that is not an ASCII letter or digit
/// (apostrophes are dropped inside words), removes stopwords and stems.
///
/// The stemmer is applied until the token stops changing and stems that
/// collide with a stopword are dropped, so tokenize(join(tokenize(x)))
/// == tokenize(x).
class TextPipeline {
 public:
  TextPipeline() = default;
  explicit TextPipeline(TextPipelineOptions options) : options_(std::move(options)) {}

  std::vector<std::string> tokenize(std::string_view text) const;

  /// Stem + stopword handling for a single already-lowercased word.
  /// Returns an empty string when the word is filtered out.
  std::string normalize_word(std::string_view word) const;

  const TextPipelineOptions& options() const { return options_; }

 private:
  TextPipelineOptions options_;
};

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace duet

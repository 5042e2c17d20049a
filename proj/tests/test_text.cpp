#include "duet/common.hpp"
#include "duet/text.hpp"

#include <doctest.h>

#include <random>

using namespace duet;

TEST_CASE("tokenize lowercases, strips punctuation and stems") {
  const TextPipeline text;
  CHECK(text.tokenize("Obama Family Tree") == std::vector<std::string>{"obama", "famili", "tree"});
  CHECK(text.tokenize("").empty());
  CHECK(text.tokenize("the of and").empty());
  CHECK(text.tokenize("Hello, World!! 42x") == std::vector<std::string>{"hello", "world", "42x"});
  CHECK(text.tokenize("don't") == std::vector<std::string>{"dont"});
}

TEST_CASE("no-op stemmer keeps surface words") {
  TextPipelineOptions opts;
  opts.stemmer = Stemmer::kNone;
  const TextPipeline text(opts);
  CHECK(text.tokenize("Running Dogs") == std::vector<std::string>{"running", "dogs"});
  CHECK_THROWS_AS(parse_stemmer("kstem"), Error);
}

TEST_CASE("porter reference outputs") {
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("ponies") == "poni");
  CHECK(porter_stem("relational") == "relat");
  CHECK(porter_stem("conditional") == "condit");
  CHECK(porter_stem("hopping") == "hop");
  CHECK(porter_stem("generalizations") == "gener");
  CHECK(porter_stem("family") == "famili");
  CHECK(porter_stem("sky") == "sky");
}

TEST_CASE("tokenize is idempotent") {
  const TextPipeline text;
  std::mt19937_64 rng(7);
  const std::vector<std::string> words{"running", "families", "generalization", "the", "of", "happiness",
                                       "caresses", "Relational", "x1", "a", "agreed", "ponies", "was"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    for (int i = 0; i < 8; ++i) s += words[pick(rng)] + (i % 3 == 0 ? ", " : " ");
    const auto once = text.tokenize(s);
    CHECK(text.tokenize(join_tokens(once)) == once);
  }
}

TEST_CASE("stopword list can be replaced") {
  TextPipelineOptions opts;
  opts.stopwords = {"tree"};
  const TextPipeline text(opts);
  CHECK(text.tokenize("the tree") == std::vector<std::string>{"the"});
}

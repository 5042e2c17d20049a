#pragma once

// Loads the pre-tokenized toy corpus and queries used by the scorer oracle.

#include "duet/corpus.hpp"
#include "duet/retrieval.hpp"

#include "test_util.hpp"

#include <fstream>
#include <sstream>

namespace toy {

struct Collection {
  std::vector<std::pair<std::string, duet::BagOfWords>> docs;
  std::vector<std::pair<std::string, duet::BagOfWords>> queries;
  duet::FieldStats stats;
};

inline std::vector<std::pair<std::string, duet::BagOfWords>> read_bags(const std::string& name) {
  std::ifstream in(testutil::fixture(name));
  std::vector<std::pair<std::string, duet::BagOfWords>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::istringstream words(line.substr(tab + 1));
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    out.emplace_back(line.substr(0, tab), duet::BagOfWords(tokens));
  }
  return out;
}

inline Collection load() {
  Collection c;
  c.docs = read_bags("toy_corpus.tsv");
  c.queries = read_bags("toy_queries.tsv");
  for (const auto& [_, bag] : c.docs) c.stats.add(bag);
  c.stats.finalize();
  return c;
}

struct Expected {
  std::string query, doc;
  std::array<double, 9> scores;
};

inline std::vector<Expected> expected_scores() {
  std::ifstream in(testutil::fixture("toy_scores.tsv"));
  std::vector<Expected> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream cols(line);
    Expected e;
    std::getline(cols, e.query, '\t');
    std::getline(cols, e.doc, '\t');
    for (auto& v : e.scores) {
      std::string cell;
      std::getline(cols, cell, '\t');
      v = std::stod(cell);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace toy

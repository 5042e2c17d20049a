#pragma once

#include "duet/common.hpp"
#include "duet/text.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace duet {

/// Sparse term -> frequency map. Ordered so that iteration (and anything
/// serialized from it) is deterministic.
class BagOfWords {
 public:
  BagOfWords() = default;
  explicit BagOfWords(const std::vector<std::string>& tokens);

  void add(const std::string& term, int count = 1);
  int tf(const std::string& term) const;
  int length() const { return length_; }
  bool empty() const { return counts_.empty(); }
  std::size_t distinct() const { return counts_.size(); }
  const std::map<std::string, int>& counts() const { return counts_; }

  bool operator==(const BagOfWords&) const = default;

 private:
  std::map<std::string, int> counts_;
  int length_ = 0;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> title_tokens;
  std::vector<std::string> body_tokens;
  BagOfWords title;
  BagOfWords body;

  const BagOfWords& field(Field f) const { return f == Field::kTitle ? title : body; }
};

struct Query {
  std::string query_id;
  std::string raw_text;
  std::vector<std::string> tokens;
};

/// Collection statistics for one text field.
struct FieldStats {
  long doc_count = 0;
  long total_tokens = 0;
  double avg_doc_len = 0.0;
  std::unordered_map<std::string, long> df;
  std::unordered_map<std::string, long> cf;

  long doc_freq(const std::string& t) const;
  long coll_freq(const std::string& t) const;

  /// Adds one document's bag to the statistics.
  void add(const BagOfWords& bag);
  /// Recomputes avg_doc_len after the last add().
  void finalize();
};

struct CollectionStats {
  FieldStats title;
  FieldStats body;

  long doc_count() const { return title.doc_count; }
  const FieldStats& field(Field f) const { return f == Field::kTitle ? title : body; }
};

enum class CorpusFormat { kJsonl, kTsv };

CorpusFormat parse_corpus_format(const std::string& name);

class Corpus {
 public:
  Corpus() = default;

  /// Throws on duplicate ids.
  void add(Document doc);
  void finalize();

  const Document* find(const std::string& doc_id) const;
  const Document& at(const std::string& doc_id) const;
  const std::vector<Document>& documents() const { return docs_; }
  const CollectionStats& stats() const { return stats_; }
  std::size_t size() const { return docs_.size(); }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
  CollectionStats stats_;
};

Document make_document(std::string doc_id, std::string_view title, std::string_view body,
                       const TextPipeline& pipeline);

/// JSONL `{"doc_id","title","body"}` or TSV `doc_id<TAB>title<TAB>body`.
Corpus load_corpus(const std::string& path, CorpusFormat format, const TextPipeline& pipeline);

/// TSV `query_id<TAB>text`, file order preserved.
std::vector<Query> load_queries(const std::string& path, const TextPipeline& pipeline);

class Qrels {
 public:
  void set(const std::string& query_id, const std::string& doc_id, int grade);
  std::optional<int> grade(const std::string& query_id, const std::string& doc_id) const;
  /// Unjudged documents count as grade 0.
  int grade_or_zero(const std::string& query_id, const std::string& doc_id) const;
  bool has_query(const std::string& query_id) const { return judgments_.contains(query_id); }
  const std::map<std::string, int>* judged(const std::string& query_id) const;
  std::size_t size() const;

 private:
  std::map<std::string, std::map<std::string, int>> judgments_;
};

/// TREC `qid 0 docid grade`.
Qrels load_qrels(const std::string& path);

struct RunEntry {
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
};

struct RankedList {
  std::string query_id;
  std::vector<RunEntry> entries;
};

/// Per-query candidate lists in order of first appearance.
struct Run {
  std::vector<RankedList> queries;
  std::string tag = "duet";

  const RankedList* find(const std::string& query_id) const;
};

inline constexpr std::size_t kDefaultRunDepth = 100;

/// TREC `qid Q0 docid rank score runtag`. Each query keeps at most `depth`
/// candidates, in file order.
Run load_run(const std::string& path, std::size_t depth = kDefaultRunDepth);
Run parse_run(std::istream& in, std::size_t depth = kDefaultRunDepth);

void write_run(std::ostream& out, const Run& run);
void write_run(const std::string& path, const Run& run);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace duet

#pragma once

#include "duet/embeddings.hpp"
#include "duet/kb.hpp"

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace duet {

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;

  bool operator==(const Span&) const = default;
};

struct Annotation {
  std::string entity_id;
  Span surface;
  std::string form;  // processed surface form the span matched
  double confidence = 0.0;
};

class BagOfEntities {
 public:
  void add(Annotation a);
  void add_count(const std::string& entity_id, int tf);

  int tf(const std::string& entity_id) const;
  const std::map<std::string, int>& counts() const { return counts_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  bool empty() const { return counts_.empty(); }
  int total() const;

 private:
  std::map<std::string, int> counts_;
  std::vector<Annotation> annotations_;
};

struct LinkerOptions {
  double lp_threshold = 0.0;
  double min_confidence = 0.0;
  /// Weight of the description/context similarity in disambiguation.
  double context_weight = 0.0;
  std::size_t max_span_tokens = 5;
};

struct LinkDecision {
  std::string entity_id;
  double confidence = 0.0;
};

/// Dictionary linker: greedy longest-match spotting followed by
/// commonness (plus optional embedding context) disambiguation.
class EntityLinker {
 public:
  EntityLinker(const SurfaceDictionary& dict, LinkerOptions options)
      : dict_(&dict), options_(options) {}

  /// Enables the context score; both pointers must outlive the linker.
  void set_context(const EmbeddingTable* joint, const EntityTextIndex* texts) {
    joint_ = joint;
    texts_ = texts;
  }

  /// Segments left to right, always taking the longest linkable form at
  /// each position, then keeps only spans with lp >= lp_threshold. Spans
  /// never overlap, and raising the threshold can only remove spans.
  std::vector<Span> spot(const std::vector<std::string>& tokens, double lp_threshold) const;
  std::vector<Span> spot(const std::vector<std::string>& tokens) const { return spot(tokens, options_.lp_threshold); }

  /// Throws for spans with no candidate entity.
  LinkDecision disambiguate(const std::vector<std::string>& tokens, Span span) const;

  BagOfEntities annotate(const std::vector<std::string>& tokens) const;

  const LinkerOptions& options() const { return options_; }
  const SurfaceDictionary& dictionary() const { return *dict_; }

 private:
  double context_score(const std::string& entity_id, const std::optional<Vector<double>>& context) const;

  const SurfaceDictionary* dict_;
  LinkerOptions options_;
  const EmbeddingTable* joint_ = nullptr;
  const EntityTextIndex* texts_ = nullptr;
};

std::string span_form(const std::vector<std::string>& tokens, Span span);

/// Copy of `tokens` with each annotated span replaced by its entity id.
std::vector<std::string> replace_spans(const std::vector<std::string>& tokens, const BagOfEntities& bag);

/// Document entity bags per field.
struct DocumentEntities {
  BagOfEntities title;
  BagOfEntities body;

  const BagOfEntities& field(Field f) const { return f == Field::kTitle ? title : body; }
};

using AnnotationStore = std::unordered_map<std::string, DocumentEntities>;

/// TSV `doc_id<TAB>field<TAB>entity_id<TAB>tf`, field in {title, body}.
AnnotationStore load_annotations(const std::string& path);
void write_annotations(std::ostream& out, const std::vector<std::string>& doc_order, const AnnotationStore& store);

}  // namespace duet

#pragma once

#include "duet/corpus.hpp"
#include "duet/text.hpp"

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace duet {

struct Entity {
  std::string entity_id;
  std::string name;
  std::vector<std::string> aliases;
  std::string description;
};

struct Triple {
  std::string head;
  std::string predicate;
  std::string tail;
};

struct SurfaceForm {
  std::string form;  // processed tokens joined by single spaces
  long occurrence_count = 0;
  long link_count = 0;
  std::map<std::string, long> candidates;  // entity_id -> links to it
};

struct Candidate {
  std::string entity_id;
  double cmns = 0.0;
};

/// Surface-form dictionary with link statistics.
class SurfaceDictionary {
 public:
  /// Merges into an existing entry with the same processed form.
  void add(SurfaceForm sf);

  const SurfaceForm* find(const std::string& form) const;
  bool contains(const std::string& form) const { return forms_.contains(form); }
  /// Longest form in tokens.
  std::size_t max_form_tokens() const { return max_tokens_; }
  std::size_t size() const { return forms_.size(); }

  double lp(const std::string& form) const;
  double cmns(const std::string& form, const std::string& entity_id) const;
  /// Ordered by CMNS descending, entity_id ascending on ties.
  std::vector<Candidate> candidates(const std::string& form) const;
  /// Natural-log Shannon entropy of the CMNS distribution; 0 for unknown forms.
  double candidate_entropy(const std::string& form) const;

  const std::map<std::string, SurfaceForm>& forms() const { return forms_; }

 private:
  std::map<std::string, SurfaceForm> forms_;
  std::size_t max_tokens_ = 0;
};

class KnowledgeBase {
 public:
  void add_entity(Entity e);
  /// Both endpoints must already be present.
  void add_triple(Triple t);

  const Entity* find(const std::string& entity_id) const;
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Triple>& triples() const { return triples_; }

  SurfaceDictionary& dictionary() { return dictionary_; }
  const SurfaceDictionary& dictionary() const { return dictionary_; }

 private:
  std::vector<Entity> entities_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Triple> triples_;
  SurfaceDictionary dictionary_;
};

/// Entities JSONL + optional triples TSV (empty path skips triples).
KnowledgeBase load_kb(const std::string& entities_path, const std::string& triples_path);
std::vector<Entity> load_entities(const std::string& path);
std::vector<Triple> load_triples(const std::string& path);

/// TSV `form<TAB>occurrence_count<TAB>link_count<TAB>entity_id:count,...`.
/// Forms are run through `pipeline`; lines whose form processes to nothing
/// are skipped.
void load_surface_forms(const std::string& path, const TextPipeline& pipeline, SurfaceDictionary& dict);
void write_surface_forms(const std::string& path, const SurfaceDictionary& dict);

/// Tokenized name/description bags for every entity, plus collection
/// statistics over those texts (used when entity texts act as documents).
class EntityTextIndex {
 public:
  EntityTextIndex() = default;
  EntityTextIndex(const KnowledgeBase& kb, const TextPipeline& pipeline);

  /// Empty bags for entities not in the KB.
  const BagOfWords& name(const std::string& entity_id) const;
  const BagOfWords& description(const std::string& entity_id) const;
  const FieldStats& name_stats() const { return name_stats_; }
  const FieldStats& description_stats() const { return desc_stats_; }

 private:
  std::unordered_map<std::string, BagOfWords> names_;
  std::unordered_map<std::string, BagOfWords> descs_;
  FieldStats name_stats_;
  FieldStats desc_stats_;
  BagOfWords empty_;
};

}  // namespace duet

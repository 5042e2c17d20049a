#include "duet/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace duet {

void EsrBinConfig::validate() const {
  if (edges.front() != 1.0 || edges.back() != 0.0) throw Error("ESR bins must span [0, 1]");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] < edges[i - 1])) throw Error("ESR bin edges must strictly decrease");
  }
}

int EsrBinConfig::soft_bin(double similarity) const {
  for (int k = 1; k < kBins; ++k) {
    if (similarity >= edges[static_cast<std::size_t>(k)]) return k;
  }
  return kBins - 1;
}

QwDwRow qw_dw_row(const std::string& word, const Document& doc, const CollectionStats& stats,
                  const RetrievalParams& params) {
  QwDwRow row;
  int col = 0;
  for (ScorerId s : kAllScorers) {
    for (Field f : {Field::kTitle, Field::kBody}) {
      row(col++) = score_singleton(s, word, doc.field(f), stats.field(f), params);
    }
  }
  return row;
}

QeDwRow qe_dw_row(const std::string& entity_id, const EntityTextIndex& texts, const Document& doc,
                  const CollectionStats& stats, const RetrievalParams& params) {
  QeDwRow row;
  const BagOfWords* pseudo[2] = {&texts.name(entity_id), &texts.description(entity_id)};
  int col = 0;
  for (ScorerId s : kQeDwScorers) {
    for (const BagOfWords* q : pseudo) {
      for (Field f : {Field::kTitle, Field::kBody}) {
        row(col++) = score(s, *q, doc.field(f), stats.field(f), params);
      }
    }
  }
  return row;
}

QwDeRow qw_de_row(const std::string& word, const DocumentEntities& doc_entities, const EntityTextIndex& texts,
                  const RetrievalParams& params) {
  QwDeRow row;
  int col = 0;
  std::vector<double> scores;
  for (ScorerId s : kQwDeScorers) {
    for (Field f : {Field::kTitle, Field::kBody}) {
      const int k = f == Field::kTitle ? kTitleTopK : kBodyTopK;
      for (int text = 0; text < 2; ++text) {
        const FieldStats& stats = text == 0 ? texts.name_stats() : texts.description_stats();
        scores.clear();
        for (const auto& [entity, _] : doc_entities.field(f).counts()) {
          const BagOfWords& bag = text == 0 ? texts.name(entity) : texts.description(entity);
          scores.push_back(score_singleton(s, word, bag, stats, params));
        }
        std::sort(scores.begin(), scores.end(), std::greater<>());
        for (int slot = 0; slot < k; ++slot) {
          row(col++) = slot < static_cast<int>(scores.size()) ? scores[static_cast<std::size_t>(slot)]
                                                              : kMissingEntityScore;
        }
      }
    }
  }
  return row;
}

double esr_similarity(const std::string& a, const std::string& b, const EmbeddingTable* embeddings) {
  if (a == b) return 1.0;
  if (embeddings == nullptr) return 0.0;
  auto ia = embeddings->index(a);
  auto ib = embeddings->index(b);
  if (!ia || !ib) return 0.0;
  auto va = embeddings->row(*ia);
  auto vb = embeddings->row(*ib);
  const double na = va.lpNorm<1>();
  const double nb = vb.lpNorm<1>();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double dist = (va / na - vb / nb).lpNorm<1>();
  return std::clamp(1.0 - dist / 2.0, 0.0, 1.0);
}

std::array<int, EsrBinConfig::kBins> esr_bin_counts(const std::string& query_entity, const BagOfEntities& doc_field,
                                                    const EmbeddingTable* embeddings, const EsrBinConfig& bins) {
  std::array<int, EsrBinConfig::kBins> counts{};
  for (const auto& [entity, tf] : doc_field.counts()) {
    const int bin = entity == query_entity ? 0 : bins.soft_bin(esr_similarity(query_entity, entity, embeddings));
    counts[static_cast<std::size_t>(bin)] += tf;
  }
  return counts;
}

QeDeRow qe_de_row(const std::string& query_entity, const DocumentEntities& doc_entities,
                  const EmbeddingTable* embeddings, const EsrBinConfig& bins) {
  QeDeRow row;
  int col = 0;
  for (Field f : {Field::kTitle, Field::kBody}) {
    for (int c : esr_bin_counts(query_entity, doc_entities.field(f), embeddings, bins)) {
      row(col++) = std::log1p(static_cast<double>(c));
    }
  }
  return row;
}

AttentionRow attention_row(const Annotation& annotation, const std::vector<std::string>& query_words,
                           const SurfaceDictionary& dict, const EmbeddingTable* joint) {
  AttentionRow row = AttentionRow::Zero();
  row(0) = dict.candidate_entropy(annotation.form);
  const auto cands = dict.candidates(annotation.form);
  auto it = std::find_if(cands.begin(), cands.end(),
                         [&](const Candidate& c) { return c.entity_id == annotation.entity_id; });
  if (it != cands.end()) {
    row(1) = it->cmns >= cands.front().cmns ? 1.0 : 0.0;
    const double next = std::next(it) != cands.end() ? std::next(it)->cmns : 0.0;
    row(2) = it->cmns - next;
  }
  if (joint != nullptr) {
    auto entity_vec = joint->lookup(annotation.entity_id);
    auto query_vec = mean_vector(*joint, query_words);
    if (entity_vec && query_vec) row(3) = cosine(*entity_vec, *query_vec);
  }
  return row;
}

QueryElements make_query_elements(const Query& query, const BagOfEntities& query_entities) {
  QueryElements q;
  q.query_id = query.query_id;
  std::unordered_set<std::string> seen;
  for (const auto& t : query.tokens) {
    if (seen.insert(t).second) q.words.push_back(t);
  }
  std::unordered_set<std::string> seen_entities;
  for (const auto& a : query_entities.annotations()) {
    if (seen_entities.insert(a.entity_id).second) q.entities.push_back(a);
  }
  return q;
}

DuetFeatureMatrices build_matrices(const QueryElements& query, const Document& doc,
                                   const DocumentEntities& doc_entities, const FeatureContext& ctx) {
  if (ctx.doc_stats == nullptr || ctx.entity_texts == nullptr || ctx.dictionary == nullptr) {
    throw Error("build_matrices: feature context is missing a store");
  }
  if (query.words.empty()) throw Error("query '" + query.query_id + "' has no words after processing");
  if (static_cast<int>(query.words.size()) > ctx.max_words) {
    throw Error("query '" + query.query_id + "' has " + std::to_string(query.words.size()) +
                " distinct words, more than max_words=" + std::to_string(ctx.max_words));
  }
  if (static_cast<int>(query.entities.size()) > ctx.max_entities) {
    throw Error("query '" + query.query_id + "' has " + std::to_string(query.entities.size()) +
                " entities, more than max_entities=" + std::to_string(ctx.max_entities));
  }
  auto m = DuetFeatureMatrices::zeros(ctx.max_words, ctx.max_entities);
  for (std::size_t i = 0; i < query.words.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::string& w = query.words[i];
    m.word_features.row(r).head<kQwDwCols>() = qw_dw_row(w, doc, *ctx.doc_stats, ctx.retrieval).transpose();
    m.word_features.row(r).tail<kQwDeCols>() =
        qw_de_row(w, doc_entities, *ctx.entity_texts, ctx.retrieval).transpose();
    m.word_attention(r, 0) = 1.0;
    m.word_mask(r) = true;
  }
  for (std::size_t j = 0; j < query.entities.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    const Annotation& a = query.entities[j];
    m.entity_features.row(r).head<kQeDwCols>() =
        qe_dw_row(a.entity_id, *ctx.entity_texts, doc, *ctx.doc_stats, ctx.retrieval).transpose();
    m.entity_features.row(r).tail<kQeDeCols>() =
        qe_de_row(a.entity_id, doc_entities, ctx.entity_embeddings, ctx.bins).transpose();
    m.entity_attention.row(r) = attention_row(a, query.words, *ctx.dictionary, ctx.joint_embeddings).transpose();
    m.entity_mask(r) = true;
  }
  return m;
}

std::vector<std::string> word_column_names() {
  std::vector<std::string> names;
  for (ScorerId s : kAllScorers) {
    for (Field f : {Field::kTitle, Field::kBody}) {
      names.push_back("qw_dw." + std::string(scorer_name(s)) + "." + field_name(f));
    }
  }
  for (ScorerId s : kQwDeScorers) {
    for (Field f : {Field::kTitle, Field::kBody}) {
      const int k = f == Field::kTitle ? kTitleTopK : kBodyTopK;
      for (const char* text : {"name", "desc"}) {
        for (int slot = 1; slot <= k; ++slot) {
          names.push_back("qw_de." + std::string(scorer_name(s)) + "." + field_name(f) + "." + text + ".top" +
                          std::to_string(slot));
        }
      }
    }
  }
  return names;
}

std::vector<std::string> entity_column_names() {
  std::vector<std::string> names;
  for (ScorerId s : kQeDwScorers) {
    for (const char* text : {"name", "desc"}) {
      for (Field f : {Field::kTitle, Field::kBody}) {
        names.push_back("qe_dw." + std::string(scorer_name(s)) + "." + text + "." + field_name(f));
      }
    }
  }
  for (Field f : {Field::kTitle, Field::kBody}) {
    for (int k = 0; k < EsrBinConfig::kBins; ++k) {
      names.push_back("qe_de." + std::string(field_name(f)) + ".bin" + std::to_string(k + 1));
    }
  }
  return names;
}

std::vector<std::string> entity_attention_column_names() {
  return {"att.entropy", "att.is_top_candidate", "att.cmns_margin", "att.query_similarity"};
}

const std::string& feature_schema_hash() {
  static const std::string hash = [] {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    };
    mix(kFeatureSchemaVersion);
    for (const auto& n : word_column_names()) mix(n);
    for (const auto& n : entity_column_names()) mix(n);
    for (const auto& n : entity_attention_column_names()) mix(n);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }();
  return hash;
}

FeatureGroup parse_feature_group(std::string_view name) {
  if (name == "qw_dw") return FeatureGroup::kQwDw;
  if (name == "qe_dw") return FeatureGroup::kQeDw;
  if (name == "qw_de") return FeatureGroup::kQwDe;
  if (name == "qe_de") return FeatureGroup::kQeDe;
  throw Error("unknown feature group '" + std::string(name) + "' (expected qw_dw|qe_dw|qw_de|qe_de)");
}

ColumnSelection select_columns(const std::vector<FeatureGroup>& groups, int top_k, int bins) {
  if (top_k < 1 || top_k > kBodyTopK) throw Error("top-k must be in 1..5");
  if (bins < 1 || bins > EsrBinConfig::kBins) throw Error("bins must be in 1..6");
  auto has = [&](FeatureGroup g) { return std::find(groups.begin(), groups.end(), g) != groups.end(); };
  ColumnSelection sel;
  sel.word.setConstant(false);
  sel.entity.setConstant(false);
  if (has(FeatureGroup::kQwDw)) sel.word.head<kQwDwCols>().setConstant(true);
  if (has(FeatureGroup::kQwDe)) {
    int col = kQwDwCols;
    for (std::size_t s = 0; s < kQwDeScorers.size(); ++s) {
      for (Field f : {Field::kTitle, Field::kBody}) {
        const int k = f == Field::kTitle ? kTitleTopK : kBodyTopK;
        for (int text = 0; text < 2; ++text) {
          for (int slot = 0; slot < k; ++slot) sel.word(col++) = slot < top_k;
        }
      }
    }
  }
  if (has(FeatureGroup::kQeDw)) sel.entity.head<kQeDwCols>().setConstant(true);
  if (has(FeatureGroup::kQeDe)) {
    for (int f = 0; f < 2; ++f) {
      for (int k = 0; k < bins; ++k) sel.entity(kQeDwCols + f * EsrBinConfig::kBins + k) = true;
    }
  }
  return sel;
}

void apply_selection(DuetFeatureMatrices& m, const ColumnSelection& sel) {
  for (int c = 0; c < kWordCols; ++c) {
    if (!sel.word(c)) m.word_features.col(c).setZero();
  }
  for (int c = 0; c < kEntityCols; ++c) {
    if (!sel.entity(c)) m.entity_features.col(c).setZero();
  }
}

}  // namespace duet

#pragma once

#include "duet/common.hpp"
#include "duet/corpus.hpp"
#include "duet/embeddings.hpp"
#include "duet/kb.hpp"
#include "duet/linker.hpp"
#include "duet/retrieval.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace duet {

// Column layout (frozen; the schema hash covers it):
//   word row   = [qw_dw (18) | qw_de (48)]
//     qw_dw : scorer-major over the nine scorers, title before body
//     qw_de : {coord, tfidf, lm_dir} x {title (3 slots), body (5 slots)} x {name, desc}
//   entity row = [qe_dw (24) | qe_de (12)]
//     qe_dw : {bm25, tfidf, bool_or, bool_and, coord, lm_dir} x {name, desc} x {title, body}
//     qe_de : 6 title bins then 6 body bins, exact-match bin first
//   entity attention = [entropy, is_top_candidate, cmns_margin, query_similarity]

inline constexpr int kTitleTopK = 3;
inline constexpr int kBodyTopK = 5;
inline constexpr double kMissingEntityScore = -20.0;

inline constexpr std::array<ScorerId, 6> kQeDwScorers{ScorerId::kBm25,    ScorerId::kTfIdf, ScorerId::kBoolOr,
                                                     ScorerId::kBoolAnd, ScorerId::kCoord, ScorerId::kLmDir};
inline constexpr std::array<ScorerId, 3> kQwDeScorers{ScorerId::kCoord, ScorerId::kTfIdf, ScorerId::kLmDir};

using QwDwRow = Eigen::Matrix<double, kQwDwCols, 1>;
using QeDwRow = Eigen::Matrix<double, kQeDwCols, 1>;
using QwDeRow = Eigen::Matrix<double, kQwDeCols, 1>;
using QeDeRow = Eigen::Matrix<double, kQeDeCols, 1>;
using AttentionRow = Eigen::Matrix<double, kEntityAttCols, 1>;

/// Histogram bins for entity translation scores. Bin 0 is the exact-match
/// point bin [1, 1] and only ever holds identical entities; the remaining
/// bins are half-open [lo, hi) ranges ordered from high to low. A
/// non-identical pair scoring exactly 1 lands in the highest soft bin.
struct EsrBinConfig {
  std::array<double, 6> edges{1.0, 0.8, 0.6, 0.4, 0.2, 0.0};  // soft bin k spans [edges[k], edges[k-1])

  static constexpr int kBins = 6;
  /// Throws unless edges strictly decrease from 1 to 0.
  void validate() const;
  /// Index in 1..5 of the soft bin holding `similarity`.
  int soft_bin(double similarity) const;
};

/// Word-to-document-word features for a single query word.
QwDwRow qw_dw_row(const std::string& word, const Document& doc, const CollectionStats& stats,
                  const RetrievalParams& params = {});

/// Entity name/description as pseudo-queries against the document fields.
QeDwRow qe_dw_row(const std::string& entity_id, const EntityTextIndex& texts, const Document& doc,
                  const CollectionStats& stats, const RetrievalParams& params = {});

/// Top-k per-word scores against document entities' names and
/// descriptions; missing slots hold -20.
QwDeRow qw_de_row(const std::string& word, const DocumentEntities& doc_entities, const EntityTextIndex& texts,
                  const RetrievalParams& params = {});

/// Translation score in [0, 1]: 1 for identical ids, 0 when either entity
/// is missing from `embeddings`, else 1 - |a/|a|_1 - b/|b|_1|_1 / 2.
double esr_similarity(const std::string& a, const std::string& b, const EmbeddingTable* embeddings);

/// ln(1 + count) per bin for each document field.
QeDeRow qe_de_row(const std::string& query_entity, const DocumentEntities& doc_entities,
                  const EmbeddingTable* embeddings, const EsrBinConfig& bins = {});

/// Raw bin counts for one field (before the log transform).
std::array<int, EsrBinConfig::kBins> esr_bin_counts(const std::string& query_entity, const BagOfEntities& doc_field,
                                                    const EmbeddingTable* embeddings, const EsrBinConfig& bins = {});

AttentionRow attention_row(const Annotation& annotation, const std::vector<std::string>& query_words,
                           const SurfaceDictionary& dict, const EmbeddingTable* joint);

/// Distinct query words and entities in first-occurrence order.
struct QueryElements {
  std::string query_id;
  std::vector<std::string> words;
  std::vector<Annotation> entities;
};

QueryElements make_query_elements(const Query& query, const BagOfEntities& query_entities);

template <typename Scalar>
struct DuetFeatureMatricesT {
  Matrix<Scalar> word_features;      // n x 66
  Matrix<Scalar> entity_features;    // m x 36
  Matrix<Scalar> word_attention;     // n x 1
  Matrix<Scalar> entity_attention;   // m x 4
  Mask word_mask;
  Mask entity_mask;

  Eigen::Index max_words() const { return word_features.rows(); }
  Eigen::Index max_entities() const { return entity_features.rows(); }

  static DuetFeatureMatricesT zeros(Eigen::Index n, Eigen::Index m) {
    return {Matrix<Scalar>::Zero(n, kWordCols),     Matrix<Scalar>::Zero(m, kEntityCols),
            Matrix<Scalar>::Zero(n, kWordAttCols),  Matrix<Scalar>::Zero(m, kEntityAttCols),
            Mask::Constant(n, false),               Mask::Constant(m, false)};
  }

  /// Throws on wrong column counts or mismatched mask lengths.
  void validate() const {
    if (word_features.cols() != kWordCols || entity_features.cols() != kEntityCols ||
        word_attention.cols() != kWordAttCols || entity_attention.cols() != kEntityAttCols) {
      throw Error("feature matrices do not match the feature schema");
    }
    if (word_attention.rows() != word_features.rows() || word_mask.size() != word_features.rows() ||
        entity_attention.rows() != entity_features.rows() || entity_mask.size() != entity_features.rows()) {
      throw Error("feature matrices have inconsistent row counts");
    }
  }

  bool operator==(const DuetFeatureMatricesT& o) const {
    if (word_features.rows() != o.word_features.rows() || entity_features.rows() != o.entity_features.rows()) {
      return false;
    }
    return word_features == o.word_features && entity_features == o.entity_features &&
           word_attention == o.word_attention && entity_attention == o.entity_attention &&
           (word_mask == o.word_mask).all() && (entity_mask == o.entity_mask).all();
  }
};

using DuetFeatureMatrices = DuetFeatureMatricesT<double>;

struct FeatureContext {
  const CollectionStats* doc_stats = nullptr;
  const EntityTextIndex* entity_texts = nullptr;
  const SurfaceDictionary* dictionary = nullptr;
  const EmbeddingTable* entity_embeddings = nullptr;  // TransE entity vectors
  const EmbeddingTable* joint_embeddings = nullptr;   // word + entity vectors
  RetrievalParams retrieval;
  EsrBinConfig bins;
  int max_words = 10;
  int max_entities = 5;
};

/// Assembles padded matrices; padding rows are zero with a false mask.
DuetFeatureMatrices build_matrices(const QueryElements& query, const Document& doc,
                                   const DocumentEntities& doc_entities, const FeatureContext& ctx);

std::vector<std::string> word_column_names();
std::vector<std::string> entity_column_names();
std::vector<std::string> entity_attention_column_names();

inline constexpr const char* kFeatureSchemaVersion = "duet-features-v1";
/// Hex FNV-1a hash over the version tag and every column name.
const std::string& feature_schema_hash();

/// Column subsets used by ablation runs.
struct ColumnSelection {
  Eigen::Array<bool, kWordCols, 1> word = Eigen::Array<bool, kWordCols, 1>::Constant(true);
  Eigen::Array<bool, kEntityCols, 1> entity = Eigen::Array<bool, kEntityCols, 1>::Constant(true);

  bool all() const { return word.all() && entity.all(); }
};

enum class FeatureGroup { kQwDw, kQeDw, kQwDe, kQeDe };

FeatureGroup parse_feature_group(std::string_view name);

/// Keeps only `groups`; `top_k` (1..5) limits qw_de slots per group (title
/// slots capped at 3) and `bins` (1..6) keeps the first bins of each field.
ColumnSelection select_columns(const std::vector<FeatureGroup>& groups, int top_k = kBodyTopK,
                               int bins = EsrBinConfig::kBins);

/// Zeroes every deselected column.
void apply_selection(DuetFeatureMatrices& m, const ColumnSelection& sel);

struct FeatureRecord {
  std::string query_id;
  std::string doc_id;
  DuetFeatureMatrices matrices;
};

/// One JSON object per line, tagged with the schema version and hash.
void write_feature_record(std::ostream& out, const FeatureRecord& rec);
/// Throws on schema mismatch or malformed input.
FeatureRecord parse_feature_record(const std::string& line);
std::vector<FeatureRecord> load_feature_cache(const std::string& path);

}  // namespace duet

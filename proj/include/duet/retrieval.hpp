#pragma once

#include "duet/corpus.hpp"

#include <array>
#include <string>
#include <string_view>

namespace duet {

/// The nine unsupervised retrieval models used as word-level features.
enum class ScorerId { kBm25, kTfIdf, kBoolOr, kBoolAnd, kCoord, kLm, kLmJm, kLmDir, kLmTwo };

inline constexpr std::array<ScorerId, 9> kAllScorers{ScorerId::kBm25, ScorerId::kTfIdf, ScorerId::kBoolOr,
                                                     ScorerId::kBoolAnd, ScorerId::kCoord, ScorerId::kLm,
                                                     ScorerId::kLmJm, ScorerId::kLmDir, ScorerId::kLmTwo};

std::string_view scorer_name(ScorerId id);
ScorerId parse_scorer(std::string_view name);

/// Additive scorers decompose into a tf_q-weighted sum of per-term scores.
constexpr bool is_additive(ScorerId id) { return id != ScorerId::kBoolOr && id != ScorerId::kBoolAnd; }

struct RetrievalParams {
  double k1 = 1.2;
  double b = 0.75;
  double mu = 2500.0;
  double lambda = 0.4;
  double epsilon = 1e-10;
};

/// Scores `query` against one field bag under that field's statistics.
/// An empty query scores 0 under every model; log arguments are floored at
/// epsilon so every value is finite.
double score(ScorerId scorer, const BagOfWords& query, const BagOfWords& doc, const FieldStats& stats,
             const RetrievalParams& params = {});

/// score() with the one-term query {term: 1}.
double score_singleton(ScorerId scorer, const std::string& term, const BagOfWords& doc, const FieldStats& stats,
                       const RetrievalParams& params = {});

}  // namespace duet

#include "duet/retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace duet {

namespace {

constexpr std::array<std::string_view, 9> kNames{"bm25", "tfidf", "bool_or", "bool_and", "coord",
                                                 "lm",   "lm_jm", "lm_dir",  "lm_two"};

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Contribution of one query term with query frequency 1.
double term_score(ScorerId scorer, const std::string& term, const BagOfWords& doc, const FieldStats& stats,
                  const RetrievalParams& p) {
  const double tf = doc.tf(term);
  const double len = doc.length();
  const double n = static_cast<double>(stats.doc_count);
  const double df = static_cast<double>(stats.doc_freq(term));
  const double p_coll = safe_ratio(static_cast<double>(stats.coll_freq(term)), static_cast<double>(stats.total_tokens));
  auto log_floor = [&](double x) { return std::log(std::max(x, p.epsilon)); };

  switch (scorer) {
    case ScorerId::kBm25: {
      if (tf == 0.0) return 0.0;
      const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
      const double norm = stats.avg_doc_len > 0.0 ? len / stats.avg_doc_len : 1.0;
      return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
    }
    case ScorerId::kTfIdf:
      if (tf == 0.0 || df == 0.0) return 0.0;
      return tf * std::log(n / df);
    case ScorerId::kCoord:
      return tf > 0.0 ? 1.0 : 0.0;
    case ScorerId::kLm:
      return log_floor(safe_ratio(tf, len));
    case ScorerId::kLmJm:
      return log_floor((1.0 - p.lambda) * safe_ratio(tf, len) + p.lambda * p_coll);
    case ScorerId::kLmDir:
      return log_floor((tf + p.mu * p_coll) / (len + p.mu));
    case ScorerId::kLmTwo:
      return log_floor((1.0 - p.lambda) * (tf + p.mu * p_coll) / (len + p.mu) + p.lambda * p_coll);
    case ScorerId::kBoolOr:
    case ScorerId::kBoolAnd:
      break;
  }
  throw Error("term_score: boolean scorers are not additive");
}

}  // namespace

std::string_view scorer_name(ScorerId id) { return kNames[static_cast<std::size_t>(id)]; }

ScorerId parse_scorer(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAllScorers[i];
  }
  throw Error("unknown scorer '" + std::string(name) + "'");
}

double score(ScorerId scorer, const BagOfWords& query, const BagOfWords& doc, const FieldStats& stats,
             const RetrievalParams& params) {
  if (query.empty()) return 0.0;
  if (scorer == ScorerId::kBoolOr) {
    for (const auto& [t, _] : query.counts()) {
      if (doc.tf(t) > 0) return 1.0;
    }
    return 0.0;
  }
  if (scorer == ScorerId::kBoolAnd) {
    for (const auto& [t, _] : query.counts()) {
      if (doc.tf(t) == 0) return 0.0;
    }
    return 1.0;
  }
  double total = 0.0;
  for (const auto& [t, qtf] : query.counts()) total += qtf * term_score(scorer, t, doc, stats, params);
  return total;
}

double score_singleton(ScorerId scorer, const std::string& term, const BagOfWords& doc, const FieldStats& stats,
                       const RetrievalParams& params) {
  BagOfWords q;
  q.add(term);
  return score(scorer, q, doc, stats, params);
}

}  // namespace duet

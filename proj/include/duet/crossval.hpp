#pragma once

#include "duet/corpus.hpp"
#include "duet/metrics.hpp"
#include "duet/ranker.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace duet {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

/// Query ids shuffled with `seed` and dealt round-robin into `folds` parts.
/// Fold f tests on part f, tunes on part f+1 (mod folds), trains on the rest.
class FoldPlan {
 public:
  FoldPlan(std::vector<std::string> query_ids, int folds = 10, std::uint64_t seed = 1);

  int size() const { return static_cast<int>(parts_.size()); }
  const std::vector<std::string>& part(int f) const { return parts_.at(static_cast<std::size_t>(f)); }
  Fold fold(int f) const;

 private:
  std::vector<std::vector<std::string>> parts_;
};

struct CrossValConfig {
  int folds = 10;
  std::uint64_t seed = 1;
  TrainConfig train;
  /// Folds train concurrently on up to this many threads; results do not
  /// depend on it.
  int threads = 1;
};

struct CrossValResult {
  Run run;  // test-fold rankings, queries in input order
  std::vector<TrainingLog> fold_logs;
  std::vector<TrainedModel> fold_models;
};

/// Trains one model per fold and ranks that fold's test queries with it.
CrossValResult cross_validate(const std::vector<QueryCandidates>& queries, const CrossValConfig& config);

/// Builds qrels from the judgments carried by `queries`.
Qrels qrels_from_candidates(const std::vector<QueryCandidates>& queries);

}  // namespace duet

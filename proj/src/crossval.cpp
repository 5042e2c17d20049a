#include "duet/crossval.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace duet {

FoldPlan::FoldPlan(std::vector<std::string> query_ids, int folds, std::uint64_t seed) {
  if (folds < 3) throw Error("cross-validation needs at least 3 folds");
  if (static_cast<int>(query_ids.size()) < folds) {
    throw Error("cross-validation: " + std::to_string(query_ids.size()) + " queries for " + std::to_string(folds) +
                " folds");
  }
  std::unordered_set<std::string> seen;
  for (const auto& q : query_ids) {
    if (!seen.insert(q).second) throw Error("cross-validation: duplicate query id '" + q + "'");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(query_ids.begin(), query_ids.end(), rng);
  parts_.resize(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < query_ids.size(); ++i) parts_[i % parts_.size()].push_back(query_ids[i]);
}

Fold FoldPlan::fold(int f) const {
  const int n = size();
  if (f < 0 || f >= n) throw Error("fold index out of range");
  Fold out;
  out.test = parts_[static_cast<std::size_t>(f)];
  out.dev = parts_[static_cast<std::size_t>((f + 1) % n)];
  for (int p = 0; p < n; ++p) {
    if (p == f || p == (f + 1) % n) continue;
    const auto& part = parts_[static_cast<std::size_t>(p)];
    out.train.insert(out.train.end(), part.begin(), part.end());
  }
  return out;
}

CrossValResult cross_validate(const std::vector<QueryCandidates>& queries, const CrossValConfig& config) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, const QueryCandidates*> by_id;
  for (const auto& q : queries) {
    ids.push_back(q.query_id);
    by_id[q.query_id] = &q;
  }
  const FoldPlan plan(ids, config.folds, config.seed);
  auto gather = [&](const std::vector<std::string>& part) {
    std::vector<QueryCandidates> out;
    for (const auto& id : part) out.push_back(*by_id.at(id));
    return out;
  };

  const std::size_t n = static_cast<std::size_t>(plan.size());
  CrossValResult result;
  result.fold_logs.resize(n);
  result.fold_models.resize(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < n; f = next++) {
      try {
        const Fold fold = plan.fold(static_cast<int>(f));
        result.fold_models[f] = train_ranker(gather(fold.train), gather(fold.dev), config.train, &result.fold_logs[f]);
      } catch (const Error& e) {
        errors[f] = "fold " + std::to_string(f) + ": " + e.what();
      }
    }
  };
  const int threads = std::clamp(config.threads, 1, static_cast<int>(n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }

  std::unordered_map<std::string, std::size_t> fold_of;
  for (std::size_t f = 0; f < n; ++f) {
    for (const auto& id : plan.part(static_cast<int>(f))) fold_of[id] = f;
  }
  for (const auto& q : queries) {
    result.run.queries.push_back(rank_candidates(result.fold_models[fold_of.at(q.query_id)], q));
  }
  return result;
}

Qrels qrels_from_candidates(const std::vector<QueryCandidates>& queries) {
  Qrels qrels;
  for (const auto& q : queries) {
    for (const auto& [doc, grade] : q.judged) qrels.set(q.query_id, doc, grade);
  }
  return qrels;
}

}  // namespace duet

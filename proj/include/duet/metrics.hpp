#pragma once

#include "duet/corpus.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace duet {

/// Graded gain 2^max(g, 0) - 1.
double graded_gain(int grade);

/// NDCG@k with log2(r + 1) discount; the ideal ranking is built from every
/// judged document. Returns nullopt when the ideal DCG is 0.
std::optional<double> ndcg_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                                int k = 20);

/// Cascade ERR@k with R(g) = (2^max(g,0) - 1) / 2^max_grade.
double err_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged, int k = 20,
                int max_grade = 4);

enum class MetricId { kNdcg, kErr };

struct MetricSpec {
  MetricId id = MetricId::kNdcg;
  int k = 20;

  std::string name() const;
};

/// Parses "ndcg@20" / "err@20".
MetricSpec parse_metric(const std::string& text);

struct MetricReport {
  MetricSpec metric;
  std::vector<std::pair<std::string, double>> per_query;  // run order
  double mean = 0.0;
  int skipped = 0;  // queries without any judged-relevant document

  std::map<std::string, double> as_map() const;
};

/// Scores every query of `run` that has at least one judged-relevant
/// document; unjudged documents count as grade 0.
MetricReport evaluate_run(const Run& run, const Qrels& qrels, MetricSpec metric, int max_grade = 4);

struct WinTieLoss {
  int wins = 0;
  int ties = 0;
  int losses = 0;

  bool operator==(const WinTieLoss&) const = default;
};

/// Counts queries where A beats, ties (|A - B| < epsilon), or loses to B.
/// Both maps must cover the same queries.
WinTieLoss win_tie_loss(const std::map<std::string, double>& a, const std::map<std::string, double>& b,
                        double epsilon = 1e-6);

/// Two-sided paired randomization test. Each iteration swaps each query's
/// pair with probability 1/2; p = (1 + #{|mean diff| >= |observed|}) /
/// (1 + iterations). Iteration i draws from its own seed, so the result is
/// independent of `threads`.
double permutation_test(std::span<const double> a, std::span<const double> b, int iterations = 100000,
                        std::uint64_t seed = 1, int threads = 1);

}  // namespace duet

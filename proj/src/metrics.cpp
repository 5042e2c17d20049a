#include "duet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace duet {

double graded_gain(int grade) { return std::exp2(static_cast<double>(std::max(grade, 0))) - 1.0; }

namespace {

int lookup_grade(const std::map<std::string, int>& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::optional<double> ndcg_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                                int k) {
  std::vector<int> grades;
  for (const auto& [_, g] : judged) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(grades.size())); ++r) {
    ideal += graded_gain(grades[static_cast<std::size_t>(r)]) / std::log2(r + 2.0);
  }
  if (ideal <= 0.0) return std::nullopt;
  double dcg = 0.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(ranked.size())); ++r) {
    dcg += graded_gain(lookup_grade(judged, ranked[static_cast<std::size_t>(r)])) / std::log2(r + 2.0);
  }
  return dcg / ideal;
}

double err_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged, int k,
                int max_grade) {
  const double denom = std::exp2(static_cast<double>(max_grade));
  double err = 0.0;
  double still_looking = 1.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(ranked.size())); ++r) {
    const double rel = graded_gain(lookup_grade(judged, ranked[static_cast<std::size_t>(r)])) / denom;
    err += still_looking * rel / (r + 1.0);
    still_looking *= 1.0 - rel;
  }
  return err;
}

std::string MetricSpec::name() const { return (id == MetricId::kNdcg ? "ndcg@" : "err@") + std::to_string(k); }

MetricSpec parse_metric(const std::string& text) {
  auto at = text.find('@');
  const std::string base = text.substr(0, at);
  MetricSpec spec;
  if (base == "ndcg") {
    spec.id = MetricId::kNdcg;
  } else if (base == "err") {
    spec.id = MetricId::kErr;
  } else {
    throw Error("unknown metric '" + text + "' (expected ndcg@k or err@k)");
  }
  if (at != std::string::npos) {
    try {
      std::size_t used = 0;
      spec.k = std::stoi(text.substr(at + 1), &used);
      if (used != text.size() - at - 1 || spec.k < 1) throw Error("");
    } catch (const std::exception&) {
      throw Error("bad cutoff in metric '" + text + "'");
    }
  }
  return spec;
}

std::map<std::string, double> MetricReport::as_map() const {
  return {per_query.begin(), per_query.end()};
}

MetricReport evaluate_run(const Run& run, const Qrels& qrels, MetricSpec metric, int max_grade) {
  MetricReport report;
  report.metric = metric;
  static const std::map<std::string, int> kEmpty;
  double sum = 0.0;
  for (const auto& list : run.queries) {
    const auto* judged = qrels.judged(list.query_id);
    const auto& j = judged != nullptr ? *judged : kEmpty;
    const bool has_relevant = std::any_of(j.begin(), j.end(), [](const auto& kv) { return kv.second > 0; });
    if (!has_relevant) {
      ++report.skipped;
      continue;
    }
    std::vector<std::string> ranked;
    ranked.reserve(list.entries.size());
    for (const auto& e : list.entries) ranked.push_back(e.doc_id);
    const double v = metric.id == MetricId::kNdcg ? ndcg_at_k(ranked, j, metric.k).value_or(0.0)
                                                  : err_at_k(ranked, j, metric.k, max_grade);
    report.per_query.emplace_back(list.query_id, v);
    sum += v;
  }
  if (!report.per_query.empty()) report.mean = sum / static_cast<double>(report.per_query.size());
  return report;
}

WinTieLoss win_tie_loss(const std::map<std::string, double>& a, const std::map<std::string, double>& b,
                        double epsilon) {
  if (a.size() != b.size()) throw Error("win/tie/loss: the two systems cover different queries");
  WinTieLoss out;
  for (const auto& [q, va] : a) {
    auto it = b.find(q);
    if (it == b.end()) throw Error("win/tie/loss: query '" + q + "' missing from the second system");
    const double diff = va - it->second;
    if (std::abs(diff) < epsilon) {
      ++out.ties;
    } else if (diff > 0) {
      ++out.wins;
    } else {
      ++out.losses;
    }
  }
  return out;
}

double permutation_test(std::span<const double> a, std::span<const double> b, int iterations, std::uint64_t seed,
                        int threads) {
  if (a.size() != b.size()) throw Error("permutation test: paired samples differ in length");
  if (a.size() < 2) throw Error("permutation test: need at least two queries");
  if (iterations < 1) throw Error("permutation test: need at least one iteration");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = a[i] - b[i];
    observed += diff[i];
  }
  observed = std::abs(observed / static_cast<double>(n));
  // Sums of the same magnitudes in a different order can differ in the last
  // bits; treat those as ties with the observed statistic.
  const double threshold = observed - 1e-12 * std::max(1.0, observed);

  threads = std::max(1, threads);
  std::vector<long> counts(static_cast<std::size_t>(threads), 0);
  auto worker = [&](int t) {
    long count = 0;
    for (int it = t; it < iterations; it += threads) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(it))));
      double sum = 0.0;
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) bits = rng();
        sum += (bits & 1ULL) ? -diff[i] : diff[i];
        bits >>= 1;
      }
      if (std::abs(sum / static_cast<double>(n)) >= threshold) ++count;
    }
    counts[static_cast<std::size_t>(t)] = count;
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  long total = 0;
  for (long c : counts) total += c;
  return (static_cast<double>(total) + 1.0) / (static_cast<double>(iterations) + 1.0);
}

}  // namespace duet

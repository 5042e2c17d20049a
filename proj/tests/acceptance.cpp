// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "duet/crossval.hpp"
#include "duet/features.hpp"
#include "duet/metrics.hpp"
#include "duet/ranker.hpp"
#include "duet/retrieval.hpp"

#include "e2e.hpp"
#include "fixture_corpus.hpp"
#include "metric_cases.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace duet;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    pass_ = false;
    if (++failures_ <= 3) msg_ << (failures_ > 1 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  Outcome outcome() const {
    return {pass_, pass_ ? notes_.str() : msg_.str() + (failures_ > 3 ? " ..." : "")};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::ostringstream msg_, notes_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Outcome gradient_oracle() {
  Check c;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> l2(0.0, 0.1);
  int done = 0;
  double worst = 0.0;
  while (done < 100) {
    const auto p = synth::random_params(rng);
    const auto pos = synth::random_matrices(rng, 3, 2, 3, 2);
    const auto neg = synth::random_matrices(rng, 3, 2, 3, 2);
    // Finite differences straddle a kink only when one is within a step.
    if (synth::kink_distance(p, pos, neg) < 1e-3) continue;
    const double e = synth::pair_gradient_error(p, pos, neg, l2(rng), false, 1e-6);
    worst = std::max(worst, e);
    c.expect(e < 1e-4, "instance " + std::to_string(done) + " error " + fmt(e));
    ++done;
  }
  c.note("worst relative error " + fmt(worst));
  return c.outcome();
}

Outcome transe_oracle() {
  Check c;
  std::mt19937_64 rng(202);
  int done = 0;
  double worst = 0.0;
  while (done < 100) {
    const auto inst = synth::random_transe_instance(rng, 5);
    if (synth::transe_kink_distance(inst) < 1e-3) continue;
    const double e = synth::transe_gradient_error(inst, 1e-6);
    worst = std::max(worst, e);
    c.expect(e < 1e-4, "instance " + std::to_string(done) + " error " + fmt(e));
    ++done;
  }
  // Two six-entity chains joined position by position. Every relation is
  // one-to-one, so filtered negatives are always false triples.
  std::vector<std::string> ids;
  for (int i = 0; i < 12; ++i) ids.push_back("e" + std::to_string(i));
  std::vector<Triple> triples;
  for (int i = 0; i + 1 < 6; ++i) {
    triples.push_back({ids[i], "next", ids[i + 1]});
    triples.push_back({ids[6 + i], "next", ids[7 + i]});
  }
  for (int i = 0; i < 6; ++i) triples.push_back({ids[i], "paired", ids[6 + i]});
  TransEConfig cfg;
  cfg.filter_negatives = true;
  cfg.seed = 17;
  const auto r = train_transe(ids, triples, cfg);
  const double ratio = r.epoch_loss.back() / r.epoch_loss.front();
  c.expect(ratio < 0.25, "final/initial loss " + fmt(ratio));
  c.note("worst relative error " + fmt(worst) + ", final/initial loss " + fmt(ratio));
  return c.outcome();
}

// Independent similarity and bucketing over plain arrays.
double brute_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0.0, nb = 0.0;
  for (double x : a) na += std::abs(x);
  for (double x : b) nb += std::abs(x);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] / na - b[i] / nb);
  return std::clamp(1.0 - d / 2.0, 0.0, 1.0);
}

int brute_bin(double s) {
  const double lows[] = {0.8, 0.6, 0.4, 0.2};
  for (int k = 0; k < 4; ++k) {
    if (s >= lows[k]) return k + 1;
  }
  return 5;
}

Outcome esr_oracle() {
  Check c;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> pick(0, 14), tf(1, 4), count(0, 8), dim(2, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  long exact_total = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    // 15 entities, the last three never embedded; near-duplicates make the
    // high bins reachable.
    const int d = dim(rng);
    std::vector<std::vector<double>> vecs(12, std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& v : vecs) {
      for (auto& x : v) x = u(rng);
    }
    for (std::size_t k = 1; k < 4; ++k) {
      for (std::size_t j = 0; j < vecs[k].size(); ++j) vecs[k][j] = vecs[0][j] + 0.2 * static_cast<double>(k) * u(rng);
    }
    std::vector<std::string> ids;
    Matrix<double> m(12, d);
    for (int e = 0; e < 12; ++e) {
      ids.push_back("E" + std::to_string(e));
      for (int j = 0; j < d; ++j) m(e, j) = vecs[static_cast<std::size_t>(e)][static_cast<std::size_t>(j)];
    }
    const EmbeddingTable table(EmbeddingKind::kTransEEntity, ids, m);
    const std::string query = "E" + std::to_string(coin(rng) < 0.8 ? 0 : pick(rng));

    DocumentEntities doc;
    std::array<std::map<std::string, int>, 2> fields;
    for (int f = 0; f < 2; ++f) {
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        const std::string id = "E" + std::to_string(pick(rng));
        const int t = tf(rng);
        fields[static_cast<std::size_t>(f)][id] += t;
        (f == 0 ? doc.title : doc.body).add_count(id, t);
      }
    }

    const QeDeRow row = qe_de_row(query, doc, &table);
    const int qi = std::stoi(query.substr(1));
    for (int f = 0; f < 2; ++f) {
      std::array<int, 6> brute{};
      int overlap = 0;
      for (const auto& [id, t] : fields[static_cast<std::size_t>(f)]) {
        const int ei = std::stoi(id.substr(1));
        if (id == query) {
          brute[0] += t;
          overlap += t;
          continue;
        }
        const bool embedded = qi < 12 && ei < 12;
        const double s = embedded ? brute_similarity(vecs[static_cast<std::size_t>(qi)], vecs[static_cast<std::size_t>(ei)]) : 0.0;
        brute[static_cast<std::size_t>(brute_bin(s))] += t;
      }
      exact_total += overlap;
      const auto counts = esr_bin_counts(query, f == 0 ? doc.title : doc.body, &table);
      c.expect(counts == brute, "instance " + std::to_string(inst) + " field " + std::to_string(f) + " bins differ");
      c.expect(counts[0] == overlap, "instance " + std::to_string(inst) + " exact bin != id overlap");
      for (int k = 0; k < 6; ++k) {
        c.expect(row(f * 6 + k) == std::log1p(static_cast<double>(brute[static_cast<std::size_t>(k)])),
                 "instance " + std::to_string(inst) + " row value differs");
      }
    }
  }
  c.note("1000 instances, " + std::to_string(exact_total) + " exact-match occurrences");
  return c.outcome();
}

Outcome retrieval_oracle() {
  Check c;
  const auto toy = toy::load();
  const auto expected = toy::expected_scores();
  c.expect(expected.size() == 25, "expected 25 fixture rows");
  auto find = [](const auto& bags, const std::string& id) -> const BagOfWords* {
    for (const auto& [k, bag] : bags) {
      if (k == id) return &bag;
    }
    return nullptr;
  };
  double worst = 0.0;
  for (const auto& e : expected) {
    const BagOfWords* q = find(toy.queries, e.query);
    const BagOfWords* d = find(toy.docs, e.doc);
    if (q == nullptr || d == nullptr) {
      c.expect(false, "unknown fixture id");
      continue;
    }
    for (std::size_t s = 0; s < kAllScorers.size(); ++s) {
      const double diff = std::abs(score(kAllScorers[s], *q, *d, toy.stats) - e.scores[s]);
      worst = std::max(worst, diff);
      c.expect(diff < 1e-9, std::string(scorer_name(kAllScorers[s])) + " " + e.query + "/" + e.doc);
    }
    for (ScorerId s : kAllScorers) {
      if (!is_additive(s)) continue;
      double sum = 0.0;
      for (const auto& [t, n] : q->counts()) sum += n * score_singleton(s, t, *d, toy.stats);
      c.expect(std::abs(sum - score(s, *q, *d, toy.stats)) < 1e-9,
               "decomposition " + std::string(scorer_name(s)) + " " + e.query + "/" + e.doc);
    }
  }
  c.note("225 scores, worst difference " + fmt(worst));
  return c.outcome();
}

Outcome metric_oracle() {
  Check c;
  const auto cases = metriccase::load();
  c.expect(cases.size() == 5, "expected 5 fixture rankings");
  for (const auto& mc : cases) {
    const auto n = ndcg_at_k(mc.ranking, mc.judged, 20);
    c.expect(n && std::abs(*n - mc.ndcg) < 1e-9, "ndcg " + mc.name);
    c.expect(std::abs(err_at_k(mc.ranking, mc.judged, 20, 4) - mc.err) < 1e-9, "err " + mc.name);
  }
  c.expect(std::abs(*ndcg_at_k({"x", "r"}, {{"r", 1}}) - 0.6309) < 5e-5, "ndcg 0.6309 example");
  c.expect(err_at_k({"r"}, {{"r", 4}}) == 0.9375, "err 0.9375 example");

  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<double> a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) {
    b[i] = u(rng);
    a[i] = b[i] + 0.1 + 0.2 * u(rng);
  }
  const double same = permutation_test(b, b, 100000, 1, 4);
  const double dominant = permutation_test(a, b, 100000, 1, 4);
  c.expect(same == 1.0, "identical systems p = " + fmt(same));
  c.expect(dominant < 0.01, "dominant system p = " + fmt(dominant));
  c.note("identical p " + fmt(same) + ", dominant p " + fmt(dominant));
  return c.outcome();
}

Outcome schema_dimensions() {
  Check c;
  static_assert(kQwDwCols == 18 && kQwDeCols == 48 && kQeDwCols == 24 && kQeDeCols == 12);
  static_assert(kWordCols == 66 && kEntityCols == 36 && kEntityAttCols == 4);
  c.expect(word_column_names().size() == 66, "word columns");
  c.expect(entity_column_names().size() == 36, "entity columns");
  c.expect(entity_attention_column_names().size() == 4, "attention columns");
  const auto m = DuetFeatureMatrices::zeros(10, 5);
  c.expect(m.word_features.cols() == 66 && m.entity_features.cols() == 36 && m.entity_attention.cols() == 4,
           "matrix widths");
  c.note("R_w 66 = 18 + 48, R_e 36 = 24 + 12, A_e 4");
  return c.outcome();
}

Outcome separability() {
  Check c;
  const auto data = synth::separable_queries(50, 20, 707);
  CrossValConfig cfg;
  cfg.folds = 10;
  const auto result = cross_validate(data, cfg);
  const auto report = evaluate_run(result.run, qrels_from_candidates(data), parse_metric("ndcg@20"));
  c.expect(report.per_query.size() == 50, "evaluated " + std::to_string(report.per_query.size()) + " queries");
  for (const auto& [q, v] : report.per_query) c.expect(v == 1.0, q + " ndcg " + fmt(v));
  c.note("10-fold NDCG@20 " + fmt(report.mean));
  return c.outcome();
}

struct NoisyResult {
  double clean_attention = 0.0;
  double noise_attention = 0.0;
  double attention_ndcg = 0.0;
  double flat_ndcg = 0.0;
};

NoisyResult noisy_benchmark(std::uint64_t seed) {
  auto split = [](std::vector<synth::NoisyQuery> qs) {
    std::vector<QueryCandidates> out;
    for (auto& q : qs) out.push_back(std::move(q.candidates));
    return out;
  };
  const auto train = split(synth::noisy_entity_queries(40, 20, seed * 3 + 1));
  const auto dev = split(synth::noisy_entity_queries(10, 20, seed * 3 + 2));
  const auto test = synth::noisy_entity_queries(50, 20, seed * 3 + 3);
  std::vector<QueryCandidates> test_qc;
  for (const auto& q : test) test_qc.push_back(q.candidates);

  TrainConfig cfg;
  cfg.seed = seed;
  const TrainedModel learned = train_ranker(train, dev, cfg);
  cfg.flat_attention = true;
  const TrainedModel flat = train_ranker(train, dev, cfg);

  NoisyResult r;
  r.attention_ndcg = mean_ndcg(learned, test_qc, 20);
  r.flat_ndcg = mean_ndcg(flat, test_qc, 20);
  double clean_sum = 0.0, noise_sum = 0.0;
  long clean_n = 0, noise_n = 0;
  for (const auto& q : test) {
    // Attention depends only on the query entity, so any candidate will do.
    const auto t = forward_trace(learned.params, q.candidates.features.front(), false);
    for (std::size_t j = 0; j < q.entity_is_noise.size(); ++j) {
      const double a = t.entity_weight(static_cast<Eigen::Index>(j));
      if (q.entity_is_noise[j]) {
        noise_sum += a;
        ++noise_n;
      } else {
        clean_sum += a;
        ++clean_n;
      }
    }
  }
  r.clean_attention = clean_sum / static_cast<double>(clean_n);
  r.noise_attention = noise_n > 0 ? noise_sum / static_cast<double>(noise_n) : 0.0;
  return r;
}

Outcome attention_denoising() {
  Check c;
  int separated = 0;
  double att = 0.0, flat = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = noisy_benchmark(seed);
    if (r.noise_attention < r.clean_attention) ++separated;
    att += r.attention_ndcg / 10.0;
    flat += r.flat_ndcg / 10.0;
  }
  c.expect(separated >= 9, "noise < clean attention in only " + std::to_string(separated) + "/10 seeds");
  c.expect(att - flat >= 0.05, "attention " + fmt(att) + " vs flat " + fmt(flat));
  c.note("noise < clean in " + std::to_string(separated) + "/10 seeds, NDCG@20 attention " + fmt(att) + " vs flat " +
         fmt(flat));
  return c.outcome();
}

Outcome padding_invariance() {
  Check c;
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> words(1, 5), entities(0, 5);
  for (int q = 0; q < 100; ++q) {
    const auto p = synth::random_params(rng);
    const auto m5 = synth::random_matrices(rng, words(rng), entities(rng), 5, 5);
    const auto m10 = synth::repad(m5, 10, 10);
    for (bool flat : {false, true}) {
      const double a = forward(p, m5, flat);
      const double b = forward(p, m10, flat);
      c.expect(std::memcmp(&a, &b, sizeof a) == 0, "query " + std::to_string(q) + " scores differ");
    }
  }
  c.note("100 queries bit-equal");
  return c.outcome();
}

Outcome end_to_end_determinism() {
  Check c;
  testutil::TempDir a, b;
  e2e::run_all(e2e::mini_config(a.dir(), 1));
  e2e::run_all(e2e::mini_config(b.dir(), 1));
  for (const auto& name : e2e::artifact_names()) {
    const auto x = testutil::slurp(a.path(name));
    c.expect(!x.empty(), name + " is empty");
    c.expect(x == testutil::slurp(b.path(name)), name + " differs");
  }
  c.note(std::to_string(e2e::artifact_names().size()) + " artifacts byte-identical");
  return c.outcome();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "ranker gradient oracle", 10, gradient_oracle},
      {2, "TransE oracle", 30, transe_oracle},
      {3, "ESR bin oracle", 0, esr_oracle},
      {4, "retrieval-model oracle", 0, retrieval_oracle},
      {5, "metric oracle", 0, metric_oracle},
      {6, "feature-schema dimensions", 0, schema_dimensions},
      {7, "synthetic separability", 120, separability},
      {8, "attention denoising", 300, attention_denoising},
      {9, "padding invariance", 0, padding_invariance},
      {10, "end-to-end determinism", 0, end_to_end_determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget_s > 0 && secs > cr.budget_s) {
      o.pass = false;
      o.detail += " (took " + fmt(secs) + " s, limit " + fmt(cr.budget_s) + " s)";
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << cr.id << "] " << cr.name << ": " << o.detail << " ("
              << fmt(secs) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

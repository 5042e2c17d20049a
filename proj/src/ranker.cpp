#include "duet/ranker.hpp"

#include "duet/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace duet {

using json = nlohmann::json;

namespace {

// Nadam as shipped in Keras: Adam with a Nesterov look-ahead on the first
// moment and a warming momentum schedule.
class Nadam {
 public:
  Nadam(Eigen::Index size, double lr, double beta1, double beta2)
      : lr_(lr), beta1_(beta1), beta2_(beta2), m_(Vector<double>::Zero(size)), v_(Vector<double>::Zero(size)) {}

  void step(Vector<double>& params, const Vector<double>& grad) {
    ++t_;
    const double t = static_cast<double>(t_);
    const double mu_t = beta1_ * (1.0 - 0.5 * std::pow(0.96, t * kScheduleDecay));
    const double mu_next = beta1_ * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * kScheduleDecay));
    const double schedule = m_schedule_ * mu_t;
    const double schedule_next = schedule * mu_next;
    m_schedule_ = schedule;

    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const Vector<double> g_hat = grad / (1.0 - schedule);
    const Vector<double> m_hat = m_ / (1.0 - schedule_next);
    const Vector<double> v_hat = v_ / (1.0 - std::pow(beta2_, t));
    const Vector<double> m_bar = (1.0 - mu_t) * g_hat + mu_next * m_hat;
    params.array() -= lr_ * m_bar.array() / (v_hat.array().sqrt() + kEpsilon);
  }

 private:
  static constexpr double kScheduleDecay = 0.004;
  static constexpr double kEpsilon = 1e-7;

  double lr_, beta1_, beta2_;
  Vector<double> m_, v_;
  double m_schedule_ = 1.0;
  long t_ = 0;
};

bool is_positive(int grade) { return grade > 0; }

}  // namespace

ModelParams initial_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.01, 0.01);
  ModelParams p;
  const Vector<double> mask = ModelParams::weight_mask();
  for (Eigen::Index i = 0; i < ModelParams::kSize; ++i) {
    const double v = unif(rng);
    if (mask(i) != 0.0) p.data()(i) = v;
  }
  p.word_att_bias() = 0.1;
  p.entity_att_bias() = 0.1;
  return p;
}

BatchObjective batch_objective(const ModelParams& p, const std::vector<QueryCandidates>& queries, double l2,
                               bool flat_attention, bool unjudged_as_negative) {
  BatchObjective out;
  double hinge_sum = 0.0;
  std::vector<double> scores;
  std::vector<double> coeff;
  std::vector<int> labels;  // 1 = D+, 0 = D-, -1 = excluded
  for (const auto& q : queries) {
    const std::size_t n = q.doc_ids.size();
    scores.assign(n, 0.0);
    coeff.assign(n, 0.0);
    labels.assign(n, -1);
    for (std::size_t d = 0; d < n; ++d) {
      auto it = q.judged.find(q.doc_ids[d]);
      if (it != q.judged.end()) {
        labels[d] = is_positive(it->second) ? 1 : 0;
      } else if (unjudged_as_negative) {
        labels[d] = 0;
      }
      if (labels[d] >= 0) scores[d] = forward(p, q.features[d], flat_attention);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != 1) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] != 0) continue;
        ++out.pairs;
        const double h = 1.0 - scores[i] + scores[j];
        if (h > 0.0) {
          hinge_sum += h;
          coeff[i] -= 1.0;
          coeff[j] += 1.0;
        }
      }
    }
    for (std::size_t d = 0; d < n; ++d) {
      if (coeff[d] != 0.0) accumulate_score_gradient(p, q.features[d], flat_attention, coeff[d], out.gradient);
    }
  }
  if (out.pairs > 0) {
    out.gradient.data() /= static_cast<double>(out.pairs);
    hinge_sum /= static_cast<double>(out.pairs);
  }
  out.loss = hinge_sum + l2_penalty(p, l2);
  out.gradient.data().array() += 2.0 * l2 * p.data().array() * ModelParams::weight_mask().array();
  return out;
}

RankedList rank_candidates(const TrainedModel& model, const QueryCandidates& query) {
  if (query.features.size() != query.doc_ids.size()) {
    throw Error("query '" + query.query_id + "': candidate and feature counts differ");
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(query.doc_ids.size());
  for (std::size_t d = 0; d < query.doc_ids.size(); ++d) {
    DuetFeatureMatrices m = query.features[d];
    if (!model.columns.all()) apply_selection(m, model.columns);
    scored.emplace_back(forward(model.params, m, model.flat_attention), d);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return query.doc_ids[a.second] < query.doc_ids[b.second];
  });
  RankedList out{query.query_id, {}};
  int rank = 1;
  for (const auto& [s, d] : scored) out.entries.push_back({query.doc_ids[d], rank++, s});
  return out;
}

double mean_ndcg(const TrainedModel& model, const std::vector<QueryCandidates>& queries, int k, int* evaluated) {
  double sum = 0.0;
  int n = 0;
  for (const auto& q : queries) {
    const RankedList list = rank_candidates(model, q);
    std::vector<std::string> ranked;
    for (const auto& e : list.entries) ranked.push_back(e.doc_id);
    if (auto v = ndcg_at_k(ranked, q.judged, k)) {
      sum += *v;
      ++n;
    }
  }
  if (evaluated != nullptr) *evaluated = n;
  return n > 0 ? sum / n : 0.0;
}

TrainedModel train_ranker(const std::vector<QueryCandidates>& train_in, const std::vector<QueryCandidates>& dev_in,
                          const TrainConfig& config, TrainingLog* log) {
  if (config.l2_grid.empty()) throw Error("train: empty l2 grid");
  if (config.max_epochs < 1 || config.patience < 1 || config.learning_rate <= 0.0) {
    throw Error("train: invalid config (need max_epochs >= 1, patience >= 1, lr > 0)");
  }
  TrainingLog local_log;
  TrainingLog& tlog = log != nullptr ? *log : local_log;
  tlog = {};

  const std::vector<QueryCandidates>& train = train_in;
  {
    BatchObjective probe = batch_objective(initial_params(config.seed), train, 0.0, config.flat_attention,
                                           config.unjudged_as_negative);
    if (probe.pairs == 0) throw Error("train: no (relevant, irrelevant) training pairs");
  }
  int dev_evaluable = 0;
  {
    TrainedModel probe;
    probe.params = initial_params(config.seed);
    probe.flat_attention = config.flat_attention;
    mean_ndcg(probe, dev_in, config.metric_depth, &dev_evaluable);
  }
  const bool use_train_for_dev = dev_evaluable == 0;
  tlog.dev_fallback_to_train = use_train_for_dev;
  const std::vector<QueryCandidates>& dev = use_train_for_dev ? train : dev_in;

  TrainedModel best_overall;
  double best_overall_ndcg = -1.0;
  for (double l2 : config.l2_grid) {
    LambdaLog lambda_log;
    lambda_log.l2 = l2;
    TrainedModel current;
    current.params = initial_params(config.seed);
    current.flat_attention = config.flat_attention;
    current.l2 = l2;
    TrainedModel best = current;
    double best_ndcg = mean_ndcg(current, dev, config.metric_depth);
    lambda_log.dev_ndcg.push_back(best_ndcg);
    Nadam opt(ModelParams::kSize, config.learning_rate, config.beta1, config.beta2);
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
      BatchObjective obj =
          batch_objective(current.params, train, l2, config.flat_attention, config.unjudged_as_negative);
      lambda_log.train_loss.push_back(obj.loss);
      opt.step(current.params.data(), obj.gradient.data());
      const double ndcg = mean_ndcg(current, dev, config.metric_depth);
      lambda_log.dev_ndcg.push_back(ndcg);
      lambda_log.epochs_run = epoch;
      // A tie with the best keeps training: small dev sets saturate at 1
      // long before the ranking margins are wide.
      if (ndcg >= best_ndcg) {
        best_ndcg = ndcg;
        best = current;
        lambda_log.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
    lambda_log.best_dev_ndcg = best_ndcg;
    tlog.lambdas.push_back(lambda_log);
    const bool better = best_ndcg > best_overall_ndcg ||
                        (best_ndcg == best_overall_ndcg && l2 < best_overall.l2);
    if (better) {
      best_overall = best;
      best_overall_ndcg = best_ndcg;
    }
  }
  tlog.selected_l2 = best_overall.l2;
  return best_overall;
}

std::string model_to_json(const TrainedModel& model) {
  const ModelParams& p = model.params;
  auto vec = [](const auto& v) {
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
    return out;
  };
  auto bools = [](const auto& a) {
    std::vector<bool> out(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) out[static_cast<std::size_t>(i)] = a(i);
    return out;
  };
  json j;
  j["format"] = "duet-ranker-model";
  j["version"] = 1;
  j["schema"] = kFeatureSchemaVersion;
  j["schema_hash"] = feature_schema_hash();
  j["flat_attention"] = model.flat_attention;
  j["l2"] = model.l2;
  j["word_match"] = vec(p.word_match());
  j["word_match_bias"] = p.word_match_bias();
  j["entity_match"] = vec(p.entity_match());
  j["entity_match_bias"] = p.entity_match_bias();
  j["word_attention"] = vec(p.word_att());
  j["word_attention_bias"] = p.word_att_bias();
  j["entity_attention"] = vec(p.entity_att());
  j["entity_attention_bias"] = p.entity_att_bias();
  j["word_columns"] = bools(model.columns.word);
  j["entity_columns"] = bools(model.columns.entity);
  return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "duet-ranker-model" || j.at("version").get<int>() != 1) {
      throw Error("not a duet ranker model file (format/version)");
    }
    if (j.at("schema_hash").get<std::string>() != feature_schema_hash()) {
      throw Error("model was trained on feature schema " + j.at("schema_hash").get<std::string>() +
                  ", this build uses " + feature_schema_hash());
    }
    TrainedModel m;
    m.flat_attention = j.at("flat_attention").get<bool>();
    m.l2 = j.at("l2").get<double>();
    auto fill = [&](const char* key, auto segment) {
      auto v = j.at(key).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != segment.size()) throw Error(std::string("model block '") + key + "' has the wrong size");
      for (std::size_t i = 0; i < v.size(); ++i) segment(static_cast<Eigen::Index>(i)) = v[i];
    };
    fill("word_match", m.params.word_match());
    m.params.word_match_bias() = j.at("word_match_bias").get<double>();
    fill("entity_match", m.params.entity_match());
    m.params.entity_match_bias() = j.at("entity_match_bias").get<double>();
    fill("word_attention", m.params.word_att());
    m.params.word_att_bias() = j.at("word_attention_bias").get<double>();
    fill("entity_attention", m.params.entity_att());
    m.params.entity_att_bias() = j.at("entity_attention_bias").get<double>();
    auto wc = j.at("word_columns").get<std::vector<bool>>();
    auto ec = j.at("entity_columns").get<std::vector<bool>>();
    if (wc.size() != static_cast<std::size_t>(kWordCols) || ec.size() != static_cast<std::size_t>(kEntityCols)) {
      throw Error("model column selection has the wrong size");
    }
    for (int c = 0; c < kWordCols; ++c) m.columns.word(c) = wc[static_cast<std::size_t>(c)];
    for (int c = 0; c < kEntityCols; ++c) m.columns.entity(c) = ec[static_cast<std::size_t>(c)];
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path);
  out << model_to_json(model);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace duet

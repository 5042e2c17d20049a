#pragma once

#include "duet/common.hpp"
#include "duet/corpus.hpp"
#include "duet/features.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace duet {

/// The eight parameter blocks of the attention ranker, packed into one
/// vector so optimizers and gradient checks can treat them uniformly.
template <typename Scalar>
class ModelParamsT {
 public:
  static constexpr Eigen::Index kWordMatch = 0;
  static constexpr Eigen::Index kWordMatchBias = kWordMatch + kWordCols;
  static constexpr Eigen::Index kEntityMatch = kWordMatchBias + 1;
  static constexpr Eigen::Index kEntityMatchBias = kEntityMatch + kEntityCols;
  static constexpr Eigen::Index kWordAtt = kEntityMatchBias + 1;
  static constexpr Eigen::Index kWordAttBias = kWordAtt + kWordAttCols;
  static constexpr Eigen::Index kEntityAtt = kWordAttBias + 1;
  static constexpr Eigen::Index kEntityAttBias = kEntityAtt + kEntityAttCols;
  static constexpr Eigen::Index kSize = kEntityAttBias + 1;

  ModelParamsT() : data_(Vector<Scalar>::Zero(kSize)) {}
  explicit ModelParamsT(Vector<Scalar> data) : data_(std::move(data)) {
    if (data_.size() != kSize) throw Error("model parameter vector has the wrong length");
  }

  auto word_match() { return data_.segment(kWordMatch, kWordCols); }
  auto word_match() const { return data_.segment(kWordMatch, kWordCols); }
  Scalar& word_match_bias() { return data_(kWordMatchBias); }
  Scalar word_match_bias() const { return data_(kWordMatchBias); }
  auto entity_match() { return data_.segment(kEntityMatch, kEntityCols); }
  auto entity_match() const { return data_.segment(kEntityMatch, kEntityCols); }
  Scalar& entity_match_bias() { return data_(kEntityMatchBias); }
  Scalar entity_match_bias() const { return data_(kEntityMatchBias); }
  auto word_att() { return data_.segment(kWordAtt, kWordAttCols); }
  auto word_att() const { return data_.segment(kWordAtt, kWordAttCols); }
  Scalar& word_att_bias() { return data_(kWordAttBias); }
  Scalar word_att_bias() const { return data_(kWordAttBias); }
  auto entity_att() { return data_.segment(kEntityAtt, kEntityAttCols); }
  auto entity_att() const { return data_.segment(kEntityAtt, kEntityAttCols); }
  Scalar& entity_att_bias() { return data_(kEntityAttBias); }
  Scalar entity_att_bias() const { return data_(kEntityAttBias); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  /// 1 on weight coordinates, 0 on the four biases (L2 applies to weights only).
  static Vector<Scalar> weight_mask() {
    Vector<Scalar> m = Vector<Scalar>::Ones(kSize);
    m(kWordMatchBias) = m(kEntityMatchBias) = m(kWordAttBias) = m(kEntityAttBias) = Scalar(0);
    return m;
  }

  bool operator==(const ModelParamsT& o) const { return data_ == o.data_; }

 private:
  Vector<Scalar> data_;
};

using ModelParams = ModelParamsT<double>;

/// Per-row matching scores and attention weights of one forward pass.
template <typename Scalar>
struct ForwardTrace {
  // Padding rows hold 0 throughout.
  Vector<Scalar> word_match;       // F_w
  Vector<Scalar> entity_match;     // F_e
  Vector<Scalar> word_pre;         // attention pre-activations
  Vector<Scalar> entity_pre;
  Vector<Scalar> word_weight;      // alpha_w
  Vector<Scalar> entity_weight;    // alpha_e
  Scalar score = Scalar(0);
};

/// f(q, d) = sum_i F_w(i) alpha_w(i) + sum_j F_e(j) alpha_e(j) over unmasked
/// rows, with F linear in the ranking features and alpha = ReLU of a linear
/// map of the attention features. flat_attention forces alpha = 1.
template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const ModelParamsT<Scalar>& p, const DuetFeatureMatricesT<Scalar>& m,
                                   bool flat_attention) {
  m.validate();
  ForwardTrace<Scalar> t;
  const Eigen::Index n = m.word_features.rows();
  const Eigen::Index k = m.entity_features.rows();
  t.word_match = Vector<Scalar>::Zero(n);
  t.word_pre = Vector<Scalar>::Zero(n);
  t.word_weight = Vector<Scalar>::Zero(n);
  t.entity_match = Vector<Scalar>::Zero(k);
  t.entity_pre = Vector<Scalar>::Zero(k);
  t.entity_weight = Vector<Scalar>::Zero(k);
  // Each row is reduced on its own, in order, and padding rows are never
  // touched, so the score is bit-identical for any pad length.
  Scalar s(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!m.word_mask(i)) continue;
    t.word_match(i) = m.word_features.row(i).dot(p.word_match().transpose()) + p.word_match_bias();
    t.word_pre(i) = m.word_attention.row(i).dot(p.word_att().transpose()) + p.word_att_bias();
    t.word_weight(i) = flat_attention ? Scalar(1) : std::max(t.word_pre(i), Scalar(0));
    s += t.word_match(i) * t.word_weight(i);
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!m.entity_mask(j)) continue;
    t.entity_match(j) = m.entity_features.row(j).dot(p.entity_match().transpose()) + p.entity_match_bias();
    t.entity_pre(j) = m.entity_attention.row(j).dot(p.entity_att().transpose()) + p.entity_att_bias();
    t.entity_weight(j) = flat_attention ? Scalar(1) : std::max(t.entity_pre(j), Scalar(0));
    s += t.entity_match(j) * t.entity_weight(j);
  }
  t.score = s;
  return t;
}

template <typename Scalar>
Scalar forward(const ModelParamsT<Scalar>& p, const DuetFeatureMatricesT<Scalar>& m, bool flat_attention = false) {
  return forward_trace(p, m, flat_attention).score;
}

/// grad += coeff * d f(q, d) / d params. ReLU derivative is 0 at 0.
template <typename Scalar>
void accumulate_score_gradient(const ModelParamsT<Scalar>& p, const DuetFeatureMatricesT<Scalar>& m,
                               bool flat_attention, Scalar coeff, ModelParamsT<Scalar>& grad) {
  const auto t = forward_trace(p, m, flat_attention);
  for (Eigen::Index i = 0; i < m.word_mask.size(); ++i) {
    if (!m.word_mask(i)) continue;
    const Scalar a = t.word_weight(i);
    grad.word_match() += coeff * a * m.word_features.row(i).transpose();
    grad.word_match_bias() += coeff * a;
    if (!flat_attention && t.word_pre(i) > Scalar(0)) {
      grad.word_att() += coeff * t.word_match(i) * m.word_attention.row(i).transpose();
      grad.word_att_bias() += coeff * t.word_match(i);
    }
  }
  for (Eigen::Index j = 0; j < m.entity_mask.size(); ++j) {
    if (!m.entity_mask(j)) continue;
    const Scalar a = t.entity_weight(j);
    grad.entity_match() += coeff * a * m.entity_features.row(j).transpose();
    grad.entity_match_bias() += coeff * a;
    if (!flat_attention && t.entity_pre(j) > Scalar(0)) {
      grad.entity_att() += coeff * t.entity_match(j) * m.entity_attention.row(j).transpose();
      grad.entity_att_bias() += coeff * t.entity_match(j);
    }
  }
}

template <typename Scalar>
Scalar l2_penalty(const ModelParamsT<Scalar>& p, Scalar l2) {
  return l2 * (p.data().array() * ModelParamsT<Scalar>::weight_mask().array()).square().sum();
}

/// [1 - f(d+) + f(d-)]_+ + l2 * sum of squared weights.
template <typename Scalar>
Scalar pair_loss(const ModelParamsT<Scalar>& p, const DuetFeatureMatricesT<Scalar>& pos,
                 const DuetFeatureMatricesT<Scalar>& neg, Scalar l2 = Scalar(0), bool flat_attention = false) {
  const Scalar hinge = Scalar(1) - forward(p, pos, flat_attention) + forward(p, neg, flat_attention);
  return std::max(Scalar(0), hinge) + l2_penalty(p, l2);
}

/// Exact subgradient of pair_loss; the hinge contributes nothing at or
/// past its kink.
template <typename Scalar>
ModelParamsT<Scalar> pair_gradient(const ModelParamsT<Scalar>& p, const DuetFeatureMatricesT<Scalar>& pos,
                                   const DuetFeatureMatricesT<Scalar>& neg, Scalar l2 = Scalar(0),
                                   bool flat_attention = false) {
  ModelParamsT<Scalar> g;
  const Scalar hinge = Scalar(1) - forward(p, pos, flat_attention) + forward(p, neg, flat_attention);
  if (hinge > Scalar(0)) {
    accumulate_score_gradient(p, pos, flat_attention, Scalar(-1), g);
    accumulate_score_gradient(p, neg, flat_attention, Scalar(1), g);
  }
  g.data().array() += Scalar(2) * l2 * p.data().array() * ModelParamsT<Scalar>::weight_mask().array();
  return g;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::vector<double> l2_grid{0.0, 0.001, 0.01, 0.1};
  int max_epochs = 300;
  int patience = 20;
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 1;
  bool flat_attention = false;
  /// Unjudged candidates join D- when set; otherwise they are left out of pairs.
  bool unjudged_as_negative = false;
  int metric_depth = 20;
};

/// Candidates of one query with their features and relevance judgments.
struct QueryCandidates {
  std::string query_id;
  std::vector<std::string> doc_ids;
  std::vector<DuetFeatureMatrices> features;
  std::map<std::string, int> judged;  // doc_id -> grade, every judgment known for the query
};

struct LambdaLog {
  double l2 = 0.0;
  double best_dev_ndcg = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<double> train_loss;
  std::vector<double> dev_ndcg;
};

struct TrainingLog {
  std::vector<LambdaLog> lambdas;
  double selected_l2 = 0.0;
  bool dev_fallback_to_train = false;
};

struct TrainedModel {
  ModelParams params;
  bool flat_attention = false;
  double l2 = 0.0;
  ColumnSelection columns;
};

/// Weights uniform in [-0.01, 0.01], match biases 0, attention biases 0.1.
ModelParams initial_params(std::uint64_t seed);

/// Full-batch pairwise hinge training with a Nadam update, one run per
/// l2 value; each run keeps the last epoch matching its best dev NDCG and
/// stops after `patience` epochs below that best. The l2 with the best dev NDCG
/// wins (ties go to the smaller l2). With no evaluable dev query, training
/// NDCG drives both choices.
TrainedModel train_ranker(const std::vector<QueryCandidates>& train, const std::vector<QueryCandidates>& dev,
                          const TrainConfig& config, TrainingLog* log = nullptr);

/// Mean per-pair hinge + l2 penalty over all training pairs, and its gradient.
struct BatchObjective {
  double loss = 0.0;
  ModelParams gradient;
  long pairs = 0;
};
BatchObjective batch_objective(const ModelParams& p, const std::vector<QueryCandidates>& queries, double l2,
                               bool flat_attention, bool unjudged_as_negative);

/// Sorted by score descending, doc_id ascending on ties; ranks start at 1.
RankedList rank_candidates(const TrainedModel& model, const QueryCandidates& query);

double mean_ndcg(const TrainedModel& model, const std::vector<QueryCandidates>& queries, int k,
                 int* evaluated = nullptr);

/// JSON model file with the feature-schema hash; loading refuses other schemas.
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace duet

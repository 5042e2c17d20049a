#include "duet/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

namespace duet {

namespace {

struct IndexedTriple {
  std::size_t head, predicate, tail;
  auto operator<=>(const IndexedTriple&) const = default;
};

Matrix<double> uniform_init(Eigen::Index rows, int dim, std::mt19937_64& rng) {
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> unif(-bound, bound);
  Matrix<double> m(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = unif(rng);
  }
  return m;
}

void normalize_row(Matrix<double>& m, std::size_t r) {
  auto row = m.row(static_cast<Eigen::Index>(r));
  const double n = row.norm();
  if (n > 0.0) row /= n;
}

}  // namespace

TransEResult train_transe(const std::vector<std::string>& entity_ids, const std::vector<Triple>& triples,
                          const TransEConfig& config) {
  if (triples.empty()) throw Error("train_transe: empty triple set");
  if (config.dim <= 0 || config.learning_rate <= 0.0 || config.epochs < 1 || config.batch_size < 1) {
    throw Error("train_transe: invalid config (need dim > 0, lr > 0, epochs >= 1, batch_size >= 1)");
  }
  if (entity_ids.size() < 2) throw Error("train_transe: need at least two entities to sample negatives");

  std::unordered_map<std::string, std::size_t> ent_index;
  for (std::size_t i = 0; i < entity_ids.size(); ++i) ent_index.emplace(entity_ids[i], i);
  std::vector<std::string> predicates;
  std::unordered_map<std::string, std::size_t> pred_index;
  std::vector<IndexedTriple> data;
  data.reserve(triples.size());
  for (const auto& t : triples) {
    auto h = ent_index.find(t.head);
    auto tl = ent_index.find(t.tail);
    if (h == ent_index.end() || tl == ent_index.end()) {
      throw Error("train_transe: triple (" + t.head + ", " + t.predicate + ", " + t.tail + ") has an unknown endpoint");
    }
    auto [p, inserted] = pred_index.emplace(t.predicate, predicates.size());
    if (inserted) predicates.push_back(t.predicate);
    data.push_back({h->second, p->second, tl->second});
  }
  std::set<IndexedTriple> known;
  if (config.filter_negatives) known.insert(data.begin(), data.end());

  std::mt19937_64 rng(config.seed);
  const int dim = config.dim;
  Matrix<double> ent = uniform_init(static_cast<Eigen::Index>(entity_ids.size()), dim, rng);
  Matrix<double> pred = uniform_init(static_cast<Eigen::Index>(predicates.size()), dim, rng);
  for (std::size_t i = 0; i < entity_ids.size(); ++i) normalize_row(ent, i);
  for (std::size_t i = 0; i < predicates.size(); ++i) normalize_row(pred, i);

  std::uniform_int_distribution<std::size_t> pick_entity(0, entity_ids.size() - 1);
  std::bernoulli_distribution corrupt_head(0.5);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TransEResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
  const double lr = config.learning_rate;

  Matrix<double> ent_grad = Matrix<double>::Zero(ent.rows(), dim);
  Matrix<double> pred_grad = Matrix<double>::Zero(pred.rows(), dim);
  std::vector<std::size_t> touched_ents;
  std::vector<std::size_t> touched_preds;

  auto apply_batch = [&] {
    for (auto e : touched_ents) {
      ent.row(static_cast<Eigen::Index>(e)) -= lr * ent_grad.row(static_cast<Eigen::Index>(e));
      ent_grad.row(static_cast<Eigen::Index>(e)).setZero();
    }
    for (auto e : touched_ents) normalize_row(ent, e);
    for (auto p : touched_preds) {
      pred.row(static_cast<Eigen::Index>(p)) -= lr * pred_grad.row(static_cast<Eigen::Index>(p));
      pred_grad.row(static_cast<Eigen::Index>(p)).setZero();
    }
    touched_ents.clear();
    touched_preds.clear();
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int in_batch = 0;
    for (std::size_t idx : order) {
      const IndexedTriple& pos = data[idx];
      IndexedTriple neg = pos;
      for (int attempt = 0; attempt < 100; ++attempt) {
        neg = pos;
        if (corrupt_head(rng)) {
          neg.head = pick_entity(rng);
        } else {
          neg.tail = pick_entity(rng);
        }
        if (!config.filter_negatives || !known.contains(neg)) break;
      }
      auto h = ent.row(static_cast<Eigen::Index>(pos.head)).transpose();
      auto t = ent.row(static_cast<Eigen::Index>(pos.tail)).transpose();
      auto nh = ent.row(static_cast<Eigen::Index>(neg.head)).transpose();
      auto nt = ent.row(static_cast<Eigen::Index>(neg.tail)).transpose();
      auto p = pred.row(static_cast<Eigen::Index>(pos.predicate)).transpose();
      const Vector<double> hv = h, tv = t, nhv = nh, ntv = nt, pv = p;
      loss_sum += transe_pair_loss(hv, pv, tv, nhv, ntv, config.margin);
      auto g = transe_pair_gradient(hv, pv, tv, nhv, ntv, config.margin);
      ent_grad.row(static_cast<Eigen::Index>(pos.head)) += g.head.transpose();
      ent_grad.row(static_cast<Eigen::Index>(pos.tail)) += g.tail.transpose();
      ent_grad.row(static_cast<Eigen::Index>(neg.head)) += g.neg_head.transpose();
      ent_grad.row(static_cast<Eigen::Index>(neg.tail)) += g.neg_tail.transpose();
      pred_grad.row(static_cast<Eigen::Index>(pos.predicate)) += g.predicate.transpose();
      for (auto e : {pos.head, pos.tail, neg.head, neg.tail}) {
        if (std::find(touched_ents.begin(), touched_ents.end(), e) == touched_ents.end()) touched_ents.push_back(e);
      }
      if (std::find(touched_preds.begin(), touched_preds.end(), pos.predicate) == touched_preds.end()) {
        touched_preds.push_back(pos.predicate);
      }
      if (++in_batch == config.batch_size) {
        apply_batch();
        in_batch = 0;
      }
    }
    if (in_batch > 0) apply_batch();
    result.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
  }

  result.entities = EmbeddingTable(EmbeddingKind::kTransEEntity, entity_ids, std::move(ent));
  result.predicates = EmbeddingTable(EmbeddingKind::kTransEPredicate, std::move(predicates), std::move(pred));
  return result;
}

TransEResult train_transe(const KnowledgeBase& kb, const TransEConfig& config) {
  std::vector<std::string> ids;
  ids.reserve(kb.entities().size());
  for (const auto& e : kb.entities()) ids.push_back(e.entity_id);
  return train_transe(ids, kb.triples(), config);
}

}  // namespace duet

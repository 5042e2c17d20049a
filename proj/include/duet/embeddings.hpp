#pragma once

#include "duet/common.hpp"
#include "duet/kb.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace duet {

enum class EmbeddingKind { kTransEEntity, kTransEPredicate, kJoint };

/// Dense vectors keyed by symbol, stored as the rows of one matrix.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(EmbeddingKind kind, std::vector<std::string> symbols, Matrix<double> vectors);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  std::size_t size() const { return symbols_.size(); }
  EmbeddingKind kind() const { return kind_; }

  std::optional<std::size_t> index(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return index_.contains(symbol); }
  /// Absent symbols yield std::nullopt, never a zero vector.
  std::optional<Vector<double>> lookup(const std::string& symbol) const;

  auto row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }
  auto row(std::size_t i) { return vectors_.row(static_cast<Eigen::Index>(i)); }

  const std::vector<std::string>& symbols() const { return symbols_; }
  const Matrix<double>& vectors() const { return vectors_; }
  Matrix<double>& vectors() { return vectors_; }

 private:
  EmbeddingKind kind_ = EmbeddingKind::kJoint;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix<double> vectors_;
};

/// Cosine similarity; 0 when either vector has zero norm.
template <typename A, typename B>
typename A::Scalar cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return std::clamp(a.dot(b) / (na * nb), Scalar(-1), Scalar(1));
}

template <typename A, typename B>
typename A::Scalar l1_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).template lpNorm<1>();
}

/// Mean vector of the embedded symbols; nullopt when none are embedded.
std::optional<Vector<double>> mean_vector(const EmbeddingTable& table, const std::vector<std::string>& symbols);

/// Text format: header `count dim`, then `symbol v1 ... vdim` per line.
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void write_embeddings(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& in, EmbeddingKind kind);
EmbeddingTable load_embeddings(const std::string& path, EmbeddingKind kind);

// ---------------------------------------------------------------------------
// TransE

struct TransEConfig {
  int dim = 50;
  double margin = 1.0;
  double learning_rate = 0.01;
  int epochs = 1000;
  int batch_size = 1;
  /// Resample negatives that happen to be true triples.
  bool filter_negatives = false;
  std::uint64_t seed = 1;
};

struct TransEResult {
  EmbeddingTable entities;
  EmbeddingTable predicates;
  std::vector<double> epoch_loss;  // mean pair loss per epoch
};

/// Hinge pair loss [margin + |h + p - t|_1 - |h' + p - t'|_1]_+.
template <typename Scalar, typename V>
Scalar transe_pair_loss(const Eigen::MatrixBase<V>& head, const Eigen::MatrixBase<V>& predicate,
                        const Eigen::MatrixBase<V>& tail, const Eigen::MatrixBase<V>& neg_head,
                        const Eigen::MatrixBase<V>& neg_tail, Scalar margin) {
  const Scalar pos = (head + predicate - tail).template lpNorm<1>();
  const Scalar neg = (neg_head + predicate - neg_tail).template lpNorm<1>();
  return std::max(Scalar(0), margin + pos - neg);
}

template <typename Scalar>
struct TransEPairGradient {
  Vector<Scalar> head, predicate, tail, neg_head, neg_tail;
};

/// Subgradient of transe_pair_loss, treating all five vectors as
/// independent (callers sum contributions for shared entities). Zero
/// when the hinge is inactive or exactly at its kink.
template <typename Scalar, typename V>
TransEPairGradient<Scalar> transe_pair_gradient(const Eigen::MatrixBase<V>& head,
                                                const Eigen::MatrixBase<V>& predicate,
                                                const Eigen::MatrixBase<V>& tail,
                                                const Eigen::MatrixBase<V>& neg_head,
                                                const Eigen::MatrixBase<V>& neg_tail, Scalar margin) {
  const Eigen::Index d = head.size();
  TransEPairGradient<Scalar> g{Vector<Scalar>::Zero(d), Vector<Scalar>::Zero(d), Vector<Scalar>::Zero(d),
                               Vector<Scalar>::Zero(d), Vector<Scalar>::Zero(d)};
  const Vector<Scalar> pos = head + predicate - tail;
  const Vector<Scalar> neg = neg_head + predicate - neg_tail;
  if (margin + pos.template lpNorm<1>() - neg.template lpNorm<1>() <= Scalar(0)) return g;
  const Vector<Scalar> sp = pos.array().sign().matrix();
  const Vector<Scalar> sn = neg.array().sign().matrix();
  g.head = sp;
  g.tail = -sp;
  g.neg_head = -sn;
  g.neg_tail = sn;
  g.predicate = sp - sn;
  return g;
}

TransEResult train_transe(const std::vector<std::string>& entity_ids, const std::vector<Triple>& triples,
                          const TransEConfig& config);
TransEResult train_transe(const KnowledgeBase& kb, const TransEConfig& config);

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling

struct SkipGramConfig {
  int dim = 300;
  int window = 5;
  int negatives = 5;
  int min_count = 1;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

/// Trains input vectors over the given token streams; the returned table
/// holds every symbol with frequency >= min_count.
EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& streams, const SkipGramConfig& config);

}  // namespace duet

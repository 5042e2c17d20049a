#include "duet/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace duet {

namespace {

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& streams, const SkipGramConfig& config) {
  if (config.dim <= 0 || config.window < 1 || config.negatives < 0 || config.epochs < 1 || config.learning_rate <= 0.0) {
    throw Error("train_skipgram: invalid config");
  }
  std::map<std::string, long> counts;
  for (const auto& s : streams) {
    for (const auto& tok : s) ++counts[tok];
  }
  std::vector<std::string> vocab;
  std::vector<long> freq;
  std::unordered_map<std::string, int> index;
  for (const auto& [tok, c] : counts) {
    if (c >= config.min_count) {
      index.emplace(tok, static_cast<int>(vocab.size()));
      vocab.push_back(tok);
      freq.push_back(c);
    }
  }
  if (vocab.empty()) throw Error("train_skipgram: empty corpus (no symbol reaches min_count)");

  std::vector<std::vector<int>> encoded;
  long total_tokens = 0;
  for (const auto& s : streams) {
    std::vector<int> ids;
    for (const auto& tok : s) {
      auto it = index.find(tok);
      if (it != index.end()) ids.push_back(it->second);
    }
    total_tokens += static_cast<long>(ids.size());
    if (ids.size() > 1) encoded.push_back(std::move(ids));
  }

  std::mt19937_64 rng(config.seed);
  const int dim = config.dim;
  const auto n = static_cast<Eigen::Index>(vocab.size());
  Matrix<double> input(n, dim);
  std::uniform_real_distribution<double> init(-0.5 / dim, 0.5 / dim);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) input(r, c) = init(rng);
  }
  Matrix<double> output = Matrix<double>::Zero(n, dim);

  std::vector<double> weights(freq.size());
  std::transform(freq.begin(), freq.end(), weights.begin(), [](long f) { return std::pow(static_cast<double>(f), 0.75); });
  std::discrete_distribution<int> noise(weights.begin(), weights.end());
  std::uniform_int_distribution<int> shrink(0, config.window - 1);

  const double total_steps = static_cast<double>(std::max<long>(total_tokens, 1)) * config.epochs;
  double step = 0.0;
  Vector<double> grad_in(dim);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& sentence : encoded) {
      const int len = static_cast<int>(sentence.size());
      for (int pos = 0; pos < len; ++pos, step += 1.0) {
        const double lr = std::max(config.learning_rate * (1.0 - step / total_steps), config.learning_rate * 1e-4);
        const int reach = config.window - shrink(rng);
        const int center = sentence[pos];
        for (int ctx = std::max(0, pos - reach); ctx <= std::min(len - 1, pos + reach); ++ctx) {
          if (ctx == pos) continue;
          auto in = input.row(sentence[ctx]);
          grad_in.setZero();
          for (int k = 0; k <= config.negatives; ++k) {
            int target = center;
            double label = 1.0;
            if (k > 0) {
              target = noise(rng);
              if (target == center) continue;
              label = 0.0;
            }
            auto out = output.row(target);
            const double g = (label - sigmoid(in.dot(out))) * lr;
            grad_in += g * out.transpose();
            out += g * in;
          }
          in += grad_in.transpose();
        }
      }
    }
  }
  return EmbeddingTable(EmbeddingKind::kJoint, std::move(vocab), std::move(input));
}

}  // namespace duet

#include "duet/ranker.hpp"

#include "synthetic.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace duet;

TEST_CASE("zero parameters score zero") {
  std::mt19937_64 rng(1);
  const auto m = synth::random_matrices(rng, 3, 2, 5, 4);
  CHECK(forward(ModelParams{}, m) == 0.0);
  CHECK(forward(ModelParams{}, m, true) == 0.0);
}

TEST_CASE("single word with flat attention is a linear model") {
  std::mt19937_64 rng(2);
  const auto m = synth::random_matrices(rng, 1, 0, 3, 2);
  const auto p = synth::random_params(rng);
  const double expected = m.word_features.row(0).dot(p.word_match().transpose()) + p.word_match_bias();
  CHECK(forward(p, m, true) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("flat attention equals the sum of unmasked match scores") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = synth::random_matrices(rng, 1 + trial % 4, trial % 3, 5, 4);
    const auto p = synth::random_params(rng);
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < m.word_mask.size(); ++i) {
      if (!m.word_mask(i)) continue;
      for (int c = 0; c < kWordCols; ++c) oracle += p.word_match()(c) * m.word_features(i, c);
      oracle += p.word_match_bias();
    }
    for (Eigen::Index j = 0; j < m.entity_mask.size(); ++j) {
      if (!m.entity_mask(j)) continue;
      for (int c = 0; c < kEntityCols; ++c) oracle += p.entity_match()(c) * m.entity_features(j, c);
      oracle += p.entity_match_bias();
    }
    CHECK(forward(p, m, true) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("negative attention pre-activation silences an entity") {
  std::mt19937_64 rng(4);
  auto m = synth::random_matrices(rng, 1, 1, 1, 1);
  auto p = synth::random_params(rng);
  p.entity_att().setZero();
  p.entity_att_bias() = -0.3;
  const double words_only = forward_trace(p, m, false).word_match(0) * std::max(p.word_att_bias() + p.word_att()(0), 0.0);
  CHECK(forward(p, m) == doctest::Approx(words_only).epsilon(1e-14));
  p.entity_att_bias() = 0.3;
  const auto t = forward_trace(p, m, false);
  CHECK(t.entity_weight(0) == doctest::Approx(0.3));
  CHECK(forward(p, m) == doctest::Approx(words_only + t.entity_match(0) * 0.3).epsilon(1e-14));
}

TEST_CASE("pair loss hinge") {
  std::mt19937_64 rng(5);
  const auto m = synth::random_matrices(rng, 2, 1, 3, 2);
  const auto p = synth::random_params(rng);
  CHECK(pair_loss(p, m, m) == doctest::Approx(1.0));

  ModelParams q;
  q.word_match_bias() = 1.0;
  q.word_att_bias() = 1.0;
  auto pos = DuetFeatureMatrices::zeros(3, 1), neg = DuetFeatureMatrices::zeros(3, 1);
  pos.word_mask.head(2).setConstant(true);
  neg.word_mask.head(1).setConstant(true);
  pos.word_attention.col(0).head(2).setOnes();
  neg.word_attention.col(0).head(1).setOnes();
  CHECK(forward(q, pos) - forward(q, neg) == doctest::Approx(1.0));
  CHECK(pair_loss(q, pos, neg) == 0.0);
  CHECK(pair_gradient(q, pos, neg).data().isZero());
}

TEST_CASE("analytic pair gradient matches finite differences") {
  std::mt19937_64 rng(6);
  int checked = 0;
  while (checked < 25) {
    const auto pos = synth::random_matrices(rng, 3, 2, 5, 3);
    const auto neg = synth::random_matrices(rng, 3, 2, 5, 3);
    const auto p = synth::random_params(rng, 0.2);
    if (synth::kink_distance(p, pos, neg) < 1e-3) continue;
    for (double l2 : {0.0, 0.01}) {
      CHECK(synth::pair_gradient_error(p, pos, neg, l2, false) < 1e-4);
      CHECK(synth::pair_gradient_error(p, pos, neg, l2, true) < 1e-4);
    }
    ++checked;
  }
}

TEST_CASE("l2 penalty skips biases") {
  ModelParams p;
  p.data().setOnes();
  CHECK(l2_penalty(p, 0.5) == doctest::Approx(0.5 * (ModelParams::kSize - 4)));
}

TEST_CASE("padding does not change scores") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = synth::random_matrices(rng, 1 + trial % 5, trial % 6, 5, 5);
    const auto p = synth::random_params(rng);
    const auto wide = synth::repad(m, 10, 10);
    CHECK(forward(p, m) == forward(p, wide));
    CHECK(forward(p, m, true) == forward(p, wide, true));
  }
}

TEST_CASE("schema mismatch is rejected") {
  auto m = DuetFeatureMatrices::zeros(2, 2);
  m.word_features.resize(2, 10);
  CHECK_THROWS_AS(forward(ModelParams{}, m), Error);
}

TEST_CASE("initial parameters") {
  const ModelParams p = initial_params(3);
  CHECK(p.word_match_bias() == 0.0);
  CHECK(p.entity_match_bias() == 0.0);
  CHECK(p.word_att_bias() == 0.1);
  CHECK(p.entity_att_bias() == 0.1);
  CHECK(p.data().cwiseAbs().maxCoeff() <= 0.1);
  CHECK(p.word_match().cwiseAbs().maxCoeff() <= 0.01);
  CHECK(initial_params(3) == p);
  CHECK_FALSE(initial_params(4) == p);
}

TEST_CASE("ranking order and ties") {
  TrainedModel model;
  model.params.word_match()(0) = 1.0;
  model.params.word_att_bias() = 1.0;
  QueryCandidates q;
  q.query_id = "q";
  for (double v : {0.5, 0.7, 0.5}) {
    auto m = DuetFeatureMatrices::zeros(1, 1);
    m.word_features(0, 0) = v;
    m.word_attention(0, 0) = 1.0;
    m.word_mask(0) = true;
    q.features.push_back(m);
  }
  q.doc_ids = {"b", "c", "a"};
  const auto list = rank_candidates(model, q);
  REQUIRE(list.entries.size() == 3);
  CHECK(list.entries[0].doc_id == "c");
  CHECK(list.entries[1].doc_id == "a");
  CHECK(list.entries[2].doc_id == "b");
  CHECK(list.entries[2].rank == 3);
}

TEST_CASE("training") {
  const auto data = synth::separable_queries(12, 10, 11);
  const std::vector<QueryCandidates> train(data.begin(), data.begin() + 8), dev(data.begin() + 8, data.begin() + 10),
      test(data.begin() + 10, data.end());
  TrainConfig cfg;
  cfg.max_epochs = 100;
  TrainingLog log;
  const TrainedModel a = train_ranker(train, dev, cfg, &log);
  CHECK(mean_ndcg(a, test, 20) == 1.0);
  CHECK(log.lambdas.size() == 4);
  const TrainedModel b = train_ranker(train, dev, cfg);
  CHECK(a.params == b.params);
  CHECK(a.l2 == b.l2);

  std::vector<QueryCandidates> no_pairs = train;
  for (auto& q : no_pairs) {
    for (auto& [d, g] : q.judged) g = 0;
  }
  CHECK_THROWS_AS(train_ranker(no_pairs, dev, cfg), Error);
  TrainConfig bad = cfg;
  bad.l2_grid.clear();
  CHECK_THROWS_AS(train_ranker(train, dev, bad), Error);
}

TEST_CASE("batch objective gradient matches finite differences") {
  auto data = synth::separable_queries(3, 6, 12);
  std::mt19937_64 rng(12);
  const auto p = synth::random_params(rng, 0.2);
  const double l2 = 0.01;
  const auto obj = batch_objective(p, data, l2, false, false);
  CHECK(obj.pairs > 0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ModelParams::kSize; ++i) {
    ModelParams hi = p, lo = p;
    hi.data()(i) += 1e-6;
    lo.data()(i) -= 1e-6;
    const double num =
        (batch_objective(hi, data, l2, false, false).loss - batch_objective(lo, data, l2, false, false).loss) / 2e-6;
    worst = std::max(worst, std::abs(num - obj.gradient.data()(i)) / std::max({1.0, std::abs(num)}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("model file round trip") {
  std::mt19937_64 rng(13);
  TrainedModel m;
  m.params = synth::random_params(rng);
  m.flat_attention = true;
  m.l2 = 0.01;
  m.columns = select_columns({FeatureGroup::kQeDe}, 5, 3);
  testutil::TempDir dir;
  save_model(dir.path("m.json"), m);
  const TrainedModel back = load_model(dir.path("m.json"));
  CHECK(back.params == m.params);
  CHECK(back.flat_attention);
  CHECK(back.l2 == 0.01);
  CHECK((back.columns.entity == m.columns.entity).all());
  CHECK((back.columns.word == m.columns.word).all());

  std::string text = model_to_json(m);
  const auto pos = text.find(feature_schema_hash());
  text.replace(pos, 4, "ffff");
  CHECK_THROWS_WITH_AS(model_from_json(text), doctest::Contains("schema"), Error);
}

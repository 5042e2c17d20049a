#include "duet/features.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace duet;

namespace {

TextPipeline plain() { return TextPipeline(TextPipelineOptions{Stemmer::kNone, {}}); }

KnowledgeBase animal_kb() {
  KnowledgeBase kb;
  kb.add_entity({"Cat", "cat", {}, "small pet cat"});
  kb.add_entity({"Dog", "dog", {}, "loyal pet"});
  kb.add_entity({"Bird", "bird", {}, "sing tree"});
  kb.add_entity({"Tree", "tree", {}, "tall plant"});
  return kb;
}

EmbeddingTable two_d(std::vector<std::string> ids, std::vector<std::array<double, 2>> rows) {
  Matrix<double> v(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    v(static_cast<Eigen::Index>(i), 1) = rows[i][1];
  }
  return EmbeddingTable(EmbeddingKind::kTransEEntity, std::move(ids), std::move(v));
}

// Column offsets inside the qw_de block for the coord scorer.
constexpr int kCoordTitleName = 0;
constexpr int kCoordBodyName = 2 * kTitleTopK;

}  // namespace

TEST_CASE("schema dimensions") {
  CHECK(word_column_names().size() == 66);
  CHECK(entity_column_names().size() == 36);
  CHECK(entity_attention_column_names().size() == 4);
  CHECK(QwDwRow::RowsAtCompileTime == 18);
  CHECK(QwDeRow::RowsAtCompileTime == 48);
  CHECK(QeDwRow::RowsAtCompileTime == 24);
  CHECK(QeDeRow::RowsAtCompileTime == 12);
  const auto hash = feature_schema_hash();
  CHECK(hash.size() == 16);
  CHECK(hash == feature_schema_hash());
}

TEST_CASE("translation similarity") {
  const auto table = two_d({"A", "B", "Z"}, {{0.5, 0.5}, {0.5, -0.5}, {0.0, 0.0}});
  CHECK(esr_similarity("A", "B", &table) == doctest::Approx(0.5));
  CHECK(esr_similarity("A", "A", &table) == 1.0);
  CHECK(esr_similarity("Q", "Q", nullptr) == 1.0);
  CHECK(esr_similarity("A", "Missing", &table) == 0.0);
  CHECK(esr_similarity("A", "B", nullptr) == 0.0);
  CHECK(esr_similarity("A", "Z", &table) == 0.0);
}

TEST_CASE("translation bins") {
  EsrBinConfig bins;
  bins.validate();
  CHECK(bins.soft_bin(1.0) == 1);
  CHECK(bins.soft_bin(0.8) == 1);
  CHECK(bins.soft_bin(0.79) == 2);
  CHECK(bins.soft_bin(0.2) == 4);
  CHECK(bins.soft_bin(0.0) == 5);

  EsrBinConfig bad;
  bad.edges = {1.0, 0.8, 0.8, 0.4, 0.2, 0.0};
  CHECK_THROWS_AS(bad.validate(), Error);

  DocumentEntities doc;
  doc.title.add_count("Cat", 2);
  doc.body.add_count("Dog", 1);
  const auto table = two_d({"Cat", "Dog"}, {{0.5, 0.5}, {0.5, -0.5}});
  const QeDeRow row = qe_de_row("Cat", doc, &table);
  CHECK(row(0) == doctest::Approx(std::log(3.0)));
  for (int k = 1; k < 6; ++k) CHECK(row(k) == 0.0);
  // sim 0.5 falls in [0.4, 0.6), the fourth bin of the body field.
  CHECK(row(6 + 3) == doctest::Approx(std::log(2.0)));

  const QeDeRow empty = qe_de_row("Cat", DocumentEntities{}, &table);
  CHECK(empty.isZero());
}

TEST_CASE("word to document-entity slots") {
  const auto kb = animal_kb();
  const EntityTextIndex texts(kb, plain());

  DocumentEntities doc;
  doc.body.add_count("Cat", 1);
  doc.body.add_count("Dog", 1);
  QwDeRow row = qw_de_row("cat", doc, texts);
  // Body name slots: Cat matches the word, Dog does not; sorted descending.
  CHECK(row(kCoordBodyName) == 1.0);
  CHECK(row(kCoordBodyName + 1) == 0.0);
  for (int s = 2; s < 5; ++s) CHECK(row(kCoordBodyName + s) == kMissingEntityScore);
  for (int s = 0; s < 3; ++s) CHECK(row(kCoordTitleName + s) == kMissingEntityScore);

  doc.title.add_count("Tree", 1);
  row = qw_de_row("cat", doc, texts);
  CHECK(row(kCoordTitleName) == 0.0);
  CHECK(row(kCoordTitleName + 1) == kMissingEntityScore);
  CHECK(row(kCoordTitleName + 2) == kMissingEntityScore);

  const QwDeRow none = qw_de_row("cat", DocumentEntities{}, texts);
  CHECK((none.array() == kMissingEntityScore).all());
}

TEST_CASE("attention rows") {
  SurfaceDictionary dict;
  dict.add({"obama", 100, 90, {{"BarackObama", 90}}});
  dict.add({"jaguar", 20, 10, {{"Car", 6}, {"Cat", 4}}});

  Annotation sole{"BarackObama", {0, 1}, "obama", 1.0};
  AttentionRow row = attention_row(sole, {"obama"}, dict, nullptr);
  CHECK(row(0) == 0.0);
  CHECK(row(1) == 1.0);
  CHECK(row(2) == 1.0);
  CHECK(row(3) == 0.0);

  Annotation top{"Car", {0, 1}, "jaguar", 0.6};
  row = attention_row(top, {"jaguar"}, dict, nullptr);
  CHECK(row(0) == doctest::Approx(-(0.6 * std::log(0.6) + 0.4 * std::log(0.4))));
  CHECK(row(1) == 1.0);
  CHECK(row(2) == doctest::Approx(0.2));

  Annotation second{"Cat", {0, 1}, "jaguar", 0.4};
  row = attention_row(second, {"jaguar"}, dict, nullptr);
  CHECK(row(1) == 0.0);
  CHECK(row(2) == doctest::Approx(0.4));

  Matrix<double> v(2, 2);
  v << 1.0, 0.0, 1.0, 1.0;
  const EmbeddingTable joint(EmbeddingKind::kJoint, {"Car", "jaguar"}, v);
  row = attention_row(top, {"jaguar"}, dict, &joint);
  CHECK(row(3) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("matrix assembly") {
  const auto kb = animal_kb();
  const auto text = plain();
  const EntityTextIndex texts(kb, text);
  Corpus corpus;
  corpus.add(make_document("d1", "cat", "dog chase cat", text));
  corpus.add(make_document("d2", "bird", "tree", text));
  corpus.finalize();
  SurfaceDictionary dict;
  dict.add({"cat", 10, 5, {{"Cat", 5}}});

  FeatureContext ctx;
  ctx.doc_stats = &corpus.stats();
  ctx.entity_texts = &texts;
  ctx.dictionary = &dict;
  ctx.max_words = 5;
  ctx.max_entities = 3;

  Query q{"q1", "cat dog cat toy", {"cat", "dog", "cat", "toy"}};
  BagOfEntities qe;
  qe.add({"Cat", {0, 1}, "cat", 1.0});
  const auto elements = make_query_elements(q, qe);
  REQUIRE(elements.words == std::vector<std::string>{"cat", "dog", "toy"});

  DocumentEntities de;
  de.body.add_count("Cat", 1);
  const auto m = build_matrices(elements, corpus.at("d1"), de, ctx);
  m.validate();
  CHECK(m.max_words() == 5);
  CHECK(m.max_entities() == 3);
  CHECK((m.word_mask == Mask((Mask(5) << true, true, true, false, false).finished())).all());
  CHECK((m.entity_mask == Mask((Mask(3) << true, false, false).finished())).all());
  CHECK(m.word_attention.col(0).head(3).isOnes());
  CHECK(m.word_features.bottomRows(2).isZero());
  CHECK(m.entity_features.bottomRows(2).isZero());
  CHECK(m.word_features.row(0).head<kQwDwCols>().transpose() == qw_dw_row("cat", corpus.at("d1"), corpus.stats()));
  CHECK(m.entity_features(0, kQeDwCols + 6) == doctest::Approx(std::log(2.0)));

  QueryElements none{"q2", {}, {}};
  CHECK_THROWS_AS(build_matrices(none, corpus.at("d1"), de, ctx), Error);
  QueryElements many{"q3", {"a", "b", "c", "d", "e", "f"}, {}};
  CHECK_THROWS_AS(build_matrices(many, corpus.at("d1"), de, ctx), Error);
}

TEST_CASE("feature cache round trip") {
  std::mt19937_64 rng(11);
  FeatureRecord rec{"q1", "d9", synth::random_matrices(rng, 2, 1, 4, 3)};
  std::ostringstream out;
  write_feature_record(out, rec);
  std::string line = out.str();
  if (!line.empty() && line.back() == '\n') line.pop_back();
  const FeatureRecord back = parse_feature_record(line);
  CHECK(back.query_id == "q1");
  CHECK(back.doc_id == "d9");
  CHECK(back.matrices == rec.matrices);

  const auto pos = line.find(feature_schema_hash());
  REQUIRE(pos != std::string::npos);
  std::string tampered = line;
  tampered.replace(pos, 16, "0000000000000000");
  CHECK_THROWS_AS(parse_feature_record(tampered), Error);
  CHECK_THROWS_AS(parse_feature_record("{not json"), Error);
}

TEST_CASE("column selection") {
  const auto all = select_columns({FeatureGroup::kQwDw, FeatureGroup::kQeDw, FeatureGroup::kQwDe, FeatureGroup::kQeDe});
  CHECK(all.all());
  const auto qede = select_columns({FeatureGroup::kQeDe}, 5, 3);
  CHECK(qede.word.count() == 0);
  CHECK(qede.entity.count() == 6);
  const auto top1 = select_columns({FeatureGroup::kQwDe}, 1);
  CHECK(top1.word.count() == 3 * 2 * 2);
  const auto top5 = select_columns({FeatureGroup::kQwDe}, 5);
  CHECK(top5.word.count() == kQwDeCols);
  CHECK_THROWS_AS(select_columns({FeatureGroup::kQwDw}, 0), Error);
  CHECK_THROWS_AS(select_columns({FeatureGroup::kQwDw}, 5, 7), Error);
  CHECK(parse_feature_group("qe_de") == FeatureGroup::kQeDe);
  CHECK_THROWS_AS(parse_feature_group("words"), Error);

  std::mt19937_64 rng(3);
  auto m = synth::random_matrices(rng, 3, 2, 3, 2);
  const auto before = m;
  apply_selection(m, qede);
  CHECK(m.word_features.isZero());
  CHECK(m.entity_features.leftCols(kQeDwCols).isZero());
  CHECK(m.entity_features.middleCols(kQeDwCols, 3) == before.entity_features.middleCols(kQeDwCols, 3));
  CHECK(m.entity_features.middleCols(kQeDwCols + 3, 3).isZero());
  CHECK(m.entity_attention == before.entity_attention);
}

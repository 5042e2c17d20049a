#include "duet/kb.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace duet;

namespace {

SurfaceForm form(std::string f, long occ, std::map<std::string, long> cands) {
  SurfaceForm sf;
  sf.form = std::move(f);
  sf.occurrence_count = occ;
  for (const auto& [_, c] : cands) sf.link_count += c;
  sf.candidates = std::move(cands);
  return sf;
}

}  // namespace

TEST_CASE("lp and cmns are ratios of link counts") {
  SurfaceDictionary d;
  d.add(form("obama", 100, {{"BarackObama", 60}, {"MichelleObama", 20}}));
  CHECK(d.lp("obama") == doctest::Approx(0.8));
  CHECK(d.cmns("obama", "BarackObama") == doctest::Approx(0.75));
  CHECK(d.lp("unknown") == 0.0);
  CHECK(d.candidates("unknown").empty());
  const auto c = d.candidates("obama");
  REQUIRE(c.size() == 2);
  CHECK(c[0].entity_id == "BarackObama");
  double sum = 0.0;
  for (const auto& x : c) sum += x.cmns;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("candidate entropy uses natural log") {
  SurfaceDictionary d;
  d.add(form("one", 10, {{"A", 5}}));
  d.add(form("even", 10, {{"A", 5}, {"B", 5}}));
  d.add(form("skew", 10, {{"A", 9}, {"B", 1}}));
  CHECK(d.candidate_entropy("one") == 0.0);
  CHECK(d.candidate_entropy("even") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(d.candidate_entropy("skew") == doctest::Approx(0.3251).epsilon(1e-4));
  CHECK(d.candidate_entropy("missing") == 0.0);
  CHECK(d.candidate_entropy("skew") <= std::log(2.0));
}

TEST_CASE("candidate ties order by entity id") {
  SurfaceDictionary d;
  d.add(form("x", 4, {{"Zed", 2}, {"Alpha", 2}}));
  const auto c = d.candidates("x");
  CHECK(c[0].entity_id == "Alpha");
  CHECK(c[1].entity_id == "Zed");
}

TEST_CASE("knowledge base loading") {
  testutil::TempDir dir;
  const auto ents = dir.file("e.jsonl",
                             "{\"entity_id\":\"A\",\"name\":\"Alpha\",\"aliases\":[\"al\"],\"description\":\"first\"}\n"
                             "{\"entity_id\":\"B\",\"name\":\"Beta\",\"aliases\":[],\"description\":\"\"}\n"
                             "{\"entity_id\":\"C\",\"name\":\"Gamma\"}\n");
  const auto triples = dir.file("t.tsv", "A\tknows\tB\nB\tknows\tC\n");
  const KnowledgeBase kb = load_kb(ents, triples);
  CHECK(kb.entities().size() == 3);
  CHECK(kb.triples().size() == 2);
  CHECK(kb.find("A")->aliases == std::vector<std::string>{"al"});

  const auto dangling = dir.file("bad.tsv", "A\tknows\tZ\n");
  CHECK_THROWS_WITH_AS(load_kb(ents, dangling), doctest::Contains("Z"), Error);

  std::string ten;
  for (int i = 0; i < 10; ++i) ten += "A\tp" + std::to_string(i) + "\tC\n";
  CHECK(load_triples(dir.file("ten.tsv", ten)).size() == 10);
}

TEST_CASE("surface form file round trip and validation") {
  testutil::TempDir dir;
  const TextPipeline text;
  SurfaceDictionary d;
  load_surface_forms(dir.file("sf.tsv", "New York\t10\t8\tNYC:6,NYState:2\nObama\t100\t80\tBarackObama:80\n"), text, d);
  CHECK(d.contains("new york"));
  CHECK(d.max_form_tokens() == 2);
  CHECK(d.lp("new york") == doctest::Approx(0.8));

  const auto out = dir.path("out.tsv");
  write_surface_forms(out, d);
  SurfaceDictionary again;
  load_surface_forms(out, text, again);
  CHECK(again.forms().size() == d.forms().size());
  CHECK(again.cmns("new york", "NYC") == d.cmns("new york", "NYC"));

  SurfaceDictionary bad;
  CHECK_THROWS_AS(load_surface_forms(dir.file("b1.tsv", "x\t5\t6\tA:6\n"), text, bad), Error);
  CHECK_THROWS_AS(load_surface_forms(dir.file("b2.tsv", "x\t5\t4\tA:3\n"), text, bad), Error);
}

TEST_CASE("entity text index") {
  KnowledgeBase kb;
  kb.add_entity({"A", "Barack Obama", {}, "President of the United States"});
  const EntityTextIndex idx(kb, TextPipeline{});
  CHECK(idx.name("A").tf("obama") == 1);
  CHECK(idx.description("A").tf("presid") == 1);
  CHECK(idx.name("missing").empty());
  CHECK_THROWS_AS(kb.add_entity({"A", "Again", {}, ""}), Error);
  CHECK_THROWS_AS(kb.add_entity({"E", "", {}, ""}), Error);
}

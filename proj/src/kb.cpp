#include "duet/kb.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace duet {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail_at(const std::string& path, long line, const std::string& msg) {
  throw Error(path + ":" + std::to_string(line) + ": " + msg);
}

bool parse_long(std::string_view s, long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void SurfaceDictionary::add(SurfaceForm sf) {
  std::size_t tokens = static_cast<std::size_t>(std::count(sf.form.begin(), sf.form.end(), ' ')) + 1;
  max_tokens_ = std::max(max_tokens_, tokens);
  auto it = forms_.find(sf.form);
  if (it == forms_.end()) {
    forms_.emplace(sf.form, std::move(sf));
    return;
  }
  it->second.occurrence_count += sf.occurrence_count;
  it->second.link_count += sf.link_count;
  for (const auto& [e, c] : sf.candidates) it->second.candidates[e] += c;
}

const SurfaceForm* SurfaceDictionary::find(const std::string& form) const {
  auto it = forms_.find(form);
  return it == forms_.end() ? nullptr : &it->second;
}

double SurfaceDictionary::lp(const std::string& form) const {
  const SurfaceForm* sf = find(form);
  if (sf == nullptr || sf->occurrence_count == 0) return 0.0;
  return static_cast<double>(sf->link_count) / static_cast<double>(sf->occurrence_count);
}

double SurfaceDictionary::cmns(const std::string& form, const std::string& entity_id) const {
  const SurfaceForm* sf = find(form);
  if (sf == nullptr || sf->link_count == 0) return 0.0;
  auto it = sf->candidates.find(entity_id);
  if (it == sf->candidates.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(sf->link_count);
}

std::vector<Candidate> SurfaceDictionary::candidates(const std::string& form) const {
  std::vector<Candidate> out;
  const SurfaceForm* sf = find(form);
  if (sf == nullptr || sf->link_count == 0) return out;
  for (const auto& [e, c] : sf->candidates) {
    if (c > 0) out.push_back({e, static_cast<double>(c) / static_cast<double>(sf->link_count)});
  }
  // Candidates come out of the map in entity_id order; a stable sort on
  // CMNS keeps that order among ties.
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.cmns > b.cmns; });
  return out;
}

double SurfaceDictionary::candidate_entropy(const std::string& form) const {
  double h = 0.0;
  for (const auto& c : candidates(form)) {
    if (c.cmns > 0.0) h -= c.cmns * std::log(c.cmns);
  }
  return std::max(h, 0.0);
}

void KnowledgeBase::add_entity(Entity e) {
  if (e.entity_id.empty()) throw Error("entity with empty entity_id");
  if (e.name.empty()) throw Error("entity '" + e.entity_id + "' has an empty name");
  if (index_.contains(e.entity_id)) throw Error("duplicate entity_id '" + e.entity_id + "'");
  index_.emplace(e.entity_id, entities_.size());
  entities_.push_back(std::move(e));
}

void KnowledgeBase::add_triple(Triple t) {
  if (!index_.contains(t.head) || !index_.contains(t.tail)) {
    throw Error("triple (" + t.head + ", " + t.predicate + ", " + t.tail + ") references an unknown entity");
  }
  triples_.push_back(std::move(t));
}

const Entity* KnowledgeBase::find(const std::string& entity_id) const {
  auto it = index_.find(entity_id);
  return it == index_.end() ? nullptr : &entities_[it->second];
}

std::vector<Entity> load_entities(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open entities file " + path);
  std::vector<Entity> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = json::parse(line);
      Entity e;
      e.entity_id = rec.at("entity_id").get<std::string>();
      e.name = rec.at("name").get<std::string>();
      if (rec.contains("aliases")) e.aliases = rec.at("aliases").get<std::vector<std::string>>();
      e.description = rec.value("description", "");
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      fail_at(path, lineno, std::string("malformed entity record: ") + ex.what());
    }
  }
  return out;
}

std::vector<Triple> load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open triples file " + path);
  std::vector<Triple> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
      fail_at(path, lineno, "expected head<TAB>predicate<TAB>tail");
    }
    out.push_back({cols[0], cols[1], cols[2]});
  }
  return out;
}

KnowledgeBase load_kb(const std::string& entities_path, const std::string& triples_path) {
  KnowledgeBase kb;
  for (auto& e : load_entities(entities_path)) kb.add_entity(std::move(e));
  if (!triples_path.empty()) {
    for (auto& t : load_triples(triples_path)) kb.add_triple(std::move(t));
  }
  return kb;
}

void load_surface_forms(const std::string& path, const TextPipeline& pipeline, SurfaceDictionary& dict) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open surface-form file " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4) fail_at(path, lineno, "expected form<TAB>occurrences<TAB>links<TAB>entity:count,...");
    SurfaceForm sf;
    sf.form = join_tokens(pipeline.tokenize(cols[0]));
    if (!parse_long(cols[1], sf.occurrence_count) || !parse_long(cols[2], sf.link_count) ||
        sf.occurrence_count < 0 || sf.link_count < 0) {
      fail_at(path, lineno, "bad counts");
    }
    if (sf.link_count > sf.occurrence_count) fail_at(path, lineno, "link_count exceeds occurrence_count");
    long total = 0;
    if (!cols[3].empty()) {
      for (const auto& item : split(cols[3], ',')) {
        auto colon = item.rfind(':');
        long c = 0;
        if (colon == std::string::npos || colon == 0 || !parse_long(std::string_view(item).substr(colon + 1), c) || c < 0) {
          fail_at(path, lineno, "bad candidate '" + item + "'");
        }
        sf.candidates[item.substr(0, colon)] += c;
        total += c;
      }
    }
    if (total != sf.link_count) fail_at(path, lineno, "candidate counts do not sum to link_count");
    if (sf.form.empty()) continue;
    dict.add(std::move(sf));
  }
}

void write_surface_forms(const std::string& path, const SurfaceDictionary& dict) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write surface-form file " + path);
  for (const auto& [form, sf] : dict.forms()) {
    out << form << '\t' << sf.occurrence_count << '\t' << sf.link_count << '\t';
    bool first = true;
    for (const auto& [e, c] : sf.candidates) {
      if (!first) out << ',';
      out << e << ':' << c;
      first = false;
    }
    out << '\n';
  }
}

EntityTextIndex::EntityTextIndex(const KnowledgeBase& kb, const TextPipeline& pipeline) {
  for (const auto& e : kb.entities()) {
    auto& name = names_[e.entity_id] = BagOfWords(pipeline.tokenize(e.name));
    auto& desc = descs_[e.entity_id] = BagOfWords(pipeline.tokenize(e.description));
    name_stats_.add(name);
    desc_stats_.add(desc);
  }
  name_stats_.finalize();
  desc_stats_.finalize();
}

const BagOfWords& EntityTextIndex::name(const std::string& entity_id) const {
  auto it = names_.find(entity_id);
  return it == names_.end() ? empty_ : it->second;
}

const BagOfWords& EntityTextIndex::description(const std::string& entity_id) const {
  auto it = descs_.find(entity_id);
  return it == descs_.end() ? empty_ : it->second;
}

}  // namespace duet

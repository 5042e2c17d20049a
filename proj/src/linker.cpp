#include "duet/linker.hpp"

#include <charconv>
#include <fstream>

namespace duet {

void BagOfEntities::add(Annotation a) {
  ++counts_[a.entity_id];
  annotations_.push_back(std::move(a));
}

void BagOfEntities::add_count(const std::string& entity_id, int tf) {
  if (tf > 0) counts_[entity_id] += tf;
}

int BagOfEntities::tf(const std::string& entity_id) const {
  auto it = counts_.find(entity_id);
  return it == counts_.end() ? 0 : it->second;
}

int BagOfEntities::total() const {
  int n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

std::string span_form(const std::vector<std::string>& tokens, Span span) {
  std::string out;
  for (std::size_t i = span.start; i < span.start + span.length; ++i) {
    if (i > span.start) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<Span> EntityLinker::spot(const std::vector<std::string>& tokens, double lp_threshold) const {
  std::vector<Span> spans;
  const std::size_t max_len = std::min(options_.max_span_tokens, dict_->max_form_tokens());
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(max_len, tokens.size() - i); len >= 1; --len) {
      const SurfaceForm* sf = dict_->find(span_form(tokens, {i, len}));
      if (sf != nullptr && sf->link_count > 0) {
        matched = len;
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    Span span{i, matched};
    if (dict_->lp(span_form(tokens, span)) >= lp_threshold) spans.push_back(span);
    i += matched;
  }
  return spans;
}

double EntityLinker::context_score(const std::string& entity_id, const std::optional<Vector<double>>& context) const {
  double cos = 0.0;
  if (context && joint_ != nullptr && texts_ != nullptr) {
    std::vector<std::string> desc;
    for (const auto& [w, c] : texts_->description(entity_id).counts()) {
      for (int k = 0; k < c; ++k) desc.push_back(w);
    }
    if (auto d = mean_vector(*joint_, desc)) cos = cosine(*d, *context);
  }
  return (cos + 1.0) / 2.0;
}

LinkDecision EntityLinker::disambiguate(const std::vector<std::string>& tokens, Span span) const {
  const std::string form = span_form(tokens, span);
  const auto candidates = dict_->candidates(form);
  if (candidates.empty()) throw Error("unlinkable span '" + form + "'");
  const double lambda = options_.context_weight;
  std::optional<Vector<double>> context;
  if (lambda != 0.0 && joint_ != nullptr) context = mean_vector(*joint_, tokens);
  LinkDecision best;
  bool first = true;
  // Score ties go to the smaller entity_id.
  for (const auto& c : candidates) {
    double score = (1.0 - lambda) * c.cmns;
    if (lambda != 0.0) score += lambda * context_score(c.entity_id, context);
    if (first || score > best.confidence || (score == best.confidence && c.entity_id < best.entity_id)) {
      best = {c.entity_id, score};
      first = false;
    }
  }
  return best;
}

BagOfEntities EntityLinker::annotate(const std::vector<std::string>& tokens) const {
  BagOfEntities bag;
  for (const Span& span : spot(tokens)) {
    auto decision = disambiguate(tokens, span);
    if (decision.confidence < options_.min_confidence) continue;
    bag.add({decision.entity_id, span, span_form(tokens, span), decision.confidence});
  }
  return bag;
}

std::vector<std::string> replace_spans(const std::vector<std::string>& tokens, const BagOfEntities& bag) {
  std::vector<std::string> out;
  std::size_t next = 0;
  for (const auto& a : bag.annotations()) {
    for (; next < a.surface.start; ++next) out.push_back(tokens[next]);
    out.push_back(a.entity_id);
    next = a.surface.start + a.surface.length;
  }
  for (; next < tokens.size(); ++next) out.push_back(tokens[next]);
  return out;
}

AnnotationStore load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotation file " + path);
  AnnotationStore store;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto pos = line.find('\t', start);
      cols.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    auto fail = [&](const std::string& msg) { throw Error(path + ":" + std::to_string(lineno) + ": " + msg); };
    if (cols.size() != 4) fail("expected doc_id<TAB>field<TAB>entity_id<TAB>tf");
    int tf = 0;
    auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), tf);
    if (ec != std::errc() || ptr != cols[3].data() + cols[3].size() || tf < 0) fail("bad tf '" + cols[3] + "'");
    auto& doc = store[cols[0]];
    if (cols[1] == "title") {
      doc.title.add_count(cols[2], tf);
    } else if (cols[1] == "body") {
      doc.body.add_count(cols[2], tf);
    } else {
      fail("unknown field '" + cols[1] + "'");
    }
  }
  return store;
}

void write_annotations(std::ostream& out, const std::vector<std::string>& doc_order, const AnnotationStore& store) {
  for (const auto& doc_id : doc_order) {
    auto it = store.find(doc_id);
    if (it == store.end()) continue;
    for (Field f : {Field::kTitle, Field::kBody}) {
      for (const auto& [e, tf] : it->second.field(f).counts()) {
        out << doc_id << '\t' << field_name(f) << '\t' << e << '\t' << tf << '\n';
      }
    }
  }
}

}  // namespace duet

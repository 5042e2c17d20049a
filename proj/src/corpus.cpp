#include "duet/corpus.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace duet {

using json = nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string("cannot open ") + what + " file " + path);
  return in;
}

[[noreturn]] void fail_at(const std::string& path, long line, const std::string& msg) {
  throw Error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

BagOfWords::BagOfWords(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add(t);
}

void BagOfWords::add(const std::string& term, int count) {
  if (count <= 0) return;
  counts_[term] += count;
  length_ += count;
}

int BagOfWords::tf(const std::string& term) const {
  auto it = counts_.find(term);
  return it == counts_.end() ? 0 : it->second;
}

long FieldStats::doc_freq(const std::string& t) const {
  auto it = df.find(t);
  return it == df.end() ? 0 : it->second;
}

long FieldStats::coll_freq(const std::string& t) const {
  auto it = cf.find(t);
  return it == cf.end() ? 0 : it->second;
}

void FieldStats::add(const BagOfWords& bag) {
  ++doc_count;
  total_tokens += bag.length();
  for (const auto& [term, count] : bag.counts()) {
    ++df[term];
    cf[term] += count;
  }
}

void FieldStats::finalize() {
  avg_doc_len = doc_count > 0 ? static_cast<double>(total_tokens) / static_cast<double>(doc_count) : 0.0;
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "tsv") return CorpusFormat::kTsv;
  throw Error("unknown corpus format '" + name + "' (expected jsonl|tsv)");
}

void Corpus::add(Document doc) {
  if (index_.contains(doc.doc_id)) throw Error("duplicate doc_id '" + doc.doc_id + "'");
  index_.emplace(doc.doc_id, docs_.size());
  stats_.title.add(doc.title);
  stats_.body.add(doc.body);
  docs_.push_back(std::move(doc));
}

void Corpus::finalize() {
  stats_.title.finalize();
  stats_.body.finalize();
}

const Document* Corpus::find(const std::string& doc_id) const {
  auto it = index_.find(doc_id);
  return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& doc_id) const {
  const Document* d = find(doc_id);
  if (d == nullptr) throw Error("unknown doc_id '" + doc_id + "'");
  return *d;
}

Document make_document(std::string doc_id, std::string_view title, std::string_view body,
                       const TextPipeline& pipeline) {
  Document d;
  d.doc_id = std::move(doc_id);
  d.title_tokens = pipeline.tokenize(title);
  d.body_tokens = pipeline.tokenize(body);
  d.title = BagOfWords(d.title_tokens);
  d.body = BagOfWords(d.body_tokens);
  return d;
}

Corpus load_corpus(const std::string& path, CorpusFormat format, const TextPipeline& pipeline) {
  auto in = open_input(path, "corpus");
  Corpus corpus;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    std::string id, title, body;
    if (format == CorpusFormat::kJsonl) {
      json rec;
      try {
        rec = json::parse(line);
        id = rec.at("doc_id").get<std::string>();
        title = rec.value("title", "");
        body = rec.value("body", "");
      } catch (const json::exception& e) {
        fail_at(path, lineno, std::string("malformed corpus record: ") + e.what());
      }
    } else {
      auto cols = split_tabs(line);
      if (cols.size() != 3) fail_at(path, lineno, "expected doc_id<TAB>title<TAB>body");
      id = cols[0];
      title = cols[1];
      body = cols[2];
    }
    if (id.empty()) fail_at(path, lineno, "empty doc_id");
    try {
      corpus.add(make_document(id, title, body, pipeline));
    } catch (const Error& e) {
      fail_at(path, lineno, e.what());
    }
  }
  corpus.finalize();
  return corpus;
}

std::vector<Query> load_queries(const std::string& path, const TextPipeline& pipeline) {
  auto in = open_input(path, "query");
  std::vector<Query> queries;
  std::unordered_map<std::string, int> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) fail_at(path, lineno, "expected query_id<TAB>text");
    Query q;
    q.query_id = line.substr(0, tab);
    q.raw_text = line.substr(tab + 1);
    q.tokens = pipeline.tokenize(q.raw_text);
    if (seen[q.query_id]++ > 0) fail_at(path, lineno, "duplicate query_id '" + q.query_id + "'");
    queries.push_back(std::move(q));
  }
  return queries;
}

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
  auto [it, inserted] = judgments_[query_id].emplace(doc_id, grade);
  if (!inserted) throw Error("duplicate judgment for (" + query_id + ", " + doc_id + ")");
}

std::optional<int> Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  auto q = judgments_.find(query_id);
  if (q == judgments_.end()) return std::nullopt;
  auto d = q->second.find(doc_id);
  if (d == q->second.end()) return std::nullopt;
  return d->second;
}

int Qrels::grade_or_zero(const std::string& query_id, const std::string& doc_id) const {
  return grade(query_id, doc_id).value_or(0);
}

const std::map<std::string, int>* Qrels::judged(const std::string& query_id) const {
  auto it = judgments_.find(query_id);
  return it == judgments_.end() ? nullptr : &it->second;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [_, docs] : judgments_) n += docs.size();
  return n;
}

Qrels load_qrels(const std::string& path) {
  auto in = open_input(path, "qrels");
  Qrels qrels;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto cols = split_ws(line);
    if (cols.size() != 4) fail_at(path, lineno, "expected 'qid 0 docid grade'");
    int grade = 0;
    auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), grade);
    if (ec != std::errc() || ptr != cols[3].data() + cols[3].size()) {
      fail_at(path, lineno, "bad grade '" + cols[3] + "'");
    }
    try {
      qrels.set(cols[0], cols[2], grade);
    } catch (const Error& e) {
      fail_at(path, lineno, e.what());
    }
  }
  return qrels;
}

const RankedList* Run::find(const std::string& query_id) const {
  for (const auto& q : queries) {
    if (q.query_id == query_id) return &q;
  }
  return nullptr;
}

Run parse_run(std::istream& in, std::size_t depth) {
  Run run;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  long lineno = 0;
  bool tagged = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto cols = split_ws(line);
    if (cols.size() != 6) throw Error("run line " + std::to_string(lineno) + ": expected 'qid Q0 docid rank score runtag'");
    RunEntry e;
    e.doc_id = cols[2];
    auto parse_num = [&](const std::string& s, auto& out) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("run line " + std::to_string(lineno) + ": bad number '" + s + "'");
      }
    };
    parse_num(cols[3], e.rank);
    parse_num(cols[4], e.score);
    if (!tagged) {
      run.tag = cols[5];
      tagged = true;
    }
    auto [it, inserted] = index.emplace(cols[0], run.queries.size());
    if (inserted) run.queries.push_back(RankedList{cols[0], {}});
    auto& list = run.queries[it->second].entries;
    if (list.size() < depth) list.push_back(std::move(e));
  }
  return run;
}

Run load_run(const std::string& path, std::size_t depth) {
  auto in = open_input(path, "run");
  try {
    return parse_run(in, depth);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_run(std::ostream& out, const Run& run) {
  for (const auto& q : run.queries) {
    for (const auto& e : q.entries) {
      out << q.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_double(e.score) << ' '
          << run.tag << '\n';
    }
  }
}

void write_run(const std::string& path, const Run& run) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write run file " + path);
  write_run(out, run);
}

}  // namespace duet

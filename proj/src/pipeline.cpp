#include "duet/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace duet {

namespace pt = boost::property_tree;

void PipelineConfig::propagate_seed() {
  transe.seed = seed;
  skipgram.seed = seed;
  train.seed = seed;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("bad number '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

// Binds INI keys to config fields and rejects keys nobody claims.
class ConfigReader {
 public:
  explicit ConfigReader(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void bind(const std::string& key, T& target) {
    known_.insert(key);
    auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!node) return;
    auto value = node->get_value_optional<T>();
    if (!value) throw Error("config: bad value '" + node->data() + "' for " + key);
    target = *value;
  }

  void bind_list(const std::string& key, std::vector<double>& target) {
    std::string raw;
    bind(key, raw);
    if (!raw.empty()) target = parse_double_list(raw);
  }

  void bind_strings(const std::string& key, std::vector<std::string>& target) {
    std::string raw;
    bind(key, raw);
    if (!raw.empty()) target = split_list(raw);
  }

  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw Error("config: key '" + section + "' must live in a [section]");
      for (const auto& [key, _] : body) {
        if (!known_.contains(section + "." + key)) throw Error("config: unknown key '" + section + "." + key + "'");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
};

}  // namespace

void apply_config(const std::string& path, PipelineConfig& c) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config: " + std::string(e.what()));
  }
  ConfigReader r(tree);
  auto& p = c.paths;
  r.bind("paths.corpus", p.corpus);
  r.bind("paths.corpus_format", p.corpus_format);
  r.bind("paths.queries", p.queries);
  r.bind("paths.qrels", p.qrels);
  r.bind("paths.candidates", p.candidates);
  r.bind("paths.kb_entities", p.kb_entities);
  r.bind("paths.kb_triples", p.kb_triples);
  r.bind("paths.mentions", p.mentions);
  r.bind("paths.dictionary", p.dictionary);
  r.bind("paths.annotations", p.annotations);
  r.bind("paths.transe_entities", p.transe_entities);
  r.bind("paths.transe_predicates", p.transe_predicates);
  r.bind("paths.joint", p.joint);
  r.bind("paths.features", p.features);
  r.bind("paths.model", p.model);
  r.bind("paths.run_out", p.run_out);

  r.bind("text.stemmer", c.stemmer);
  r.bind("text.stopwords", c.stopwords);

  r.bind("linker.lp_threshold", c.linker.lp_threshold);
  r.bind("linker.min_confidence", c.linker.min_confidence);
  r.bind("linker.context_weight", c.linker.context_weight);
  r.bind("linker.max_span_tokens", c.linker.max_span_tokens);

  r.bind("retrieval.k1", c.retrieval.k1);
  r.bind("retrieval.b", c.retrieval.b);
  r.bind("retrieval.mu", c.retrieval.mu);
  r.bind("retrieval.lambda", c.retrieval.lambda);
  r.bind("retrieval.epsilon", c.retrieval.epsilon);

  r.bind("features.max_words", c.max_words);
  r.bind("features.max_entities", c.max_entities);

  r.bind("transe.dim", c.transe.dim);
  r.bind("transe.margin", c.transe.margin);
  r.bind("transe.lr", c.transe.learning_rate);
  r.bind("transe.epochs", c.transe.epochs);
  r.bind("transe.batch_size", c.transe.batch_size);
  r.bind("transe.filter_negatives", c.transe.filter_negatives);

  r.bind("skipgram.dim", c.skipgram.dim);
  r.bind("skipgram.window", c.skipgram.window);
  r.bind("skipgram.negatives", c.skipgram.negatives);
  r.bind("skipgram.min_count", c.skipgram.min_count);
  r.bind("skipgram.epochs", c.skipgram.epochs);
  r.bind("skipgram.lr", c.skipgram.learning_rate);

  r.bind_list("train.l2_grid", c.train.l2_grid);
  r.bind("train.max_epochs", c.train.max_epochs);
  r.bind("train.patience", c.train.patience);
  r.bind("train.lr", c.train.learning_rate);
  r.bind("train.beta1", c.train.beta1);
  r.bind("train.beta2", c.train.beta2);
  r.bind("train.flat_attention", c.train.flat_attention);
  r.bind("train.unjudged_as_negative", c.train.unjudged_as_negative);
  r.bind("train.folds", c.folds);

  r.bind("eval.max_grade", c.max_grade);
  r.bind("eval.iterations", c.permutation_iterations);
  r.bind_strings("eval.metrics", c.metrics);
  r.bind("eval.depth", c.run_depth);

  r.bind("run.seed", c.seed);
  r.bind("run.threads", c.threads);
  r.check_unknown();
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig c;
  apply_config(path, c);
  return c;
}

TextPipeline make_text_pipeline(const PipelineConfig& config) {
  TextPipelineOptions opts;
  opts.stemmer = parse_stemmer(config.stemmer);
  if (!config.stopwords.empty()) opts.stopwords = load_stopwords(config.stopwords);
  return TextPipeline(std::move(opts));
}

Run exhaustive_search(const Corpus& corpus, const std::vector<Query>& queries, ScorerId scorer, std::size_t depth,
                      const RetrievalParams& params) {
  Run run;
  run.tag = std::string(scorer_name(scorer));
  const auto& stats = corpus.stats();
  for (const auto& q : queries) {
    const BagOfWords bag(q.tokens);
    std::vector<std::pair<double, const std::string*>> scored;
    for (const auto& d : corpus.documents()) {
      const double s = score(scorer, bag, d.title, stats.title, params) + score(scorer, bag, d.body, stats.body, params);
      scored.emplace_back(s, &d.doc_id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return *a.second < *b.second;
    });
    if (scored.size() > depth) scored.resize(depth);
    RankedList list{q.query_id, {}};
    int rank = 1;
    for (const auto& [s, id] : scored) list.entries.push_back({*id, rank++, s});
    run.queries.push_back(std::move(list));
  }
  return run;
}

namespace {

long count_occurrences(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || haystack.size() < needle.size()) return 0;
  long n = 0;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
  }
  return n;
}

std::vector<std::string> split_form(const std::string& form) {
  std::vector<std::string> out;
  std::stringstream ss(form);
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

}  // namespace

SurfaceDictionary build_dictionary(const std::string& mentions_path, const Corpus& corpus, const TextPipeline& pipeline,
                                   const KnowledgeBase* kb) {
  std::map<std::string, std::map<std::string, long>> links;
  if (!mentions_path.empty()) {
    std::ifstream in(mentions_path);
    if (!in) throw Error("cannot open mention file " + mentions_path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos || tab + 1 == line.size()) {
        throw Error(mentions_path + ":" + std::to_string(lineno) + ": expected form<TAB>entity_id");
      }
      const std::string entity = line.substr(tab + 1);
      if (kb != nullptr && kb->find(entity) == nullptr) {
        throw Error(mentions_path + ":" + std::to_string(lineno) + ": unknown entity '" + entity + "'");
      }
      const std::string form = join_tokens(pipeline.tokenize(std::string_view(line).substr(0, tab)));
      if (!form.empty()) ++links[form][entity];
    }
  }
  if (kb != nullptr) {
    for (const auto& e : kb->entities()) {
      std::set<std::string> forms;
      forms.insert(join_tokens(pipeline.tokenize(e.name)));
      for (const auto& alias : e.aliases) forms.insert(join_tokens(pipeline.tokenize(alias)));
      for (const auto& form : forms) {
        if (!form.empty()) ++links[form][e.entity_id];
      }
    }
  }

  SurfaceDictionary dict;
  for (auto& [form, candidates] : links) {
    SurfaceForm sf;
    sf.form = form;
    for (const auto& [_, c] : candidates) sf.link_count += c;
    const auto needle = split_form(form);
    for (const auto& d : corpus.documents()) {
      sf.occurrence_count += count_occurrences(d.title_tokens, needle) + count_occurrences(d.body_tokens, needle);
    }
    sf.occurrence_count = std::max(sf.occurrence_count, sf.link_count);
    sf.candidates = std::move(candidates);
    dict.add(std::move(sf));
  }
  return dict;
}

AnnotationStore link_corpus(const Corpus& corpus, const EntityLinker& linker) {
  AnnotationStore store;
  for (const auto& d : corpus.documents()) {
    DocumentEntities ents{linker.annotate(d.title_tokens), linker.annotate(d.body_tokens)};
    if (!ents.title.empty() || !ents.body.empty()) store.emplace(d.doc_id, std::move(ents));
  }
  return store;
}

std::vector<std::vector<std::string>> entity_token_streams(const Corpus& corpus, const EntityLinker& linker) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& d : corpus.documents()) {
    for (const auto* tokens : {&d.title_tokens, &d.body_tokens}) {
      if (tokens->empty()) continue;
      streams.push_back(replace_spans(*tokens, linker.annotate(*tokens)));
    }
  }
  return streams;
}

std::vector<FeatureRecord> extract_features(const ExtractionInputs& in, int threads) {
  if (in.corpus == nullptr || in.queries == nullptr || in.candidates == nullptr || in.linker == nullptr) {
    throw Error("extract_features: missing input");
  }
  std::unordered_map<std::string, const Query*> query_by_id;
  for (const auto& q : *in.queries) query_by_id[q.query_id] = &q;

  struct Job {
    const QueryElements* query;
    const Document* doc;
  };
  std::vector<QueryElements> elements;
  elements.reserve(in.candidates->queries.size());
  for (const auto& list : in.candidates->queries) {
    auto it = query_by_id.find(list.query_id);
    if (it == query_by_id.end()) throw Error("candidate run names query '" + list.query_id + "' missing from queries");
    elements.push_back(make_query_elements(*it->second, in.linker->annotate(it->second->tokens)));
  }
  std::vector<Job> jobs;
  for (std::size_t qi = 0; qi < elements.size(); ++qi) {
    for (const auto& e : in.candidates->queries[qi].entries) {
      const Document* doc = in.corpus->find(e.doc_id);
      if (doc == nullptr) {
        throw Error("candidate document '" + e.doc_id + "' (query " + elements[qi].query_id + ") is not in the corpus");
      }
      jobs.push_back({&elements[qi], doc});
    }
  }

  static const DocumentEntities kNoEntities;
  std::vector<FeatureRecord> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const DocumentEntities* ents = &kNoEntities;
      if (in.annotations != nullptr) {
        auto it = in.annotations->find(job.doc->doc_id);
        if (it != in.annotations->end()) ents = &it->second;
      }
      try {
        records[i] = {job.query->query_id, job.doc->doc_id, build_matrices(*job.query, *job.doc, *ents, in.context)};
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, std::max(1, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return records;
}

std::vector<QueryCandidates> group_features(const std::vector<FeatureRecord>& records, const Qrels& qrels) {
  std::vector<QueryCandidates> out;
  std::unordered_map<std::string, std::size_t> index;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.query_id, r.doc_id).second) {
      throw Error("feature cache holds two records for query " + r.query_id + ", document " + r.doc_id);
    }
    auto [it, inserted] = index.emplace(r.query_id, out.size());
    if (inserted) {
      QueryCandidates q;
      q.query_id = r.query_id;
      if (const auto* judged = qrels.judged(r.query_id)) q.judged = *judged;
      out.push_back(std::move(q));
    }
    auto& q = out[it->second];
    q.doc_ids.push_back(r.doc_id);
    q.features.push_back(r.matrices);
  }
  return out;
}

Run rank_run(const TrainedModel& model, const Run& candidates, const std::vector<FeatureRecord>& records) {
  std::map<std::pair<std::string, std::string>, const DuetFeatureMatrices*> lookup;
  for (const auto& r : records) lookup[{r.query_id, r.doc_id}] = &r.matrices;
  Run out;
  for (const auto& list : candidates.queries) {
    if (list.entries.empty()) continue;
    QueryCandidates q;
    q.query_id = list.query_id;
    for (const auto& e : list.entries) {
      auto it = lookup.find({list.query_id, e.doc_id});
      if (it == lookup.end()) {
        throw Error("no features for query " + list.query_id + ", document " + e.doc_id);
      }
      q.doc_ids.push_back(e.doc_id);
      q.features.push_back(*it->second);
    }
    out.queries.push_back(rank_candidates(model, q));
  }
  return out;
}

TrainedModel train_full(const std::vector<QueryCandidates>& queries, const TrainConfig& config, TrainingLog* log) {
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_dev = queries.size() / 10;
  std::vector<QueryCandidates> train, dev;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_dev ? dev : train).push_back(queries[order[i]]);
  return train_ranker(train, dev, config, log);
}

std::vector<MetricSpec> parse_metrics(const std::vector<std::string>& names) {
  std::vector<MetricSpec> out;
  for (const auto& n : names) {
    for (const auto& item : split_list(n)) out.push_back(parse_metric(item));
  }
  if (out.empty()) throw Error("no metrics requested");
  return out;
}

void write_evaluation(std::ostream& out, const Run& run, const Qrels& qrels, const std::vector<MetricSpec>& metrics,
                      int max_grade) {
  for (const auto& m : metrics) {
    const MetricReport r = evaluate_run(run, qrels, m, max_grade);
    for (const auto& [q, v] : r.per_query) out << m.name() << '\t' << q << '\t' << format_double(v) << '\n';
    out << m.name() << "\tall\t" << format_double(r.mean) << '\n';
    out << m.name() << "\tskipped\t" << r.skipped << '\n';
  }
}

std::vector<Comparison> compare_runs(const Run& a, const Run& b, const Qrels& qrels,
                                     const std::vector<MetricSpec>& metrics, int max_grade, int iterations,
                                     std::uint64_t seed, int threads) {
  std::vector<Comparison> rows;
  for (const auto& m : metrics) {
    const auto ra = evaluate_run(a, qrels, m, max_grade).as_map();
    const auto rb = evaluate_run(b, qrels, m, max_grade).as_map();
    Comparison c;
    c.metric = m;
    c.wtl = win_tie_loss(ra, rb);
    std::vector<double> va, vb;
    for (const auto& [q, v] : ra) {
      va.push_back(v);
      vb.push_back(rb.at(q));
    }
    if (!va.empty()) {
      c.mean_a = std::accumulate(va.begin(), va.end(), 0.0) / static_cast<double>(va.size());
      c.mean_b = std::accumulate(vb.begin(), vb.end(), 0.0) / static_cast<double>(vb.size());
    }
    c.p_value = permutation_test(va, vb, iterations, seed, threads);
    rows.push_back(c);
  }
  return rows;
}

void write_comparison(std::ostream& out, const std::vector<Comparison>& rows) {
  out << "metric\tmean_a\tmean_b\twins\tties\tlosses\tp_value\n";
  for (const auto& r : rows) {
    out << r.metric.name() << '\t' << format_double(r.mean_a) << '\t' << format_double(r.mean_b) << '\t'
        << r.wtl.wins << '\t' << r.wtl.ties << '\t' << r.wtl.losses << '\t' << format_double(r.p_value) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stage drivers

namespace {

const std::string& require(const std::string& path, const char* what) {
  if (path.empty()) throw Error(std::string("missing path: ") + what);
  if (!std::filesystem::exists(path)) throw Error(std::string(what) + " not found: " + path);
  return path;
}

const std::string& require_out(const std::string& path, const char* what) {
  if (path.empty()) throw Error(std::string("missing output path: ") + what);
  return path;
}

Corpus read_corpus(const PipelineConfig& c, const TextPipeline& text) {
  return load_corpus(require(c.paths.corpus, "corpus"), parse_corpus_format(c.paths.corpus_format), text);
}

KnowledgeBase read_kb(const PipelineConfig& c) {
  const std::string triples = c.paths.kb_triples.empty() ? "" : require(c.paths.kb_triples, "kb_triples");
  return load_kb(require(c.paths.kb_entities, "kb_entities"), triples);
}

void read_dictionary(const PipelineConfig& c, const TextPipeline& text, SurfaceDictionary& dict) {
  load_surface_forms(require(c.paths.dictionary, "dictionary"), text, dict);
}

std::optional<EmbeddingTable> optional_embeddings(const std::string& path, EmbeddingKind kind) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  return load_embeddings(path, kind);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::vector<QueryCandidates> read_training_data(const PipelineConfig& c) {
  const auto records = load_feature_cache(require(c.paths.features, "features"));
  const Qrels qrels = load_qrels(require(c.paths.qrels, "qrels"));
  return group_features(records, qrels);
}

void report_cv(const PipelineConfig& c, const std::vector<QueryCandidates>& queries, const TrainConfig& train,
               std::ostream& log) {
  CrossValConfig cv;
  cv.folds = c.folds;
  cv.seed = c.seed;
  cv.train = train;
  cv.threads = c.threads;
  const CrossValResult result = cross_validate(queries, cv);
  if (!c.paths.run_out.empty()) write_run(c.paths.run_out, result.run);
  const Qrels qrels = qrels_from_candidates(queries);
  for (const auto& m : parse_metrics(c.metrics)) {
    const MetricReport r = evaluate_run(result.run, qrels, m, c.max_grade);
    log << "cv " << m.name() << '\t' << format_double(r.mean) << "\t(" << r.per_query.size() << " queries, "
        << r.skipped << " skipped)\n";
  }
  for (std::size_t f = 0; f < result.fold_logs.size(); ++f) {
    log << "fold " << f << "\tl2=" << format_double(result.fold_logs[f].selected_l2) << '\n';
  }
}

}  // namespace

void run_ingest(const PipelineConfig& c, const std::string& candidates_out, std::ostream& log) {
  const TextPipeline text = make_text_pipeline(c);
  const Corpus corpus = read_corpus(c, text);
  nlohmann::ordered_json j;
  j["documents"] = corpus.size();
  for (Field f : {Field::kTitle, Field::kBody}) {
    const FieldStats& s = corpus.stats().field(f);
    j[field_name(f)] = {{"total_tokens", s.total_tokens}, {"avg_doc_len", s.avg_doc_len}, {"vocabulary", s.df.size()}};
  }
  if (!c.paths.queries.empty()) {
    const auto queries = load_queries(require(c.paths.queries, "queries"), text);
    j["queries"] = queries.size();
    std::vector<std::string> empty;
    for (const auto& q : queries) {
      if (q.tokens.empty()) empty.push_back(q.query_id);
    }
    j["queries_without_terms"] = empty;
    if (!candidates_out.empty()) {
      write_run(candidates_out, exhaustive_search(corpus, queries, ScorerId::kBm25, c.run_depth, c.retrieval));
    }
  } else if (!candidates_out.empty()) {
    throw Error("ingest: writing candidates needs a queries file");
  }
  log << j.dump(2) << '\n';
}

void run_build_dict(const PipelineConfig& c, std::ostream& log) {
  const TextPipeline text = make_text_pipeline(c);
  const Corpus corpus = read_corpus(c, text);
  std::optional<KnowledgeBase> kb;
  if (!c.paths.kb_entities.empty()) kb = read_kb(c);
  const std::string mentions = c.paths.mentions.empty() ? "" : require(c.paths.mentions, "mentions");
  if (mentions.empty() && !kb) throw Error("build-dict needs a mention file or a knowledge base");
  const SurfaceDictionary dict = build_dictionary(mentions, corpus, text, kb ? &*kb : nullptr);
  write_surface_forms(require_out(c.paths.dictionary, "dictionary"), dict);
  log << "surface forms\t" << dict.size() << '\n';
}

void run_link(const PipelineConfig& c, std::ostream& log) {
  const TextPipeline text = make_text_pipeline(c);
  const Corpus corpus = read_corpus(c, text);
  SurfaceDictionary dict;
  read_dictionary(c, text, dict);
  EntityLinker linker(dict, c.linker);
  std::optional<KnowledgeBase> kb;
  std::optional<EntityTextIndex> texts;
  std::optional<EmbeddingTable> joint;
  if (c.linker.context_weight > 0.0) {
    joint = optional_embeddings(c.paths.joint, EmbeddingKind::kJoint);
    if (!c.paths.kb_entities.empty()) {
      kb = read_kb(c);
      texts.emplace(*kb, text);
    }
    linker.set_context(joint ? &*joint : nullptr, texts ? &*texts : nullptr);
  }
  const AnnotationStore store = link_corpus(corpus, linker);
  std::vector<std::string> order;
  long total = 0;
  for (const auto& d : corpus.documents()) {
    order.push_back(d.doc_id);
    if (auto it = store.find(d.doc_id); it != store.end()) total += it->second.title.total() + it->second.body.total();
  }
  auto out = open_out(require_out(c.paths.annotations, "annotations"));
  write_annotations(out, order, store);
  log << "annotated documents\t" << store.size() << "\nentity mentions\t" << total << '\n';
}

void run_train_embeddings(const PipelineConfig& c, const std::string& mode, std::ostream& log) {
  if (mode == "transe") {
    const KnowledgeBase kb = read_kb(c);
    const TransEResult r = train_transe(kb, c.transe);
    write_embeddings(require_out(c.paths.transe_entities, "transe_entities"), r.entities);
    if (!c.paths.transe_predicates.empty()) write_embeddings(c.paths.transe_predicates, r.predicates);
    log << "transe loss\t" << format_double(r.epoch_loss.empty() ? 0.0 : r.epoch_loss.front()) << " -> "
        << format_double(r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << '\n';
  } else if (mode == "skipgram") {
    const TextPipeline text = make_text_pipeline(c);
    const Corpus corpus = read_corpus(c, text);
    SurfaceDictionary dict;
    read_dictionary(c, text, dict);
    const EntityLinker linker(dict, c.linker);
    const EmbeddingTable table = train_skipgram(entity_token_streams(corpus, linker), c.skipgram);
    write_embeddings(require_out(c.paths.joint, "joint"), table);
    log << "joint vocabulary\t" << table.size() << '\n';
  } else {
    throw Error("unknown embedding mode '" + mode + "' (expected transe|skipgram)");
  }
}

void run_extract_features(const PipelineConfig& c, std::ostream& log) {
  const TextPipeline text = make_text_pipeline(c);
  const Corpus corpus = read_corpus(c, text);
  const auto queries = load_queries(require(c.paths.queries, "queries"), text);
  const Run candidates = load_run(require(c.paths.candidates, "candidates"), c.run_depth);
  SurfaceDictionary dict;
  read_dictionary(c, text, dict);
  const KnowledgeBase kb = read_kb(c);
  const EntityTextIndex texts(kb, text);
  const AnnotationStore annotations = load_annotations(require(c.paths.annotations, "annotations"));
  const auto transe = optional_embeddings(c.paths.transe_entities, EmbeddingKind::kTransEEntity);
  const auto joint = optional_embeddings(c.paths.joint, EmbeddingKind::kJoint);
  EntityLinker linker(dict, c.linker);
  if (c.linker.context_weight > 0.0) linker.set_context(joint ? &*joint : nullptr, &texts);

  ExtractionInputs in;
  in.corpus = &corpus;
  in.queries = &queries;
  in.candidates = &candidates;
  in.annotations = &annotations;
  in.linker = &linker;
  in.context.doc_stats = &corpus.stats();
  in.context.entity_texts = &texts;
  in.context.dictionary = &dict;
  in.context.entity_embeddings = transe ? &*transe : nullptr;
  in.context.joint_embeddings = joint ? &*joint : nullptr;
  in.context.retrieval = c.retrieval;
  in.context.max_words = c.max_words;
  in.context.max_entities = c.max_entities;
  const auto records = extract_features(in, c.threads);

  auto out = open_out(require_out(c.paths.features, "features"));
  for (const auto& r : records) write_feature_record(out, r);
  log << "feature records\t" << records.size() << "\nschema\t" << feature_schema_hash() << '\n';
}

void run_train(const PipelineConfig& c, std::ostream& log) {
  const auto queries = read_training_data(c);
  if (c.folds > 1) report_cv(c, queries, c.train, log);
  if (!c.paths.model.empty()) {
    TrainingLog tlog;
    const TrainedModel model = train_full(queries, c.train, &tlog);
    save_model(c.paths.model, model);
    log << "model l2\t" << format_double(model.l2) << '\n';
  }
  if (c.folds <= 1 && c.paths.model.empty()) throw Error("train: set --folds > 1 or a model output path");
}

void run_rank(const PipelineConfig& c, std::ostream& log) {
  const TrainedModel model = load_model(require(c.paths.model, "model"));
  const Run candidates = load_run(require(c.paths.candidates, "candidates"), c.run_depth);
  std::vector<FeatureRecord> records;
  const bool any = std::any_of(candidates.queries.begin(), candidates.queries.end(),
                               [](const RankedList& l) { return !l.entries.empty(); });
  if (any) records = load_feature_cache(require(c.paths.features, "features"));
  const Run run = rank_run(model, candidates, records);
  write_run(require_out(c.paths.run_out, "run_out"), run);
  log << "ranked queries\t" << run.queries.size() << '\n';
}

void run_ablate(const PipelineConfig& c, const AblationOptions& options, std::ostream& log) {
  std::vector<FeatureGroup> groups;
  for (const auto& g : options.groups) {
    for (const auto& name : split_list(g)) {
      if (name == "all") {
        groups = {FeatureGroup::kQwDw, FeatureGroup::kQeDw, FeatureGroup::kQwDe, FeatureGroup::kQeDe};
      } else {
        groups.push_back(parse_feature_group(name));
      }
    }
  }
  if (groups.empty()) throw Error("ablate: no feature groups selected");
  const ColumnSelection sel = select_columns(groups, options.top_k, options.bins);
  auto queries = read_training_data(c);
  for (auto& q : queries) {
    for (auto& m : q.features) apply_selection(m, sel);
  }
  TrainConfig train = c.train;
  train.flat_attention = !options.learned_attention;
  log << "columns\tword " << sel.word.count() << "\tentity " << sel.entity.count() << '\n';
  if (c.folds > 1) report_cv(c, queries, train, log);
  if (!c.paths.model.empty()) {
    TrainedModel model = train_full(queries, train, nullptr);
    model.columns = sel;
    save_model(c.paths.model, model);
  }
}

}  // namespace duet

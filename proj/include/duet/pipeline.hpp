#pragma once

#include "duet/corpus.hpp"
#include "duet/crossval.hpp"
#include "duet/embeddings.hpp"
#include "duet/features.hpp"
#include "duet/kb.hpp"
#include "duet/linker.hpp"
#include "duet/metrics.hpp"
#include "duet/ranker.hpp"
#include "duet/retrieval.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace duet {

/// File locations shared by the pipeline stages. A stage writes the paths
/// that later stages read, so one config file can drive a whole run.
struct PipelinePaths {
  std::string corpus;
  std::string corpus_format = "jsonl";
  std::string queries;
  std::string qrels;
  std::string candidates;  // TREC run with the documents to re-rank
  std::string kb_entities;
  std::string kb_triples;
  std::string mentions;  // form<TAB>entity_id link occurrences
  std::string dictionary;
  std::string annotations;
  std::string transe_entities;
  std::string transe_predicates;
  std::string joint;
  std::string features;
  std::string model;
  std::string run_out;
};

struct PipelineConfig {
  PipelinePaths paths;
  std::string stemmer = "porter";
  std::string stopwords;  // empty: bundled list
  LinkerOptions linker;
  RetrievalParams retrieval;
  int max_words = 10;
  int max_entities = 5;
  TransEConfig transe;
  SkipGramConfig skipgram;
  TrainConfig train;
  int folds = 10;
  int max_grade = 4;
  int permutation_iterations = 100000;
  std::size_t run_depth = kDefaultRunDepth;
  std::vector<std::string> metrics{"ndcg@20", "err@20"};
  std::uint64_t seed = 1;
  int threads = 1;

  /// Copies the global seed into every seeded component.
  void propagate_seed();
};

/// INI file with sections [paths], [text], [linker], [retrieval],
/// [features], [transe], [skipgram], [train], [eval] and [run]. Unknown
/// keys are errors.
PipelineConfig load_config(const std::string& path);
void apply_config(const std::string& path, PipelineConfig& config);

TextPipeline make_text_pipeline(const PipelineConfig& config);

/// Scores every document with `scorer` summed over title and body; keeps
/// the top `depth` per query, ties by doc_id.
Run exhaustive_search(const Corpus& corpus, const std::vector<Query>& queries, ScorerId scorer, std::size_t depth,
                      const RetrievalParams& params = {});

/// Surface forms from link occurrences (`form<TAB>entity_id` per line) plus,
/// when `kb` is given, one link per entity name and alias. Occurrence counts
/// are token-sequence matches in the corpus, never below the link count.
SurfaceDictionary build_dictionary(const std::string& mentions_path, const Corpus& corpus, const TextPipeline& pipeline,
                                   const KnowledgeBase* kb);

AnnotationStore link_corpus(const Corpus& corpus, const EntityLinker& linker);

/// Token streams for joint embedding training: each field with its linked
/// spans replaced by entity ids.
std::vector<std::vector<std::string>> entity_token_streams(const Corpus& corpus, const EntityLinker& linker);

struct ExtractionInputs {
  const Corpus* corpus = nullptr;
  const std::vector<Query>* queries = nullptr;
  const Run* candidates = nullptr;
  const AnnotationStore* annotations = nullptr;
  const EntityLinker* linker = nullptr;  // links the queries
  FeatureContext context;
};

/// One record per (query, candidate) in run order; independent of `threads`.
std::vector<FeatureRecord> extract_features(const ExtractionInputs& in, int threads = 1);

/// Groups records by query (first-appearance order) and attaches every
/// judgment known for the query.
std::vector<QueryCandidates> group_features(const std::vector<FeatureRecord>& records, const Qrels& qrels);

/// Re-ranks each list of `candidates` with the model; every candidate needs
/// a feature record.
Run rank_run(const TrainedModel& model, const Run& candidates, const std::vector<FeatureRecord>& records);

/// Trains on all queries with a seeded 90/10 train/dev split.
TrainedModel train_full(const std::vector<QueryCandidates>& queries, const TrainConfig& config, TrainingLog* log);

/// Per-query TSV lines `metric<TAB>query_id<TAB>value`, then the mean under
/// query id "all" and the skipped count.
void write_evaluation(std::ostream& out, const Run& run, const Qrels& qrels, const std::vector<MetricSpec>& metrics,
                      int max_grade);

struct Comparison {
  MetricSpec metric;
  double mean_a = 0.0;
  double mean_b = 0.0;
  WinTieLoss wtl;
  double p_value = 1.0;
};

std::vector<Comparison> compare_runs(const Run& a, const Run& b, const Qrels& qrels,
                                     const std::vector<MetricSpec>& metrics, int max_grade, int iterations,
                                     std::uint64_t seed, int threads);
void write_comparison(std::ostream& out, const std::vector<Comparison>& rows);

std::vector<MetricSpec> parse_metrics(const std::vector<std::string>& names);

// Stage drivers used by the command-line tool; each reads and writes the
// files named in the config and reports to `log`.
void run_ingest(const PipelineConfig& config, const std::string& candidates_out, std::ostream& log);
void run_build_dict(const PipelineConfig& config, std::ostream& log);
void run_link(const PipelineConfig& config, std::ostream& log);
void run_train_embeddings(const PipelineConfig& config, const std::string& mode, std::ostream& log);
void run_extract_features(const PipelineConfig& config, std::ostream& log);
void run_train(const PipelineConfig& config, std::ostream& log);
void run_rank(const PipelineConfig& config, std::ostream& log);

struct AblationOptions {
  std::vector<std::string> groups{"all"};
  int top_k = kBodyTopK;
  int bins = EsrBinConfig::kBins;
  bool learned_attention = false;
};
void run_ablate(const PipelineConfig& config, const AblationOptions& options, std::ostream& log);

}  // namespace duet

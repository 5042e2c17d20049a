// Command-line driver for the word-entity duet ranking pipeline.

#include "duet/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string_view>

namespace {

// The config file supplies defaults, so it is read before flags are bound.
std::string find_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return {};
}

void add_path(CLI::App* cmd, const std::string& flag, std::string& target, const std::string& help) {
  cmd->add_option(flag, target, help);
}

}  // namespace

int main(int argc, char** argv) {
  duet::PipelineConfig cfg;
  try {
    if (auto path = find_config_flag(argc, argv); !path.empty()) duet::apply_config(path, cfg);
  } catch (const std::exception& e) {
    std::cerr << "duet: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Word-entity duet ranking toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "INI config file; flags override its values");
  app.add_option("--seed", cfg.seed, "Seed for every random component");
  app.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  auto& p = cfg.paths;

  auto* ingest = app.add_subcommand("ingest", "Load and check a corpus; optionally write BM25 candidates");
  std::string candidates_out;
  add_path(ingest, "--corpus", p.corpus, "Corpus file");
  ingest->add_option("--format", p.corpus_format, "jsonl|tsv");
  add_path(ingest, "--queries", p.queries, "Queries TSV");
  ingest->add_option("--candidates-out", candidates_out, "Write an exhaustive BM25 run here");
  ingest->add_option("--depth", cfg.run_depth, "Candidates per query");

  auto* build_dict = app.add_subcommand("build-dict", "Build the surface-form dictionary");
  add_path(build_dict, "--corpus", p.corpus, "Corpus file");
  add_path(build_dict, "--mentions", p.mentions, "form<TAB>entity_id link occurrences");
  add_path(build_dict, "--entities", p.kb_entities, "KB entities JSONL (names and aliases become forms)");
  add_path(build_dict, "--out", p.dictionary, "Dictionary output");

  auto* link = app.add_subcommand("link", "Annotate documents with entities");
  add_path(link, "--corpus", p.corpus, "Corpus file");
  add_path(link, "--dict", p.dictionary, "Surface-form dictionary");
  add_path(link, "--out", p.annotations, "Annotation TSV output");
  link->add_option("--lp-threshold", cfg.linker.lp_threshold, "Minimum link probability");
  link->add_option("--min-confidence", cfg.linker.min_confidence, "Minimum disambiguation confidence");

  auto* embed = app.add_subcommand("train-embeddings", "Train TransE or joint skip-gram vectors");
  std::string mode = "transe";
  embed->add_option("--mode", mode, "transe|skipgram")->check(CLI::IsMember({"transe", "skipgram"}));
  add_path(embed, "--entities", p.kb_entities, "KB entities JSONL");
  add_path(embed, "--triples", p.kb_triples, "KB triples TSV");
  add_path(embed, "--corpus", p.corpus, "Corpus file (skipgram)");
  add_path(embed, "--dict", p.dictionary, "Surface-form dictionary (skipgram)");
  add_path(embed, "--out-entities", p.transe_entities, "TransE entity vectors");
  add_path(embed, "--out-predicates", p.transe_predicates, "TransE predicate vectors");
  add_path(embed, "--out-joint", p.joint, "Joint word/entity vectors");
  int dim = 0, epochs = 0;
  double lr = 0.0;
  embed->add_option("--dim", dim, "Vector dimension");
  embed->add_option("--epochs", epochs, "Training epochs");
  embed->add_option("--lr", lr, "Learning rate");

  auto* extract = app.add_subcommand("extract-features", "Write the feature cache for candidate pairs");
  add_path(extract, "--corpus", p.corpus, "Corpus file");
  add_path(extract, "--queries", p.queries, "Queries TSV");
  add_path(extract, "--candidates", p.candidates, "Candidate run");
  add_path(extract, "--dict", p.dictionary, "Surface-form dictionary");
  add_path(extract, "--entities", p.kb_entities, "KB entities JSONL");
  add_path(extract, "--annotations", p.annotations, "Document annotations");
  add_path(extract, "--transe", p.transe_entities, "TransE entity vectors (optional)");
  add_path(extract, "--joint", p.joint, "Joint vectors (optional)");
  add_path(extract, "--out", p.features, "Feature cache output");

  auto* train = app.add_subcommand("train", "Cross-validate and/or fit a ranker");
  std::vector<double> l2_grid;
  add_path(train, "--features", p.features, "Feature cache");
  add_path(train, "--qrels", p.qrels, "Relevance judgments");
  add_path(train, "--model-out", p.model, "Model output (trained on all queries)");
  add_path(train, "--run-out", p.run_out, "Cross-validated test run output");
  train->add_option("--folds", cfg.folds, "Cross-validation folds (<= 1 disables)");
  train->add_option("--l2-grid", l2_grid, "L2 values to select from")->delimiter(',');
  train->add_option("--max-epochs", cfg.train.max_epochs, "Epoch limit per L2 value");
  train->add_option("--patience", cfg.train.patience, "Early-stopping patience");
  train->add_option("--lr", cfg.train.learning_rate, "Learning rate");
  train->add_flag("--flat-attention", cfg.train.flat_attention, "Force all attention weights to 1");
  train->add_flag("--unjudged-negative", cfg.train.unjudged_as_negative, "Use unjudged candidates as negatives");

  auto* rank = app.add_subcommand("rank", "Re-rank a candidate run with a trained model");
  add_path(rank, "--model", p.model, "Model file");
  add_path(rank, "--features", p.features, "Feature cache");
  add_path(rank, "--run-in", p.candidates, "Candidate run");
  add_path(rank, "--run-out", p.run_out, "Output run");

  auto* evaluate = app.add_subcommand("evaluate", "Per-query and mean metrics for a run");
  std::string run_path, run_a, run_b, metrics_flag;
  evaluate->add_option("--run", run_path, "Run file")->required();
  add_path(evaluate, "--qrels", p.qrels, "Relevance judgments");
  evaluate->add_option("--metric", metrics_flag, "Comma list, e.g. ndcg@20,err@20");
  evaluate->add_option("--max-grade", cfg.max_grade, "Top grade of the qrels scale");

  auto* compare = app.add_subcommand("compare", "Means, win/tie/loss and permutation p-values for two runs");
  compare->add_option("--run-a", run_a, "First run")->required();
  compare->add_option("--run-b", run_b, "Second run")->required();
  add_path(compare, "--qrels", p.qrels, "Relevance judgments");
  compare->add_option("--metric", metrics_flag, "Comma list, e.g. ndcg@20,err@20");
  compare->add_option("--iterations", cfg.permutation_iterations, "Permutation iterations");
  compare->add_option("--max-grade", cfg.max_grade, "Top grade of the qrels scale");

  auto* ablate = app.add_subcommand("ablate", "Cross-validate a ranker on a subset of feature columns");
  duet::AblationOptions ablation;
  add_path(ablate, "--features", p.features, "Feature cache");
  add_path(ablate, "--qrels", p.qrels, "Relevance judgments");
  add_path(ablate, "--run-out", p.run_out, "Cross-validated test run output");
  add_path(ablate, "--model-out", p.model, "Model output (trained on all queries)");
  ablate->add_option("--groups", ablation.groups, "qw_dw,qe_dw,qw_de,qe_de or all")->delimiter(',');
  ablate->add_option("--top-k", ablation.top_k, "Entity slots kept per qw_de group")->check(CLI::Range(1, 5));
  ablate->add_option("--bins", ablation.bins, "Leading qe_de bins kept")->check(CLI::Range(1, 6));
  ablate->add_flag("--learned-attention", ablation.learned_attention, "Train attention instead of flat weights");
  ablate->add_option("--folds", cfg.folds, "Cross-validation folds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.propagate_seed();
    if (!l2_grid.empty()) cfg.train.l2_grid = l2_grid;
    if (!metrics_flag.empty()) cfg.metrics = {metrics_flag};
    if (mode == "transe") {
      if (dim > 0) cfg.transe.dim = dim;
      if (epochs > 0) cfg.transe.epochs = epochs;
      if (lr > 0.0) cfg.transe.learning_rate = lr;
    } else {
      if (dim > 0) cfg.skipgram.dim = dim;
      if (epochs > 0) cfg.skipgram.epochs = epochs;
      if (lr > 0.0) cfg.skipgram.learning_rate = lr;
    }

    if (*ingest) {
      duet::run_ingest(cfg, candidates_out, std::cout);
    } else if (*build_dict) {
      duet::run_build_dict(cfg, std::cerr);
    } else if (*link) {
      duet::run_link(cfg, std::cerr);
    } else if (*embed) {
      duet::run_train_embeddings(cfg, mode, std::cerr);
    } else if (*extract) {
      duet::run_extract_features(cfg, std::cerr);
    } else if (*train) {
      duet::run_train(cfg, std::cout);
    } else if (*rank) {
      duet::run_rank(cfg, std::cerr);
    } else if (*evaluate) {
      const auto run = duet::load_run(run_path, std::numeric_limits<std::size_t>::max());
      duet::write_evaluation(std::cout, run, duet::load_qrels(cfg.paths.qrels), duet::parse_metrics(cfg.metrics),
                             cfg.max_grade);
    } else if (*compare) {
      const auto all = std::numeric_limits<std::size_t>::max();
      const auto rows = duet::compare_runs(duet::load_run(run_a, all), duet::load_run(run_b, all),
                                           duet::load_qrels(cfg.paths.qrels), duet::parse_metrics(cfg.metrics),
                                           cfg.max_grade, cfg.permutation_iterations, cfg.seed, cfg.threads);
      duet::write_comparison(std::cout, rows);
    } else if (*ablate) {
      duet::run_ablate(cfg, ablation, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "duet: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

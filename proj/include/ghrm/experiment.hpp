#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ghrm/candidates.hpp"
#include "ghrm/corpus.hpp"
#include "ghrm/model.hpp"
#include "ghrm/training.hpp"
#include "ghrm/trec.hpp"

namespace ghrm {

// ---------------------------------------------------------------------------
// Synthetic planted-relevance collection.
//
// Every query owns a few keywords that appear nowhere else. Its relevant
// documents carry all keywords (grade 2) or all but one (grade 1); its
// distractors repeat a single keyword many times (grade 0). The remaining
// documents are background text. Titles are the keywords plus one
// background word.

struct ToyConfig {
  std::size_t docs = 200;
  std::size_t queries = 20;
  std::size_t keywords = 3;
  std::size_t full_matches = 2;     // grade-2 documents per query
  std::size_t partial_matches = 2;  // grade-1 documents per query
  std::size_t distractors = 3;
  std::size_t background_vocab = 400;
  std::size_t doc_length = 60;
  std::size_t keyword_repeats = 3;
  std::size_t distractor_repeats = 4;
  std::uint64_t seed = 2021;
};

struct ToyData {
  std::vector<RawDocument> docs;
  std::vector<RawQuery> queries;
  Qrels qrels;
};

ToyData make_toy(const ToyConfig& cfg);
/// Writes corpus.jsonl, queries.tsv and qrels.txt.
void write_toy(const std::string& dir, const ToyData& data);

// ---------------------------------------------------------------------------
// Query splits.

struct Split {
  std::vector<std::string> train, valid, test;
};

/// Seeded shuffle into n_folds chunks. Fold f tests on chunk f, validates on
/// chunk (f + 1) mod n_folds and trains on the rest, so every query is
/// tested exactly once across folds.
std::vector<Split> make_folds(std::vector<std::string> qids, std::size_t n_folds, std::uint64_t seed);

std::vector<std::string> read_qid_list(const std::string& path);
void write_qid_list(const std::string& path, const std::vector<std::string>& qids);

// ---------------------------------------------------------------------------
// Pipeline stages shared by the command line and the experiment drivers.

struct IndexArtifacts {
  Vocabulary vocab;
  InvertedIndex index;

  /// vocab.tsv plus the index files.
  void save(const std::string& dir) const;
  static IndexArtifacts load(const std::string& dir);
};

/// Builds the vocabulary (min_count filter) and a full-length index over
/// in-vocabulary tokens. Throws if no term survives the filter.
IndexArtifacts build_index_artifacts(const std::vector<RawDocument>& docs, std::uint64_t min_count,
                                     const TokenizerOptions& tok = {});

/// BM25 top-`depth` list for every query, over all in-vocabulary title terms.
Run bm25_run(const IndexArtifacts& artifacts, const std::vector<RawQuery>& queries,
             std::size_t depth, const Bm25Params& params = {}, const TokenizerOptions& tok = {},
             const std::string& tag = "bm25");

/// trec_eval-style table: "metric<TAB>qid<TAB>value" per query, then a
/// row with qid "all" holding the mean. Metrics are ndcg_cut_K and P_K.
std::string format_metrics(const Run& run, const Qrels& qrels, const std::vector<std::size_t>& cutoffs);

/// Raw inputs plus the stages that do not depend on the model: vocabulary,
/// index and BM25 candidates.
struct Workbench {
  std::vector<RawDocument> docs;
  std::vector<RawQuery> queries;
  Qrels qrels;
  IndexArtifacts artifacts;
  Run candidates;

  static Workbench build(std::vector<RawDocument> docs, std::vector<RawQuery> queries, Qrels qrels,
                         std::uint64_t min_count, std::size_t depth, const Bm25Params& bm25 = {});
};

struct ExperimentSpec {
  ModelConfig model;
  TrainConfig train;
  EmbeddingOptions embeddings;
  std::string embeddings_path;  // empty: seeded random vectors for every term
  std::size_t depth = 150;      // rerank depth
  std::vector<std::size_t> cutoffs = {5, 20};
};

struct ExperimentResult {
  std::string label;
  ModelConfig model;
  TrainResult training;
  std::map<std::string, double> untrained;  // test metrics before training
  std::map<std::string, double> trained;    // test metrics after training
};

EmbeddingTable make_embeddings(const Vocabulary& vocab, const ExperimentSpec& spec);

/// Trains on split.train (checkpoint selection on split.valid when present)
/// and evaluates the reranked candidates of split.test.
ExperimentResult run_experiment(const Workbench& bench, const ExperimentSpec& spec, const Split& split,
                                std::ostream* log = nullptr);

/// One experiment per split; metric maps are averaged over splits and
/// `training` is taken from the first split.
ExperimentResult run_folds(const Workbench& bench, const ExperimentSpec& spec,
                           const std::vector<Split>& splits, std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Hyperparameter grids.

struct SweepAxis {
  std::string name;  // rate, blocks, topk, window, hidden, pooling (0 = none)
  std::vector<double> values;
};

/// Parses "name=v1,v2,...".
SweepAxis parse_axis(const std::string& text);

/// Cartesian product of the axes applied to `base`, first axis slowest.
std::vector<ModelConfig> expand_grid(const ModelConfig& base, const std::vector<SweepAxis>& axes);

/// One run_folds per grid point, all with the same seeds and splits.
std::vector<ExperimentResult> sweep(const Workbench& bench, const ExperimentSpec& base,
                                    const std::vector<SweepAxis>& axes, const std::vector<Split>& splits,
                                    std::ostream* log = nullptr);

/// Tab-separated table, one row per grid point.
std::string format_sweep_table(const std::vector<ExperimentResult>& rows,
                               const std::vector<std::size_t>& cutoffs);

/// Writes sweep.tsv and, per axis, sweep_<axis>.dat with the axis value and
/// trained test metrics (plot-ready, whitespace separated).
void write_sweep(const std::string& dir, const std::vector<SweepAxis>& axes,
                 const std::vector<ExperimentResult>& rows, const std::vector<std::size_t>& cutoffs);

}  // namespace ghrm

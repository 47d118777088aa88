#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ghrm/corpus.hpp"
#include "ghrm/model.hpp"
#include "ghrm/trec.hpp"

namespace ghrm {

/// Prepared documents and queries for one vocabulary and embedding table.
struct Collection {
  Vocabulary vocab;
  EmbeddingTable embeddings;
  std::map<std::string, PreparedDoc> docs;      // truncated to doc_len
  std::map<std::string, PreparedQuery> queries;  // padded to query_len
};

Collection make_collection(Vocabulary vocab, EmbeddingTable embeddings,
                           const std::vector<RawDocument>& docs,
                           const std::vector<RawQuery>& queries, const ModelConfig& cfg,
                           const TokenizerOptions& tok = {});

/// Memoizes the graph input of each (query, document) pair. Embeddings are
/// fixed, so an input never changes once built.
class InputCache {
 public:
  InputCache(const Collection& collection, std::size_t window)
      : collection_(collection), window_(window) {}

  /// nullptr when the query or document is unknown.
  const GraphInput* get(const std::string& qid, const std::string& doc_id);
  const Collection& collection() const { return collection_; }

 private:
  const Collection& collection_;
  std::size_t window_;
  std::map<std::pair<std::string, std::string>, GraphInput> cache_;
};

struct Triple {
  std::string qid;
  std::string positive;
  std::string negative;
};

using Batch = std::vector<Triple>;

/// Per-query positives (grade > 0, document present) and negatives
/// (candidates with grade 0 or unjudged).
struct SamplingPool {
  std::vector<std::string> qids;  // trainable queries, sorted
  std::map<std::string, std::vector<std::string>> positives;
  std::map<std::string, std::vector<std::string>> negatives;
  std::size_t skipped = 0;  // requested queries lacking either class
};

/// Throws if no requested query is trainable.
SamplingPool build_sampling_pool(const Qrels& qrels, const Run& candidates,
                                 const Collection& collection,
                                 const std::vector<std::string>& qids);

/// `batches` batches of `per_batch` triples; query, positive and negative
/// drawn uniformly. Identical for identical seeds.
std::vector<Batch> sample_batches(const SamplingPool& pool, std::uint64_t seed,
                                  std::size_t batches, std::size_t per_batch);

struct TrainConfig {
  ad::AdamConfig adam;
  std::size_t epochs = 300;
  std::size_t batches = 32;
  std::size_t batch_pos = 16;
  std::uint64_t seed = 1;
  std::size_t patience = 0;        // epochs without validation gain; 0 disables
  std::size_t valid_cutoff = 20;   // nDCG cutoff for checkpoint selection
  std::size_t valid_depth = 150;
};

struct TrainResult {
  std::vector<double> epoch_loss;   // mean hinge loss per epoch
  std::vector<double> valid_ndcg;   // empty without validation queries
  std::size_t best_epoch = 0;       // 1-based; 0 = final parameters kept
  std::size_t skipped_queries = 0;
};

/// Mini-batch Adam on the mean pairwise hinge loss. With validation queries
/// the parameters of the best validation epoch are restored at the end.
/// Throws std::runtime_error on a non-finite loss.
TrainResult train(Model& model, InputCache& inputs, const Qrels& qrels, const Run& candidates,
                  const std::vector<std::string>& train_qids,
                  const std::vector<std::string>& valid_qids, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

struct RerankResult {
  Run run;
  std::size_t skipped = 0;  // candidates without document text
  std::vector<std::string> warnings;
};

/// Rescores each candidate list with the model and keeps the top `depth`.
/// An empty `qids` reranks every query of `candidates`.
RerankResult rerank(const Model& model, InputCache& inputs, const Run& candidates,
                    std::size_t depth, const std::vector<std::string>& qids = {},
                    const std::string& tag = "ghrm");

}  // namespace ghrm

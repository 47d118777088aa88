#include "ghrm/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "ghrm/metrics.hpp"
#include "ghrm/rng.hpp"

namespace ghrm {

Collection make_collection(Vocabulary vocab, EmbeddingTable embeddings,
                           const std::vector<RawDocument>& docs,
                           const std::vector<RawQuery>& queries, const ModelConfig& cfg,
                           const TokenizerOptions& tok) {
  if (embeddings.size() != vocab.size())
    throw std::invalid_argument("embedding table has " + std::to_string(embeddings.size()) +
                                " rows for a vocabulary of " + std::to_string(vocab.size()));
  Collection c;
  c.vocab = std::move(vocab);
  c.embeddings = std::move(embeddings);
  for (const auto& d : docs) {
    if (c.docs.count(d.doc_id)) throw std::invalid_argument("duplicate doc_id \"" + d.doc_id + "\"");
    c.docs.emplace(d.doc_id, prepare_doc(d.doc_id, d.text, c.vocab, cfg.doc_len, tok));
  }
  for (const auto& q : queries) {
    if (c.queries.count(q.qid)) throw std::invalid_argument("duplicate qid \"" + q.qid + "\"");
    c.queries.emplace(q.qid, prepare_query(q.qid, q.title, c.vocab, cfg.query_len, tok));
  }
  return c;
}

const GraphInput* InputCache::get(const std::string& qid, const std::string& doc_id) {
  auto key = std::make_pair(qid, doc_id);
  if (auto it = cache_.find(key); it != cache_.end()) return &it->second;
  auto q = collection_.queries.find(qid);
  auto d = collection_.docs.find(doc_id);
  if (q == collection_.queries.end() || d == collection_.docs.end()) return nullptr;
  auto [it, _] =
      cache_.emplace(std::move(key), make_graph_input(d->second, q->second, collection_.embeddings, window_));
  return &it->second;
}

SamplingPool build_sampling_pool(const Qrels& qrels, const Run& candidates,
                                 const Collection& collection,
                                 const std::vector<std::string>& qids) {
  SamplingPool pool;
  std::set<std::string> requested(qids.begin(), qids.end());
  for (const auto& qid : requested) {
    auto query = collection.queries.find(qid);
    if (query == collection.queries.end() || query->second.real_terms() == 0) {
      ++pool.skipped;
      continue;
    }
    std::vector<std::string> pos, neg;
    const auto judged = qrels.find(qid);
    if (judged != qrels.end())
      for (const auto& [doc, grade] : judged->second)
        if (grade > 0 && collection.docs.count(doc)) pos.push_back(doc);
    if (auto cands = candidates.queries.find(qid); cands != candidates.queries.end())
      for (const auto& c : cands->second) {
        if (!collection.docs.count(c.doc_id)) continue;
        int grade = 0;
        if (judged != qrels.end())
          if (auto g = judged->second.find(c.doc_id); g != judged->second.end()) grade = g->second;
        if (grade == 0) neg.push_back(c.doc_id);
      }
    if (pos.empty() || neg.empty()) {
      ++pool.skipped;
      continue;
    }
    std::sort(neg.begin(), neg.end());
    pool.qids.push_back(qid);
    pool.positives[qid] = std::move(pos);
    pool.negatives[qid] = std::move(neg);
  }
  if (pool.qids.empty()) throw std::invalid_argument("no trainable query: each needs a positive and a candidate negative");
  return pool;
}

std::vector<Batch> sample_batches(const SamplingPool& pool, std::uint64_t seed,
                                  std::size_t batches, std::size_t per_batch) {
  if (pool.qids.empty()) throw std::invalid_argument("no trainable query");
  Rng rng(seed);
  std::vector<Batch> out(batches);
  for (auto& batch : out) {
    batch.reserve(per_batch);
    for (std::size_t i = 0; i < per_batch; ++i) {
      const auto& qid = pool.qids[rng.index(pool.qids.size())];
      const auto& pos = pool.positives.at(qid);
      const auto& neg = pool.negatives.at(qid);
      const auto& p = pos[rng.index(pos.size())];
      const auto& n = neg[rng.index(neg.size())];
      batch.push_back({qid, p, n});
    }
  }
  return out;
}

namespace {

double validation_ndcg(const Model& model, InputCache& inputs, const Qrels& qrels,
                       const Run& candidates, const std::vector<std::string>& qids,
                       const TrainConfig& cfg) {
  auto reranked = rerank(model, inputs, candidates, cfg.valid_depth, qids);
  try {
    return ndcg_at(reranked.run, qrels, cfg.valid_cutoff).mean;
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

}  // namespace

TrainResult train(Model& model, InputCache& inputs, const Qrels& qrels, const Run& candidates,
                  const std::vector<std::string>& train_qids,
                  const std::vector<std::string>& valid_qids, const TrainConfig& cfg,
                  std::ostream* log) {
  const auto pool = build_sampling_pool(qrels, candidates, inputs.collection(), train_qids);
  TrainResult result;
  result.skipped_queries = pool.skipped;
  if (log && pool.skipped)
    *log << "skipped " << pool.skipped << " queries without both positives and negatives\n";

  const auto& queries = inputs.collection().queries;
  ad::Adam optimizer(cfg.adam);
  std::vector<Matrix> best;
  double best_valid = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = sample_batches(pool, mix_seed(cfg.seed, epoch), cfg.batches, cfg.batch_pos);
    double epoch_total = 0.0;
    std::size_t epoch_count = 0;
    for (const auto& batch : batches) {
      std::vector<ad::Var> losses;
      losses.reserve(batch.size());
      for (const auto& triple : batch) {
        const auto& query = queries.at(triple.qid);
        const GraphInput* pos = inputs.get(triple.qid, triple.positive);
        const GraphInput* neg = inputs.get(triple.qid, triple.negative);
        auto rel_pos = forward(model, *pos, query).rel;
        auto rel_neg = forward(model, *neg, query).rel;
        losses.push_back(hinge_loss(rel_pos, rel_neg));
      }
      auto loss = ad::scale(ad::add_n(losses), 1.0 / static_cast<double>(losses.size()));
      const double value = loss.scalar();
      if (!std::isfinite(value))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + " (lr " + std::to_string(cfg.adam.lr) + ")");
      const auto grads = ad::backward(loss, model.params());
      optimizer.step(model.params(), grads);
      epoch_total += value * static_cast<double>(batch.size());
      epoch_count += batch.size();
    }
    const double mean_loss = epoch_count ? epoch_total / static_cast<double>(epoch_count) : 0.0;
    result.epoch_loss.push_back(mean_loss);

    if (!valid_qids.empty()) {
      const double v = validation_ndcg(model, inputs, qrels, candidates, valid_qids, cfg);
      result.valid_ndcg.push_back(v);
      if (v > best_valid) {
        best_valid = v;
        best = model.params().snapshot();
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    if (log) {
      *log << "epoch " << epoch << " loss " << mean_loss;
      if (!valid_qids.empty()) *log << " valid_ndcg@" << cfg.valid_cutoff << ' ' << result.valid_ndcg.back();
      *log << '\n';
    }
    if (cfg.patience && since_best >= cfg.patience) {
      if (log) *log << "early stop after epoch " << epoch << '\n';
      break;
    }
  }
  if (!best.empty()) model.params().restore(best);
  return result;
}

RerankResult rerank(const Model& model, InputCache& inputs, const Run& candidates,
                    std::size_t depth, const std::vector<std::string>& qids,
                    const std::string& tag) {
  RerankResult result;
  result.run.tag = tag;
  const auto& queries = inputs.collection().queries;
  std::set<std::string> wanted(qids.begin(), qids.end());
  for (const auto& [qid, cands] : candidates.queries) {
    if (!wanted.empty() && !wanted.count(qid)) continue;
    auto q = queries.find(qid);
    if (q == queries.end() || q->second.real_terms() == 0) {
      result.warnings.push_back("query " + qid + ": no in-vocabulary text, skipped");
      continue;
    }
    std::vector<ScoredDoc> scored;
    scored.reserve(cands.size());
    for (const auto& c : cands) {
      const GraphInput* input = inputs.get(qid, c.doc_id);
      if (!input) {
        ++result.skipped;
        result.warnings.push_back("query " + qid + ": no text for document " + c.doc_id);
        continue;
      }
      scored.push_back({c.doc_id, forward(model, *input, q->second).rel.scalar()});
    }
    sort_ranked(scored);
    if (scored.size() > depth) scored.resize(depth);
    result.run.queries[qid] = std::move(scored);
  }
  return result;
}

}  // namespace ghrm

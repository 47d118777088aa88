#include "ghrm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ghrm/metrics.hpp"
#include "ghrm/rng.hpp"

namespace ghrm {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

std::string keyword(std::size_t query, std::size_t k) {
  return numbered("kw", query, 2) + static_cast<char>('a' + k % 26) +
         (k >= 26 ? std::to_string(k / 26) : "");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ToyData make_toy(const ToyConfig& cfg) {
  const std::size_t per_query = cfg.full_matches + cfg.partial_matches + cfg.distractors;
  if (cfg.queries * per_query > cfg.docs)
    throw std::invalid_argument("toy corpus needs at least " + std::to_string(cfg.queries * per_query) +
                                " documents");
  if (cfg.keywords < 2 || cfg.background_vocab < 1)
    throw std::invalid_argument("toy corpus needs >= 2 keywords and a background vocabulary");

  Rng rng(cfg.seed);
  std::vector<std::string> background;
  for (std::size_t i = 0; i < cfg.background_vocab; ++i) background.push_back(numbered("bg", i, 3));

  struct Draft {
    std::vector<std::string> planted;
    std::string qid;
    int grade = -1;  // -1 = unjudged
  };
  std::vector<Draft> drafts;
  ToyData data;
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    const std::string qid = numbered("q", q + 1, 2);
    std::string title;
    for (std::size_t k = 0; k < cfg.keywords; ++k) title += (k ? " " : "") + keyword(q, k);
    title += " " + background[rng.index(background.size())];
    title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    data.queries.push_back({qid, title});

    for (std::size_t r = 0; r < cfg.full_matches + cfg.partial_matches; ++r) {
      Draft d{{}, qid, r < cfg.full_matches ? 2 : 1};
      const std::size_t dropped = r < cfg.full_matches ? cfg.keywords : r % cfg.keywords;
      for (std::size_t k = 0; k < cfg.keywords; ++k)
        if (k != dropped)
          for (std::size_t rep = 0; rep < cfg.keyword_repeats; ++rep) d.planted.push_back(keyword(q, k));
      drafts.push_back(std::move(d));
    }
    for (std::size_t r = 0; r < cfg.distractors; ++r) {
      Draft d{{}, qid, 0};
      for (std::size_t rep = 0; rep < cfg.distractor_repeats; ++rep)
        d.planted.push_back(keyword(q, r % cfg.keywords));
      drafts.push_back(std::move(d));
    }
  }
  while (drafts.size() < cfg.docs) drafts.push_back({});

  rng.shuffle(drafts.begin(), drafts.end());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    auto tokens = drafts[i].planted;
    while (tokens.size() < cfg.doc_length) tokens.push_back(background[rng.index(background.size())]);
    rng.shuffle(tokens.begin(), tokens.end());
    std::string text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      text += (t ? " " : "") + tokens[t];
      if (t % 12 == 11) text += ".";
    }
    const std::string doc_id = numbered("d", i, 3);
    data.docs.push_back({doc_id, text});
    if (drafts[i].grade >= 0) data.qrels[drafts[i].qid][doc_id] = drafts[i].grade;
  }
  return data;
}

void write_toy(const std::string& dir, const ToyData& data) {
  std::filesystem::create_directories(dir);
  write_corpus_jsonl(dir + "/corpus.jsonl", data.docs);
  write_queries_tsv(dir + "/queries.tsv", data.queries);
  write_qrels(dir + "/qrels.txt", data.qrels);
}

std::vector<Split> make_folds(std::vector<std::string> qids, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 3) throw std::invalid_argument("need at least 3 folds (train, valid, test)");
  if (qids.size() < n_folds)
    throw std::invalid_argument("cannot split " + std::to_string(qids.size()) + " queries into " +
                                std::to_string(n_folds) + " folds");
  std::sort(qids.begin(), qids.end());
  Rng rng(seed);
  rng.shuffle(qids.begin(), qids.end());
  std::vector<std::vector<std::string>> chunks(n_folds);
  for (std::size_t i = 0; i < qids.size(); ++i) chunks[i * n_folds / qids.size()].push_back(qids[i]);
  std::vector<Split> folds(n_folds);
  for (std::size_t f = 0; f < n_folds; ++f) {
    for (std::size_t c = 0; c < n_folds; ++c) {
      auto& dest = c == f ? folds[f].test : c == (f + 1) % n_folds ? folds[f].valid : folds[f].train;
      dest.insert(dest.end(), chunks[c].begin(), chunks[c].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].valid.begin(), folds[f].valid.end());
    std::sort(folds[f].test.begin(), folds[f].test.end());
  }
  return folds;
}

std::vector<std::string> read_qid_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
  std::vector<std::string> out;
  std::string qid;
  while (in >> qid) out.push_back(qid);
  return out;
}

void write_qid_list(const std::string& path, const std::vector<std::string>& qids) {
  std::string text;
  for (const auto& q : qids) text += q + '\n';
  write_text(path, text);
}

void IndexArtifacts::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  vocab.save(dir + "/vocab.tsv");
  index.save(dir);
}

IndexArtifacts IndexArtifacts::load(const std::string& dir) {
  return {Vocabulary::load(dir + "/vocab.tsv"), InvertedIndex::load(dir)};
}

IndexArtifacts build_index_artifacts(const std::vector<RawDocument>& docs, std::uint64_t min_count,
                                     const TokenizerOptions& tok) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(docs.size());
  for (const auto& d : docs) tokenized.push_back(tokenize(d.text, tok));
  IndexArtifacts out;
  out.vocab = build_vocab(tokenized, min_count);
  if (out.vocab.empty())
    throw std::invalid_argument("no term occurs at least " + std::to_string(min_count) + " times");
  std::vector<PreparedDoc> prepared;
  prepared.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i)
    prepared.push_back({docs[i].doc_id, to_term_ids(tokenized[i], out.vocab)});
  out.index = build_index(prepared);
  return out;
}

Run bm25_run(const IndexArtifacts& artifacts, const std::vector<RawQuery>& queries,
             std::size_t depth, const Bm25Params& params, const TokenizerOptions& tok,
             const std::string& tag) {
  Run run;
  run.tag = tag;
  for (const auto& q : queries) {
    auto terms = to_term_ids(tokenize(q.title, tok), artifacts.vocab);
    auto list = top_candidates(artifacts.index, q.qid, terms, depth, params);
    if (!list.docs.empty()) run.queries[q.qid] = std::move(list.docs);
  }
  return run;
}

std::string format_metrics(const Run& run, const Qrels& qrels, const std::vector<std::size_t>& cutoffs) {
  std::string out;
  for (std::size_t k : cutoffs) {
    const std::pair<std::string, MetricResult> tables[] = {
        {"ndcg_cut_" + std::to_string(k), ndcg_at(run, qrels, k)},
        {"P_" + std::to_string(k), precision_at(run, qrels, k)}};
    for (const auto& [name, result] : tables) {
      for (const auto& [qid, v] : result.per_query) out += name + '\t' + qid + '\t' + fmt(v) + '\n';
      out += name + "\tall\t" + fmt(result.mean) + '\n';
    }
  }
  return out;
}

Workbench Workbench::build(std::vector<RawDocument> docs, std::vector<RawQuery> queries, Qrels qrels,
                           std::uint64_t min_count, std::size_t depth, const Bm25Params& bm25) {
  Workbench b;
  b.artifacts = build_index_artifacts(docs, min_count);
  b.candidates = bm25_run(b.artifacts, queries, depth, bm25);
  b.docs = std::move(docs);
  b.queries = std::move(queries);
  b.qrels = std::move(qrels);
  return b;
}

EmbeddingTable make_embeddings(const Vocabulary& vocab, const ExperimentSpec& spec) {
  if (spec.embeddings_path.empty()) return random_embeddings(vocab, spec.embeddings);
  return load_embeddings(spec.embeddings_path, vocab, spec.embeddings);
}

namespace {

std::map<std::string, double> test_metrics(const Model& model, InputCache& inputs,
                                           const Workbench& bench, const ExperimentSpec& spec,
                                           const std::vector<std::string>& qids) {
  auto reranked = rerank(model, inputs, bench.candidates, spec.depth, qids);
  std::map<std::string, double> out;
  for (std::size_t k : spec.cutoffs) {
    out["ndcg@" + std::to_string(k)] = ndcg_at(reranked.run, bench.qrels, k).mean;
    out["p@" + std::to_string(k)] = precision_at(reranked.run, bench.qrels, k).mean;
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const Workbench& bench, const ExperimentSpec& spec, const Split& split,
                                std::ostream* log) {
  if (split.train.empty() || split.test.empty())
    throw std::invalid_argument("experiment needs train and test queries");
  auto collection = make_collection(bench.artifacts.vocab, make_embeddings(bench.artifacts.vocab, spec),
                                    bench.docs, bench.queries, spec.model);
  InputCache inputs(collection, spec.model.window);
  Model model(spec.model);

  ExperimentResult result;
  result.label = spec.model.variant_label();
  result.model = spec.model;
  result.untrained = test_metrics(model, inputs, bench, spec, split.test);
  result.training = train(model, inputs, bench.qrels, bench.candidates, split.train, split.valid,
                          spec.train, log);
  result.trained = test_metrics(model, inputs, bench, spec, split.test);
  return result;
}

ExperimentResult run_folds(const Workbench& bench, const ExperimentSpec& spec,
                           const std::vector<Split>& splits, std::ostream* log) {
  if (splits.empty()) throw std::invalid_argument("no splits");
  ExperimentResult total;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    if (log && splits.size() > 1) *log << "fold " << f << '\n';
    auto r = run_experiment(bench, spec, splits[f], log);
    if (f == 0) {
      total = std::move(r);
      continue;
    }
    for (auto& [k, v] : total.untrained) v += r.untrained.at(k);
    for (auto& [k, v] : total.trained) v += r.trained.at(k);
  }
  const auto n = static_cast<double>(splits.size());
  for (auto& [k, v] : total.untrained) v /= n;
  for (auto& [k, v] : total.trained) v /= n;
  return total;
}

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw std::invalid_argument("grid axis must look like name=v1,v2: \"" + text + "\"");
  SweepAxis axis{text.substr(0, eq), {}};
  static const char* known[] = {"rate", "blocks", "topk", "window", "hidden", "pooling"};
  if (std::find(std::begin(known), std::end(known), axis.name) == std::end(known))
    throw std::invalid_argument("unknown grid axis \"" + axis.name + "\"");
  std::stringstream values(text.substr(eq + 1));
  std::string item;
  while (std::getline(values, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw std::invalid_argument("bad value \"" + item + "\" for grid axis " + axis.name);
    axis.values.push_back(v);
  }
  return axis;
}

namespace {

void apply_axis(ModelConfig& cfg, const std::string& name, double v) {
  const auto as_count = [&] {
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument(name + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  };
  if (name == "rate")
    cfg.rate = v;
  else if (name == "blocks")
    cfg.blocks = as_count();
  else if (name == "topk")
    cfg.topk = as_count();
  else if (name == "window")
    cfg.window = as_count();
  else if (name == "hidden")
    cfg.hidden = as_count();
  else if (name == "pooling")
    cfg.pooling = v == 0.0 ? PoolingMode::kNone : PoolingMode::kHierarchical;
  else
    throw std::invalid_argument("unknown grid axis \"" + name + "\"");
}

double axis_value(const ModelConfig& cfg, const std::string& name) {
  if (name == "rate") return cfg.rate;
  if (name == "blocks") return static_cast<double>(cfg.blocks);
  if (name == "topk") return static_cast<double>(cfg.topk);
  if (name == "window") return static_cast<double>(cfg.window);
  if (name == "hidden") return static_cast<double>(cfg.hidden);
  return cfg.pooling == PoolingMode::kNone ? 0.0 : 1.0;
}

}  // namespace

std::vector<ModelConfig> expand_grid(const ModelConfig& base, const std::vector<SweepAxis>& axes) {
  std::vector<ModelConfig> grid{base};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw std::invalid_argument("grid axis " + axis.name + " has no values");
    std::vector<ModelConfig> next;
    for (const auto& cfg : grid)
      for (double v : axis.values) {
        auto c = cfg;
        apply_axis(c, axis.name, v);
        c.validate();
        next.push_back(c);
      }
    grid = std::move(next);
  }
  return grid;
}

std::vector<ExperimentResult> sweep(const Workbench& bench, const ExperimentSpec& base,
                                    const std::vector<SweepAxis>& axes, const std::vector<Split>& splits,
                                    std::ostream* log) {
  std::vector<ExperimentResult> rows;
  for (const auto& cfg : expand_grid(base.model, axes)) {
    auto spec = base;
    spec.model = cfg;
    if (log)
      *log << "grid point " << cfg.variant_label() << " rate=" << cfg.rate << " blocks=" << cfg.blocks
           << " topk=" << cfg.topk << '\n';
    rows.push_back(run_folds(bench, spec, splits, nullptr));
  }
  return rows;
}

std::string format_sweep_table(const std::vector<ExperimentResult>& rows,
                               const std::vector<std::size_t>& cutoffs) {
  std::string out = "label\trate\tblocks\ttopk\twindow\tpooling\tfinal_loss\tbest_epoch";
  for (std::size_t k : cutoffs) out += "\tndcg@" + std::to_string(k) + "\tp@" + std::to_string(k);
  out += "\tuntrained_ndcg@" + std::to_string(cutoffs.empty() ? 0 : cutoffs.front()) + '\n';
  for (const auto& r : rows) {
    const auto& m = r.model;
    out += r.label + '\t' + fmt(m.rate) + '\t' + std::to_string(m.blocks) + '\t' +
           std::to_string(m.topk) + '\t' + std::to_string(m.window) + '\t' +
           (m.pooling == PoolingMode::kNone ? "none" : "hierarchical") + '\t' +
           fmt(r.training.epoch_loss.empty() ? 0.0 : r.training.epoch_loss.back()) + '\t' +
           std::to_string(r.training.best_epoch);
    for (std::size_t k : cutoffs)
      out += '\t' + fmt(r.trained.at("ndcg@" + std::to_string(k))) + '\t' +
             fmt(r.trained.at("p@" + std::to_string(k)));
    out += '\t' + (cutoffs.empty() ? fmt(0.0) : fmt(r.untrained.at("ndcg@" + std::to_string(cutoffs.front())))) + '\n';
  }
  return out;
}

void write_sweep(const std::string& dir, const std::vector<SweepAxis>& axes,
                 const std::vector<ExperimentResult>& rows, const std::vector<std::size_t>& cutoffs) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/sweep.tsv", format_sweep_table(rows, cutoffs));
  for (const auto& axis : axes) {
    std::string text = "# " + axis.name;
    for (std::size_t k : cutoffs) text += " ndcg@" + std::to_string(k) + " p@" + std::to_string(k);
    text += '\n';
    for (const auto& r : rows) {
      text += fmt(axis_value(r.model, axis.name));
      for (std::size_t k : cutoffs)
        text += ' ' + fmt(r.trained.at("ndcg@" + std::to_string(k))) + ' ' +
                fmt(r.trained.at("p@" + std::to_string(k)));
      text += '\n';
    }
    write_text(dir + "/sweep_" + axis.name + ".dat", text);
  }
}

}  // namespace ghrm

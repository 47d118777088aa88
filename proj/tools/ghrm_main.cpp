#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ghrm/experiment.hpp"
#include "ghrm/metrics.hpp"
#include "ghrm/probe.hpp"

using namespace ghrm;

namespace {

struct Options {
  ModelConfig model;
  TrainConfig train;
  EmbeddingOptions emb;
  Bm25Params bm25;
  std::string pooling = "hierarchical";
  std::uint64_t seed = 1;

  std::string corpus, queries, qrels, candidates, index, embeddings, model_dir, out;
  std::string train_qids, valid_qids, qids, run, tag;
  std::vector<std::string> grid;
  std::vector<std::size_t> cutoffs = {5, 20};
  std::uint64_t min_count = 10;
  std::size_t depth = 150;
  std::size_t folds = 5;
  std::uint64_t split_seed = 1;

  ToyConfig toy;
  std::size_t instances = 20;
  std::size_t max_nodes = 12;
  double eps = 1e-5;
};

void model_flags(CLI::App* app, Options& o) {
  app->add_option("--blocks", o.model.blocks, "GNN blocks T")->capture_default_str();
  app->add_option("--rate", o.model.rate, "pooling ratio in (0, 1]")->capture_default_str();
  app->add_option("--topk", o.model.topk, "readout k")->capture_default_str();
  app->add_option("--window", o.model.window, "co-occurrence window")->capture_default_str();
  app->add_option("--query-len", o.model.query_len, "query slots M")->capture_default_str();
  app->add_option("--doc-len", o.model.doc_len, "document truncation length")->capture_default_str();
  app->add_option("--hidden", o.model.hidden, "scoring MLP width")->capture_default_str();
  app->add_option("--pooling", o.pooling, "hierarchical or none")
      ->check(CLI::IsMember({"hierarchical", "none"}))
      ->capture_default_str();
}

void train_flags(CLI::App* app, Options& o) {
  app->add_option("--lr", o.train.adam.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--epochs", o.train.epochs)->capture_default_str();
  app->add_option("--batches", o.train.batches, "batches per epoch")->capture_default_str();
  app->add_option("--batch-pos", o.train.batch_pos, "triples per batch")->capture_default_str();
  app->add_option("--patience", o.train.patience, "early stop patience, 0 = off")->capture_default_str();
  app->add_option("--seed", o.seed, "parameter and sampling seed")->capture_default_str();
}

void embedding_flags(CLI::App* app, Options& o) {
  app->add_option("--embeddings", o.embeddings, "word2vec text file; random vectors if omitted")
      ->check(CLI::ExistingFile);
  app->add_option("--emb-dim", o.emb.dim, "dimension of random vectors")->capture_default_str();
  app->add_option("--emb-seed", o.emb.seed)->capture_default_str();
}

void bm25_flags(CLI::App* app, Options& o) {
  app->add_option("--bm25-k1", o.bm25.k1)->capture_default_str();
  app->add_option("--bm25-b", o.bm25.b)->capture_default_str();
}

void finalize(Options& o) {
  o.model.pooling = o.pooling == "none" ? PoolingMode::kNone : PoolingMode::kHierarchical;
  o.model.seed = o.seed;
  o.train.seed = o.seed;
  o.model.validate();
}

std::vector<std::string> all_qids(const std::vector<RawQuery>& queries) {
  std::vector<std::string> out;
  for (const auto& q : queries) out.push_back(q.qid);
  return out;
}

std::size_t embedding_file_dim(const std::string& path) {
  std::ifstream in(path);
  std::size_t rows = 0, dim = 0;
  if (!(in >> rows >> dim)) throw std::runtime_error(path + ": missing \"V D\" header");
  return dim;
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << text;
}

void cmd_toy(const Options& o) {
  auto data = make_toy(o.toy);
  write_toy(o.out, data);
  std::cerr << "wrote " << data.docs.size() << " documents and " << data.queries.size()
            << " queries to " << o.out << '\n';
}

void cmd_index(const Options& o) {
  auto artifacts = build_index_artifacts(read_corpus_jsonl(o.corpus), o.min_count);
  artifacts.save(o.out);
  std::cerr << "indexed " << artifacts.index.n_docs() << " documents, vocabulary "
            << artifacts.vocab.size() << '\n';
}

void cmd_candidates(const Options& o) {
  auto artifacts = IndexArtifacts::load(o.index);
  auto run = bm25_run(artifacts, read_queries_tsv(o.queries), o.depth, o.bm25, {}, o.tag.empty() ? "bm25" : o.tag);
  write_file(o.out, format_run(run));
}

void cmd_split(const Options& o) {
  auto folds = make_folds(all_qids(read_queries_tsv(o.queries)), o.folds, o.split_seed);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto dir = o.out + "/fold" + std::to_string(f);
    std::filesystem::create_directories(dir);
    write_qid_list(dir + "/train.qids", folds[f].train);
    write_qid_list(dir + "/valid.qids", folds[f].valid);
    write_qid_list(dir + "/test.qids", folds[f].test);
  }
}

void cmd_train(Options o) {
  finalize(o);
  auto artifacts = IndexArtifacts::load(o.index);
  auto queries = read_queries_tsv(o.queries);
  auto table = o.embeddings.empty() ? random_embeddings(artifacts.vocab, o.emb)
                                    : load_embeddings(o.embeddings, artifacts.vocab, o.emb);
  auto collection = make_collection(artifacts.vocab, std::move(table), read_corpus_jsonl(o.corpus),
                                    queries, o.model);
  InputCache inputs(collection, o.model.window);
  const auto qrels = read_qrels(o.qrels);
  const auto candidates = read_run(o.candidates);
  const auto train_qids = o.train_qids.empty() ? all_qids(queries) : read_qid_list(o.train_qids);
  const auto valid_qids = o.valid_qids.empty() ? std::vector<std::string>{} : read_qid_list(o.valid_qids);

  Model model(o.model);
  auto result = train(model, inputs, qrels, candidates, train_qids, valid_qids, o.train, &std::cerr);
  model.save(o.model_dir);
  save_embeddings(o.model_dir + "/embeddings.txt", collection.vocab, collection.embeddings);
  std::string trace = "epoch\tloss\tvalid_ndcg\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    char line[96];
    std::snprintf(line, sizeof line, "%zu\t%.9f\t%.6f\n", e + 1, result.epoch_loss[e],
                  e < result.valid_ndcg.size() ? result.valid_ndcg[e] : 0.0);
    trace += line;
  }
  write_file(o.model_dir + "/train_log.tsv", trace);
  if (result.best_epoch) std::cerr << "restored epoch " << result.best_epoch << '\n';
}

void cmd_rerank(Options o) {
  auto model = Model::load(o.model_dir);
  auto artifacts = IndexArtifacts::load(o.index);
  const auto emb_path = o.model_dir + "/embeddings.txt";
  o.emb.dim = embedding_file_dim(emb_path);
  auto collection = make_collection(artifacts.vocab, load_embeddings(emb_path, artifacts.vocab, o.emb),
                                    read_corpus_jsonl(o.corpus), read_queries_tsv(o.queries),
                                    model.config());
  InputCache inputs(collection, model.config().window);
  const auto qids = o.qids.empty() ? std::vector<std::string>{} : read_qid_list(o.qids);
  auto result = rerank(model, inputs, read_run(o.candidates), o.depth, qids,
                       o.tag.empty() ? "ghrm" : o.tag);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_file(o.out, format_run(result.run));
}

void cmd_eval(const Options& o) {
  const auto run = read_run(o.run);
  const auto qrels = read_qrels(o.qrels);
  write_file(o.out, format_metrics(run, qrels, o.cutoffs));
  const auto excluded = ndcg_at(run, qrels, o.cutoffs.front()).excluded;
  if (excluded) std::cerr << excluded << " queries without relevant documents excluded\n";
}

void cmd_sweep(Options o) {
  finalize(o);
  auto queries = read_queries_tsv(o.queries);
  auto bench = Workbench::build(read_corpus_jsonl(o.corpus), queries, read_qrels(o.qrels), o.min_count,
                                o.depth, o.bm25);
  std::vector<SweepAxis> axes;
  for (const auto& g : o.grid) axes.push_back(parse_axis(g));
  ExperimentSpec spec;
  spec.model = o.model;
  spec.train = o.train;
  spec.embeddings = o.emb;
  spec.embeddings_path = o.embeddings;
  spec.depth = o.depth;
  spec.cutoffs = o.cutoffs;
  auto splits = make_folds(all_qids(queries), o.folds, o.split_seed);
  auto rows = sweep(bench, spec, axes, splits, &std::cerr);
  write_sweep(o.out, axes, rows, o.cutoffs);
  std::cout << format_sweep_table(rows, o.cutoffs);
}

void cmd_gradcheck(Options o) {
  finalize(o);
  auto s = survey_gradients(o.model, o.instances, o.max_nodes, o.seed, o.eps);
  std::printf("instances %zu checked %zu skipped %zu max_rel_error %.3e worst %s\n", s.instances,
              s.checked, s.skipped, s.max_rel_error, s.worst.c_str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Replaces "--config FILE" by the file's "key = value" lines as flags,
/// skipping keys already given on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> in(argv + 1, argv + argc), out;
  std::string path;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config" && i + 1 < in.size()) {
      path = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      path = in[i].substr(9);
    } else {
      out.push_back(in[i]);
    }
  }
  if (path.empty()) return out;
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open config \"" + path + "\"");
  std::string line;
  for (std::size_t n = 1; std::getline(file, line); ++n) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(n) + ": expected key = value");
    const auto flag = "--" + trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const bool given = std::any_of(out.begin(), out.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based hierarchical relevance matching for ad-hoc retrieval"};
  app.require_subcommand(1);
  Options o;

  auto* toy = app.add_subcommand("toy", "generate a planted-relevance corpus");
  toy->add_option("--out", o.out, "output directory")->required();
  toy->add_option("--docs", o.toy.docs)->capture_default_str();
  toy->add_option("--queries", o.toy.queries)->capture_default_str();
  toy->add_option("--doc-length", o.toy.doc_length)->capture_default_str();
  toy->add_option("--seed", o.toy.seed)->capture_default_str();

  auto* index = app.add_subcommand("index", "build vocabulary and inverted index");
  index->add_option("--corpus", o.corpus, "corpus.jsonl")->required()->check(CLI::ExistingFile);
  index->add_option("--min-count", o.min_count, "minimum corpus frequency")->capture_default_str();
  index->add_option("--out", o.out, "index directory")->required();

  auto* cands = app.add_subcommand("candidates", "BM25 top-N run");
  cands->add_option("--index", o.index)->required()->check(CLI::ExistingDirectory);
  cands->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
  cands->add_option("--depth", o.depth, "candidates per query")->capture_default_str();
  cands->add_option("--tag", o.tag);
  cands->add_option("--out", o.out, "run file; stdout if omitted");
  bm25_flags(cands, o);

  auto* split = app.add_subcommand("split", "seeded k-fold query split");
  split->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
  split->add_option("--folds", o.folds)->capture_default_str();
  split->add_option("--seed", o.split_seed)->capture_default_str();
  split->add_option("--out", o.out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on BM25 candidates");
  tr->add_option("--index", o.index)->required()->check(CLI::ExistingDirectory);
  tr->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  tr->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
  tr->add_option("--qrels", o.qrels)->required()->check(CLI::ExistingFile);
  tr->add_option("--candidates", o.candidates)->required()->check(CLI::ExistingFile);
  tr->add_option("--train-qids", o.train_qids, "defaults to every query")->check(CLI::ExistingFile);
  tr->add_option("--valid-qids", o.valid_qids, "checkpoint selection queries")->check(CLI::ExistingFile);
  tr->add_option("--model", o.model_dir, "output model directory")->required();
  model_flags(tr, o);
  train_flags(tr, o);
  embedding_flags(tr, o);

  auto* rr = app.add_subcommand("rerank", "rescore a candidate run");
  rr->add_option("--model", o.model_dir)->required()->check(CLI::ExistingDirectory);
  rr->add_option("--index", o.index)->required()->check(CLI::ExistingDirectory);
  rr->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  rr->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
  rr->add_option("--candidates", o.candidates)->required()->check(CLI::ExistingFile);
  rr->add_option("--qids", o.qids, "restrict to these queries")->check(CLI::ExistingFile);
  rr->add_option("--depth", o.depth)->capture_default_str();
  rr->add_option("--tag", o.tag);
  rr->add_option("--out", o.out, "run file; stdout if omitted");

  auto* ev = app.add_subcommand("eval", "nDCG@k and P@k");
  ev->add_option("--run", o.run)->required()->check(CLI::ExistingFile);
  ev->add_option("--qrels", o.qrels)->required()->check(CLI::ExistingFile);
  ev->add_option("--cutoffs", o.cutoffs)->delimiter(',')->capture_default_str();
  ev->add_option("--out", o.out, "metrics table; stdout if omitted");

  auto* sw = app.add_subcommand("sweep", "grid of cross-validated experiments");
  sw->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
  sw->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
  sw->add_option("--qrels", o.qrels)->required()->check(CLI::ExistingFile);
  sw->add_option("--grid", o.grid, "axis such as rate=0.4,0.6,0.8,1.0 (repeatable)")->required();
  sw->add_option("--min-count", o.min_count)->capture_default_str();
  sw->add_option("--depth", o.depth)->capture_default_str();
  sw->add_option("--folds", o.folds, "folds averaged per grid point")->capture_default_str();
  sw->add_option("--split-seed", o.split_seed)->capture_default_str();
  sw->add_option("--cutoffs", o.cutoffs)->delimiter(',')->capture_default_str();
  sw->add_option("--out", o.out, "output directory")->required();
  model_flags(sw, o);
  train_flags(sw, o);
  embedding_flags(sw, o);
  bm25_flags(sw, o);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check on random instances");
  Options g;
  g.model.topk = 3;
  g.model.hidden = 8;
  gc->add_option("--instances", g.instances)->capture_default_str();
  gc->add_option("--max-nodes", g.max_nodes)->capture_default_str();
  gc->add_option("--eps", g.eps)->capture_default_str();
  model_flags(gc, g);
  gc->add_option("--seed", g.seed)->capture_default_str();

  for (auto* sub : {toy, index, cands, split, tr, rr, ev, sw, gc})
    sub->add_option("--config", "\"key = value\" file of flag defaults; explicit flags win");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (toy->parsed()) cmd_toy(o);
    if (index->parsed()) cmd_index(o);
    if (cands->parsed()) cmd_candidates(o);
    if (split->parsed()) cmd_split(o);
    if (tr->parsed()) cmd_train(o);
    if (rr->parsed()) cmd_rerank(o);
    if (ev->parsed()) cmd_eval(o);
    if (sw->parsed()) cmd_sweep(o);
    if (gc->parsed()) cmd_gradcheck(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "ghrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ghrm/rng.hpp"

namespace ghrm {

using ad::Var;

void ModelConfig::validate() const {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must be in (0, 1]");
  if (topk < 1) throw std::invalid_argument("topk must be >= 1");
  if (query_len < 1) throw std::invalid_argument("query_len must be >= 1");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
  if (window < 2) throw std::invalid_argument("window must be >= 2");
}

std::string ModelConfig::variant_label() const {
  if (pooling == PoolingMode::kNone) return "GHRM-nopool";
  return rate == 1.0 ? "GHRM-soft" : "GHRM";
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j = {{"blocks", cfg.blocks},       {"rate", cfg.rate},
                      {"topk", cfg.topk},           {"query_len", cfg.query_len},
                      {"doc_len", cfg.doc_len},     {"hidden", cfg.hidden},
                      {"window", cfg.window},       {"seed", cfg.seed},
                      {"pooling", cfg.pooling == PoolingMode::kNone ? "none" : "hierarchical"}};
  return j.dump(1);
}

ModelConfig model_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig cfg;
  cfg.blocks = j.at("blocks").get<std::size_t>();
  cfg.rate = j.at("rate").get<double>();
  cfg.topk = j.at("topk").get<std::size_t>();
  cfg.query_len = j.at("query_len").get<std::size_t>();
  cfg.doc_len = j.at("doc_len").get<std::size_t>();
  cfg.hidden = j.at("hidden").get<std::size_t>();
  cfg.window = j.at("window").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto pooling = j.at("pooling").get<std::string>();
  if (pooling == "none")
    cfg.pooling = PoolingMode::kNone;
  else if (pooling == "hierarchical")
    cfg.pooling = PoolingMode::kHierarchical;
  else
    throw std::invalid_argument("unknown pooling mode \"" + pooling + "\"");
  cfg.validate();
  return cfg;
}

std::size_t pooled_size(std::size_t m, double rate) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(m) * rate - 1e-9));
}

GraphInput make_graph_input(const PreparedDoc& doc, const PreparedQuery& query,
                            const EmbeddingTable& embeddings, std::size_t window) {
  GraphInput in;
  if (doc.term_ids.empty()) {
    in.similarity = Matrix(0, query.term_ids.size());
    return in;
  }
  auto graph = build_graph(doc, window);
  in.similarity = interaction(graph.node_terms, query, embeddings);
  in.adjacency = std::move(graph.adjacency);
  in.normalized = std::move(graph.normalized);
  return in;
}

namespace {

Matrix xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (auto& x : m.data) x = rng.uniform(-bound, bound);
  return m;
}

GruParams make_gru(ad::ParamSet& ps, Rng& rng, const std::string& prefix, std::size_t d) {
  GruParams g;
  g.w_a = ps.add(prefix + ".w_a", xavier(rng, d, d));
  g.w_z = ps.add(prefix + ".w_z", xavier(rng, d, d));
  g.u_z = ps.add(prefix + ".u_z", xavier(rng, d, d));
  g.b_z = ps.add(prefix + ".b_z", Matrix(1, d));
  g.w_r = ps.add(prefix + ".w_r", xavier(rng, d, d));
  g.u_r = ps.add(prefix + ".u_r", xavier(rng, d, d));
  g.b_r = ps.add(prefix + ".b_r", Matrix(1, d));
  g.w_h = ps.add(prefix + ".w_h", xavier(rng, d, d));
  g.u_h = ps.add(prefix + ".u_h", xavier(rng, d, d));
  g.b_h = ps.add(prefix + ".b_h", Matrix(1, d));
  return g;
}

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const std::size_t m = cfg_.query_len;
  for (std::size_t t = 0; t < cfg_.blocks; ++t) {
    const std::string prefix = "block" + std::to_string(t);
    BlockParams b;
    b.gnn = make_gru(params_, rng, prefix + ".gnn", m);
    if (cfg_.pooling == PoolingMode::kHierarchical) {
      b.w_p = params_.add(prefix + ".w_p", xavier(rng, m, 1));
      b.scorer = make_gru(params_, rng, prefix + ".scorer", 1);
    }
    blocks_.push_back(std::move(b));
  }
  scoring_.gate_c = params_.add("score.gate_c", Matrix(1, 1, 1.0));
  scoring_.w1 = params_.add("score.w1", xavier(rng, cfg_.signal_rows(), cfg_.hidden));
  scoring_.b1 = params_.add("score.b1", Matrix(1, cfg_.hidden));
  scoring_.w2 = params_.add("score.w2", xavier(rng, cfg_.hidden, 1));
  scoring_.b2 = params_.add("score.b2", Matrix(1, 1));
}

void Model::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  ad::save_params(dir + "/params.json", params_);
  std::ofstream out(dir + "/config.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + dir + "/config.json\"");
  out << model_config_to_json(cfg_) << '\n';
}

Model Model::load(const std::string& dir) {
  std::ifstream in(dir + "/config.json");
  if (!in) throw std::runtime_error("cannot open \"" + dir + "/config.json\"");
  std::stringstream text;
  text << in.rdbuf();
  Model model(model_config_from_json(text.str()));
  ad::load_params(dir + "/params.json", model.params_);
  return model;
}

Var gnn_layer(const Var& features, const Matrix& normalized, const GruParams& p) {
  if (normalized.rows != features.rows() || normalized.cols != features.rows())
    throw std::invalid_argument("gnn_layer: adjacency " + normalized.shape() +
                                " does not match features " + features.value().shape());
  const Var& h = features;
  Var a = ad::matmul(ad::matmul(ad::constant(normalized), h), p.w_a);
  Var z = ad::sigmoid(ad::add_row(ad::add(ad::matmul(a, p.w_z), ad::matmul(h, p.u_z)), p.b_z));
  Var r = ad::sigmoid(ad::add_row(ad::add(ad::matmul(a, p.w_r), ad::matmul(h, p.u_r)), p.b_r));
  Var cand = ad::tanh(
      ad::add_row(ad::add(ad::matmul(a, p.w_h), ad::matmul(ad::hadamard(r, h), p.u_h)), p.b_h));
  Var keep = ad::add_scalar(ad::scale(z, -1.0), 1.0);
  return ad::add(ad::hadamard(cand, z), ad::hadamard(h, keep));
}

namespace {

Matrix submatrix(const Matrix& a, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = a(idx[i], idx[j]);
  return out;
}

}  // namespace

PoolResult rsap(const Var& features, const Matrix& adjacency, const Matrix& normalized,
                const BlockParams& p, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must be in (0, 1]");
  if (!p.w_p.valid()) throw std::invalid_argument("rsap: block has no attention parameters");
  PoolResult out;
  out.attention = gnn_layer(ad::matmul(features, p.w_p), normalized, p.scorer);
  out.kept = ad::top_rank(out.attention.value(), pooled_size(features.rows(), rate));
  out.features =
      ad::broadcast_mul(ad::gather_rows(features, out.kept), ad::gather_rows(out.attention, out.kept));
  out.adjacency = submatrix(adjacency, out.kept);
  out.normalized = normalize_adjacency(out.adjacency);
  return out;
}

Var readout(const Var& features, std::size_t k) {
  if (k < 1) throw std::invalid_argument("readout: k must be >= 1");
  return ad::topk_per_column(features, k);
}

Var assemble_signal(const std::vector<Var>& signals, std::size_t k, std::size_t query_len) {
  if (signals.empty()) throw std::invalid_argument("assemble_signal: no block signals");
  for (std::size_t t = 0; t < signals.size(); ++t)
    if (signals[t].rows() != k || signals[t].cols() != query_len)
      throw std::invalid_argument("assemble_signal: signal " + std::to_string(t) + " has shape " +
                                  signals[t].value().shape() + ", expected " +
                                  Matrix::shape_string(k, query_len));
  return ad::concat_rows(signals);
}

Var gate_weights(const std::vector<double>& idf, const std::vector<bool>& pad_mask, const Var& c) {
  if (idf.size() != pad_mask.size())
    throw std::invalid_argument("gate_weights: idf and mask lengths differ");
  if (std::none_of(pad_mask.begin(), pad_mask.end(), [](bool b) { return b; }))
    throw std::invalid_argument("query has no in-vocabulary terms");
  return ad::masked_softmax(ad::scale_by(ad::constant(Matrix::column(idf)), c), pad_mask);
}

Var score(const Var& signal, const Var& gates, const ScoringParams& p) {
  if (gates.cols() != 1 || gates.rows() != signal.cols())
    throw std::invalid_argument("score: gates " + gates.value().shape() + " do not match signal " +
                                signal.value().shape());
  if (signal.rows() != p.w1.rows())
    throw std::invalid_argument("score: signal " + signal.value().shape() +
                                " does not match scoring input " + p.w1.value().shape());
  // Each query term's column becomes a row, so the MLP runs on all terms at once.
  Var hidden = ad::tanh(ad::add_row(ad::matmul(ad::transpose(signal), p.w1), p.b1));
  Var per_term = ad::add_row(ad::matmul(hidden, p.w2), p.b2);  // M x 1
  return ad::sum(ad::hadamard(gates, per_term));
}

ForwardResult forward(const Model& model, const GraphInput& input, const PreparedQuery& query) {
  const auto& cfg = model.config();
  if (query.term_ids.size() != cfg.query_len)
    throw std::invalid_argument("query \"" + query.qid + "\" has length " +
                                std::to_string(query.term_ids.size()) + ", model expects " +
                                std::to_string(cfg.query_len));
  if (input.similarity.cols != cfg.query_len)
    throw std::invalid_argument("similarity matrix " + input.similarity.shape() +
                                " does not match query length " + std::to_string(cfg.query_len));

  ForwardResult out;
  try {
    out.gates = gate_weights(query.idf, query.pad_mask, model.scoring().gate_c);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("query \"" + query.qid + "\": " + e.what());
  }

  std::vector<Var> signals;
  Var h = ad::constant(input.similarity);
  const std::size_t m0 = input.nodes();
  out.node_counts.push_back(m0);
  signals.push_back(readout(h, cfg.topk));
  if (m0 == 0) {
    for (std::size_t t = 0; t < cfg.blocks; ++t) {
      out.node_counts.push_back(0);
      signals.push_back(readout(h, cfg.topk));
    }
  } else {
    Matrix adjacency = input.adjacency;
    Matrix normalized = input.normalized;
    for (std::size_t t = 0; t < cfg.blocks; ++t) {
      const auto& block = model.blocks()[t];
      Var updated = gnn_layer(h, normalized, block.gnn);
      if (cfg.pooling == PoolingMode::kNone) {
        h = updated;
      } else {
        auto pooled = rsap(updated, adjacency, normalized, block, cfg.rate);
        h = pooled.features;
        adjacency = std::move(pooled.adjacency);
        normalized = std::move(pooled.normalized);
        out.kept.push_back(std::move(pooled.kept));
      }
      out.node_counts.push_back(h.rows());
      signals.push_back(readout(h, cfg.topk));
    }
  }
  out.signal = assemble_signal(signals, cfg.topk, cfg.query_len);
  out.rel = score(out.signal, out.gates, model.scoring());
  return out;
}

Var hinge_loss(const Var& rel_pos, const Var& rel_neg) {
  return ad::relu(ad::add_scalar(ad::sub(rel_neg, rel_pos), 1.0));
}

double hinge_loss(double rel_pos, double rel_neg) {
  const double x = 1.0 - rel_pos + rel_neg;
  return x < 0.0 ? 0.0 : x;
}

}  // namespace ghrm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ghrm/autodiff.hpp"
#include "ghrm/corpus.hpp"
#include "ghrm/docgraph.hpp"

namespace ghrm {

enum class PoolingMode {
  kHierarchical,  // hard top-rank selection plus soft attention
  kNone,          // node set and graph fixed across blocks
};

struct ModelConfig {
  std::size_t blocks = 2;       // T
  double rate = 0.8;            // pooling ratio in (0, 1]
  std::size_t topk = 40;        // readout k
  std::size_t query_len = 4;    // M
  std::size_t doc_len = 300;    // N_max
  std::size_t hidden = 64;      // scoring MLP width
  std::size_t window = kDefaultWindow;
  PoolingMode pooling = PoolingMode::kHierarchical;
  std::uint64_t seed = 7;       // parameter initialization

  void validate() const;  // throws std::invalid_argument
  std::size_t signal_rows() const { return topk * (blocks + 1); }
  /// "GHRM", "GHRM-soft" (rate 1) or "GHRM-nopool".
  std::string variant_label() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

/// Pooled node count ceil(m * rate), robust to representation error in rate.
std::size_t pooled_size(std::size_t m, double rate);

/// Model input for one (query, document) pair.
struct GraphInput {
  Matrix adjacency;   // raw co-occurrence counts, m x m
  Matrix normalized;  // m x m
  Matrix similarity;  // S = H^0, m x M

  std::size_t nodes() const { return similarity.rows; }
};

/// Empty documents yield a zero-node input rather than an error.
GraphInput make_graph_input(const PreparedDoc& doc, const PreparedQuery& query,
                            const EmbeddingTable& embeddings, std::size_t window);

/// Gated update over d-dimensional node features; all weights d x d,
/// biases 1 x d.
struct GruParams {
  ad::Var w_a, w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h;
};

struct BlockParams {
  GruParams gnn;       // M-dimensional
  ad::Var w_p;         // M x 1 attention projection
  GruParams scorer;    // 1-dimensional, produces node attention scores
};

struct ScoringParams {
  ad::Var gate_c;      // 1 x 1
  ad::Var w1, b1;      // k(T+1) x hidden, 1 x hidden
  ad::Var w2, b2;      // hidden x 1, 1 x 1
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  const std::vector<BlockParams>& blocks() const { return blocks_; }
  const ScoringParams& scoring() const { return scoring_; }

  /// Writes params.json and config.json into dir.
  void save(const std::string& dir) const;
  static Model load(const std::string& dir);

 private:
  ModelConfig cfg_;
  ad::ParamSet params_;
  std::vector<BlockParams> blocks_;
  ScoringParams scoring_;
};

/// One message-passing step: a = Ã H W_a, then the gated update
///   z = σ(a W_z + H U_z + b_z)      r = σ(a W_r + H U_r + b_r)
///   H~ = tanh(a W_h + (r ⊙ H) U_h + b_h)
///   out = H~ ⊙ z + H ⊙ (1 - z)
ad::Var gnn_layer(const ad::Var& features, const Matrix& normalized, const GruParams& p);

struct PoolResult {
  ad::Var features;            // kept rows scaled by their attention
  Matrix adjacency;            // raw counts restricted to kept nodes
  Matrix normalized;           // renormalized from `adjacency`
  std::vector<std::size_t> kept;  // ascending indices into the input nodes
  ad::Var attention;           // m x 1 scores before selection
};

/// Relevance signal attention pooling over the output of gnn_layer.
PoolResult rsap(const ad::Var& features, const Matrix& adjacency, const Matrix& normalized,
                const BlockParams& p, double rate);

/// Column-wise k-max pooling, zero-padded when fewer than k nodes remain.
ad::Var readout(const ad::Var& features, std::size_t k);

/// Row concatenation of per-block readouts; each must be k x M.
ad::Var assemble_signal(const std::vector<ad::Var>& signals, std::size_t k, std::size_t query_len);

/// Softmax of c * idf over unpadded query slots; padded slots get 0.
ad::Var gate_weights(const std::vector<double>& idf, const std::vector<bool>& pad_mask,
                     const ad::Var& c);

/// rel = sum_j g_j * f(signal[:, j]) with one MLP f shared by all columns.
ad::Var score(const ad::Var& signal, const ad::Var& gates, const ScoringParams& p);

struct ForwardResult {
  ad::Var rel;
  ad::Var signal;
  ad::Var gates;
  std::vector<std::size_t> node_counts;          // m_0 .. m_T
  std::vector<std::vector<std::size_t>> kept;    // per pooling block
};

ForwardResult forward(const Model& model, const GraphInput& input, const PreparedQuery& query);

ad::Var hinge_loss(const ad::Var& rel_pos, const ad::Var& rel_neg);
double hinge_loss(double rel_pos, double rel_neg);

}  // namespace ghrm

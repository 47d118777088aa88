#include "ghrm/docgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace ghrm {

DocumentGraph build_graph(const PreparedDoc& doc, std::size_t window) {
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (doc.term_ids.empty()) throw std::invalid_argument("empty document \"" + doc.doc_id + "\"");

  DocumentGraph g;
  std::unordered_map<TermId, std::size_t> node_of;
  std::vector<std::size_t> seq;
  seq.reserve(doc.term_ids.size());
  for (TermId t : doc.term_ids) {
    auto [it, inserted] = node_of.emplace(t, g.node_terms.size());
    if (inserted) g.node_terms.push_back(t);
    seq.push_back(it->second);
  }

  const std::size_t n = g.node_terms.size();
  const std::size_t len = seq.size();
  g.adjacency = Matrix(n, n);
  const std::size_t n_windows = len >= window ? len - window + 1 : 1;
  std::vector<std::size_t> members;
  for (std::size_t w = 0; w < n_windows; ++w) {
    members.assign(seq.begin() + w, seq.begin() + std::min(len, w + window));
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        g.adjacency(members[a], members[b]) += 1.0;
        g.adjacency(members[b], members[a]) += 1.0;
      }
  }
  g.normalized = normalize_adjacency(g.adjacency);
  return g;
}

Matrix normalize_adjacency(const Matrix& adjacency) {
  if (adjacency.rows != adjacency.cols)
    throw std::invalid_argument("adjacency must be square, got " + adjacency.shape());
  const std::size_t n = adjacency.rows;
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += adjacency(i, j);
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = inv_sqrt[i] * adjacency(i, j) * inv_sqrt[j];
  return out;
}

namespace {

double norm_of(const double* v, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += v[d] * v[d];
  return std::sqrt(s);
}

}  // namespace

Matrix interaction(const std::vector<TermId>& node_terms, const PreparedQuery& query,
                   const EmbeddingTable& embeddings) {
  const std::size_t m = query.term_ids.size();
  const std::size_t dim = embeddings.dim();
  Matrix s(node_terms.size(), m);
  std::vector<double> qnorm(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (!query.pad_mask[j]) continue;
    qnorm[j] = norm_of(embeddings.row(query.term_ids[j]), dim);
    if (qnorm[j] == 0.0)
      throw std::invalid_argument("zero-norm embedding for query term id " +
                                  std::to_string(query.term_ids[j]));
  }
  for (std::size_t i = 0; i < node_terms.size(); ++i) {
    const double* e = embeddings.row(node_terms[i]);
    const double en = norm_of(e, dim);
    if (en == 0.0)
      throw std::invalid_argument("zero-norm embedding for term id " + std::to_string(node_terms[i]));
    for (std::size_t j = 0; j < m; ++j) {
      if (!query.pad_mask[j]) continue;
      const double* q = embeddings.row(query.term_ids[j]);
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += e[d] * q[d];
      s(i, j) = std::clamp(dot / (en * qnorm[j]), -1.0, 1.0);
    }
  }
  return s;
}

std::string graph_to_json(const DocumentGraph& graph, const Vocabulary& vocab) {
  nlohmann::json out;
  out["nodes"] = nlohmann::json::array();
  for (TermId t : graph.node_terms) out["nodes"].push_back(vocab.term(t));
  out["edges"] = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (std::size_t j = i + 1; j < graph.size(); ++j)
      if (graph.adjacency(i, j) != 0.0)
        out["edges"].push_back({i, j, static_cast<long long>(graph.adjacency(i, j))});
  return out.dump();
}

}  // namespace ghrm

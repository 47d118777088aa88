#pragma once

#include <string>
#include <vector>

#include "ghrm/corpus.hpp"
#include "ghrm/matrix.hpp"

namespace ghrm {

/// Graph-of-words for one document: unique terms as nodes, windowed
/// co-occurrence counts as edge weights.
struct DocumentGraph {
  std::vector<TermId> node_terms;  // first-occurrence order
  Matrix adjacency;                // raw counts, symmetric, zero diagonal
  Matrix normalized;               // D^-1/2 A D^-1/2

  std::size_t size() const { return node_terms.size(); }
};

inline constexpr std::size_t kDefaultWindow = 5;

/// Slides a window of `window` tokens (stride 1) over the document. Each
/// window adds 1 to every unordered pair of distinct terms it contains.
/// A document shorter than the window forms a single window.
DocumentGraph build_graph(const PreparedDoc& doc, std::size_t window = kDefaultWindow);

/// Symmetric degree normalization. Zero-degree nodes get all-zero rows and
/// columns.
Matrix normalize_adjacency(const Matrix& adjacency);

/// S[i][j] = cosine(node i, query term j); 0 in padded query slots.
/// Throws on a zero-norm embedding.
Matrix interaction(const std::vector<TermId>& node_terms, const PreparedQuery& query,
                   const EmbeddingTable& embeddings);

/// Debug dump: {"nodes": [terms], "edges": [[i, j, count], ...]} with i < j.
std::string graph_to_json(const DocumentGraph& graph, const Vocabulary& vocab);

}  // namespace ghrm

#pragma once

#include <cstdint>
#include <vector>

#include "ghrm/autodiff.hpp"
#include "ghrm/model.hpp"
#include "ghrm/rng.hpp"

namespace ghrm {

/// Synthetic model input: a random symmetric co-occurrence graph over
/// 1..max_nodes nodes and similarities in [-1, 1], zero in padded columns.
struct RandomInstance {
  GraphInput input;
  PreparedQuery query;
};

/// A random query with 1..M real terms in random slots and idf in (0.1, 3).
PreparedQuery random_query(Rng& rng, std::size_t query_len);

GraphInput random_graph_input(Rng& rng, std::size_t max_nodes, const PreparedQuery& query);

/// Relabels nodes: node i of the result is node perm[i] of `input`.
GraphInput permute_nodes(const GraphInput& input, const std::vector<std::size_t>& perm);

struct GradientSurvey {
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst;
};

/// Finite-difference check of hinge_loss(forward(pos), forward(neg)) with
/// respect to every parameter, over `instances` random (pos, neg, query)
/// triples. Each instance draws a fresh model seed.
GradientSurvey survey_gradients(const ModelConfig& cfg, std::size_t instances,
                                std::size_t max_nodes, std::uint64_t seed, double eps);

}  // namespace ghrm

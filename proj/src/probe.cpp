#include "ghrm/probe.hpp"

#include <stdexcept>

#include "ghrm/docgraph.hpp"

namespace ghrm {

PreparedQuery random_query(Rng& rng, std::size_t query_len) {
  if (query_len == 0) throw std::invalid_argument("query_len must be positive");
  PreparedQuery q;
  q.qid = "random";
  q.term_ids.assign(query_len, kPadTerm);
  q.pad_mask.assign(query_len, false);
  q.idf.assign(query_len, 0.0);
  const std::size_t real = 1 + rng.index(query_len);
  std::vector<std::size_t> slots(query_len);
  for (std::size_t i = 0; i < query_len; ++i) slots[i] = i;
  rng.shuffle(slots.begin(), slots.end());
  for (std::size_t i = 0; i < real; ++i) {
    const auto s = slots[i];
    q.term_ids[s] = static_cast<TermId>(s);
    q.pad_mask[s] = true;
    q.idf[s] = rng.uniform(0.1, 3.0);
  }
  return q;
}

GraphInput random_graph_input(Rng& rng, std::size_t max_nodes, const PreparedQuery& query) {
  if (max_nodes == 0) throw std::invalid_argument("max_nodes must be positive");
  const std::size_t m = 1 + rng.index(max_nodes);
  const std::size_t M = query.pad_mask.size();
  GraphInput g;
  g.adjacency = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double c = rng.uniform() < 0.4 ? static_cast<double>(1 + rng.index(3)) : 0.0;
      g.adjacency(i, j) = g.adjacency(j, i) = c;
    }
  g.normalized = normalize_adjacency(g.adjacency);
  g.similarity = Matrix(m, M);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (query.pad_mask[j]) g.similarity(i, j) = rng.uniform(-1.0, 1.0);
  return g;
}

GraphInput permute_nodes(const GraphInput& input, const std::vector<std::size_t>& perm) {
  const std::size_t m = input.nodes();
  if (perm.size() != m) throw std::invalid_argument("permutation size does not match node count");
  GraphInput out;
  out.adjacency = Matrix(m, m);
  out.normalized = Matrix(m, m);
  out.similarity = Matrix(m, input.similarity.cols);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.adjacency(i, j) = input.adjacency(perm[i], perm[j]);
      out.normalized(i, j) = input.normalized(perm[i], perm[j]);
    }
    for (std::size_t j = 0; j < input.similarity.cols; ++j)
      out.similarity(i, j) = input.similarity(perm[i], j);
  }
  return out;
}

GradientSurvey survey_gradients(const ModelConfig& cfg, std::size_t instances,
                                std::size_t max_nodes, std::uint64_t seed, double eps) {
  Rng rng(seed);
  GradientSurvey survey;
  for (std::size_t n = 0; n < instances; ++n) {
    auto model_cfg = cfg;
    model_cfg.seed = rng.next();
    Model model(model_cfg);
    const auto query = random_query(rng, cfg.query_len);
    const auto pos = random_graph_input(rng, max_nodes, query);
    const auto neg = random_graph_input(rng, max_nodes, query);
    auto loss = [&] {
      return hinge_loss(forward(model, pos, query).rel, forward(model, neg, query).rel);
    };
    const auto report = ad::grad_check(loss, model.params(), eps);
    ++survey.instances;
    survey.checked += report.checked;
    survey.skipped += report.skipped;
    if (survey.worst.empty() || report.max_rel_error > survey.max_rel_error) {
      survey.max_rel_error = report.max_rel_error;
      survey.worst = "instance " + std::to_string(n) + " " + report.worst;
    }
  }
  return survey;
}

}  // namespace ghrm

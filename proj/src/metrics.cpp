#include "ghrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ghrm {

namespace {

using PerQuery = std::function<double(const std::vector<ScoredDoc>&, const std::map<std::string, int>&)>;

MetricResult evaluate(const Run& run, const Qrels& qrels, std::size_t cutoff, const PerQuery& fn) {
  if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
  MetricResult result;
  bool overlap = false;
  for (const auto& [qid, ranked] : run.queries) {
    auto it = qrels.find(qid);
    if (it == qrels.end()) continue;
    overlap = true;
    const bool any_relevant = std::any_of(it->second.begin(), it->second.end(),
                                          [](const auto& e) { return e.second > 0; });
    if (!any_relevant) {
      ++result.excluded;
      continue;
    }
    result.per_query[qid] = fn(ranked, it->second);
  }
  if (!overlap) throw std::invalid_argument("run and qrels share no queries");
  if (result.per_query.empty()) return result;
  double total = 0.0;
  for (const auto& [_, v] : result.per_query) total += v;
  result.mean = total / static_cast<double>(result.per_query.size());
  return result;
}

int grade_of(const std::map<std::string, int>& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

}  // namespace

MetricResult ndcg_at(const Run& run, const Qrels& qrels, std::size_t cutoff) {
  return evaluate(run, qrels, cutoff, [cutoff](const auto& ranked, const auto& judged) {
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(cutoff, ranked.size()); ++r)
      dcg += grade_of(judged, ranked[r].doc_id) / std::log2(static_cast<double>(r) + 2.0);
    std::vector<int> ideal;
    for (const auto& [_, g] : judged)
      if (g > 0) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(cutoff, ideal.size()); ++r)
      idcg += ideal[r] / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
  });
}

MetricResult precision_at(const Run& run, const Qrels& qrels, std::size_t cutoff) {
  return evaluate(run, qrels, cutoff, [cutoff](const auto& ranked, const auto& judged) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min(cutoff, ranked.size()); ++r)
      if (grade_of(judged, ranked[r].doc_id) > 0) ++hits;
    return static_cast<double>(hits) / static_cast<double>(cutoff);
  });
}

}  // namespace ghrm

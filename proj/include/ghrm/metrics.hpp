#pragma once

#include <map>
#include <string>

#include "ghrm/trec.hpp"

namespace ghrm {

struct MetricResult {
  std::map<std::string, double> per_query;
  double mean = 0.0;
  std::size_t excluded = 0;  // queries in both run and qrels with no relevant document
};

/// nDCG with gain = grade and discount 1/log2(rank + 1). The ideal ranking
/// is built from every judged document of the query. Averages over queries
/// present in both run and qrels that have at least one relevant document;
/// throws if that set is empty.
MetricResult ndcg_at(const Run& run, const Qrels& qrels, std::size_t cutoff);

/// Fraction of the top `cutoff` slots holding a document with grade > 0.
/// Missing slots count as non-relevant. Same query set as ndcg_at.
MetricResult precision_at(const Run& run, const Qrels& qrels, std::size_t cutoff);

}  // namespace ghrm

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ghrm/candidates.hpp"

namespace ghrm {

/// qid -> doc_id -> grade.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// "qid 0 docid grade" per line. Negative grades are rejected.
Qrels read_qrels(const std::string& path);
void write_qrels(const std::string& path, const Qrels& qrels);

/// Ranked output per query, in rank order.
struct Run {
  std::map<std::string, std::vector<ScoredDoc>> queries;
  std::string tag = "ghrm";
};

/// "qid Q0 docid rank score tag". Entries keep file order within a query.
Run read_run(const std::string& path);
void write_run(const std::string& path, const Run& run);
std::string format_run(const Run& run);

}  // namespace ghrm

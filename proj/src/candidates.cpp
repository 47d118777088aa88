#include "ghrm/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ghrm {

namespace {

const std::vector<Posting> kNoPostings;

}  // namespace

const std::vector<Posting>& InvertedIndex::postings(TermId term) const {
  if (term >= postings_.size()) return kNoPostings;
  return postings_[term];
}

std::uint32_t InvertedIndex::doc_number(const std::string& doc_id) const {
  auto it = lookup_.find(doc_id);
  if (it == lookup_.end()) throw std::out_of_range("unknown document \"" + doc_id + "\"");
  return it->second;
}

InvertedIndex build_index(const std::vector<PreparedDoc>& docs) {
  if (docs.empty()) throw std::invalid_argument("empty corpus");
  InvertedIndex index;
  double total_len = 0.0;
  for (const auto& d : docs) {
    const auto doc = static_cast<std::uint32_t>(index.doc_ids_.size());
    if (!index.lookup_.emplace(d.doc_id, doc).second)
      throw std::invalid_argument("duplicate doc_id \"" + d.doc_id + "\"");
    index.doc_ids_.push_back(d.doc_id);
    index.doc_len_.push_back(static_cast<std::uint32_t>(d.term_ids.size()));
    total_len += static_cast<double>(d.term_ids.size());

    // Documents are visited in increasing doc number, so each posting list
    // stays sorted without a final pass.
    for (TermId t : d.term_ids) {
      if (t >= index.postings_.size()) index.postings_.resize(std::size_t{t} + 1);
      auto& list = index.postings_[t];
      if (list.empty() || list.back().doc != doc)
        list.push_back({doc, 1});
      else
        ++list.back().tf;
    }
  }
  index.avg_len_ = total_len / static_cast<double>(docs.size());
  return index;
}

double bm25_idf(std::size_t n_docs, std::size_t df) {
  const auto n = static_cast<double>(n_docs);
  const auto f = static_cast<double>(df);
  return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

double bm25_score(const InvertedIndex& index, const std::vector<TermId>& query,
                  const std::string& doc_id, const Bm25Params& params) {
  const auto doc = index.doc_number(doc_id);
  const double norm =
      params.k1 * (1.0 - params.b + params.b * index.doc_len(doc) / index.avg_len());
  double score = 0.0;
  for (TermId t : query) {
    const auto& list = index.postings(t);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == list.end() || it->doc != doc) continue;
    const double tf = it->tf;
    score += bm25_idf(index.n_docs(), list.size()) * tf * (params.k1 + 1.0) / (tf + norm);
  }
  return score;
}

void sort_ranked(std::vector<ScoredDoc>& docs) {
  std::sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

CandidateList top_candidates(const InvertedIndex& index, std::string qid,
                             const std::vector<TermId>& query, std::size_t n,
                             const Bm25Params& params) {
  if (n < 1) throw std::invalid_argument("candidate depth must be >= 1");
  std::vector<double> acc(index.n_docs(), 0.0);
  std::vector<bool> hit(index.n_docs(), false);
  for (TermId t : query) {
    const auto& list = index.postings(t);
    if (list.empty()) continue;
    const double idf = bm25_idf(index.n_docs(), list.size());
    for (const auto& p : list) {
      const double norm =
          params.k1 * (1.0 - params.b + params.b * index.doc_len(p.doc) / index.avg_len());
      const double tf = p.tf;
      acc[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + norm);
      hit[p.doc] = true;
    }
  }
  CandidateList out;
  out.qid = std::move(qid);
  for (std::uint32_t d = 0; d < index.n_docs(); ++d)
    if (hit[d]) out.docs.push_back({index.doc_id(d), acc[d]});
  sort_ranked(out.docs);
  if (out.docs.size() > n) out.docs.resize(n);
  return out;
}

void InvertedIndex::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/docs.tsv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + dir + "/docs.tsv\"");
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) out << doc_ids_[d] << '\t' << doc_len_[d] << '\n';
  }
  std::ofstream out(dir + "/postings.tsv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + dir + "/postings.tsv\"");
  for (std::size_t t = 0; t < postings_.size(); ++t) {
    if (postings_[t].empty()) continue;
    out << t;
    for (const auto& p : postings_[t]) out << '\t' << p.doc << ':' << p.tf;
    out << '\n';
  }
}

InvertedIndex InvertedIndex::load(const std::string& dir) {
  InvertedIndex index;
  std::string line;
  {
    std::ifstream in(dir + "/docs.tsv");
    if (!in) throw std::runtime_error("cannot open \"" + dir + "/docs.tsv\"");
    double total = 0.0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error(dir + "/docs.tsv:" + std::to_string(lineno) + ": expected doc_id<TAB>len");
      const auto doc = static_cast<std::uint32_t>(index.doc_ids_.size());
      std::string id = line.substr(0, tab);
      if (!index.lookup_.emplace(id, doc).second)
        throw std::runtime_error("duplicate doc_id \"" + id + "\" in " + dir + "/docs.tsv");
      index.doc_ids_.push_back(std::move(id));
      index.doc_len_.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
      total += index.doc_len_.back();
    }
    if (index.doc_ids_.empty()) throw std::runtime_error("empty index in " + dir);
    index.avg_len_ = total / static_cast<double>(index.doc_ids_.size());
  }
  std::ifstream in(dir + "/postings.tsv");
  if (!in) throw std::runtime_error("cannot open \"" + dir + "/postings.tsv\"");
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::size_t term = 0;
    if (!(fields >> term)) throw std::runtime_error(dir + "/postings.tsv:" + std::to_string(lineno) + ": bad term id");
    if (term >= index.postings_.size()) index.postings_.resize(term + 1);
    std::string entry;
    while (fields >> entry) {
      const auto colon = entry.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(dir + "/postings.tsv:" + std::to_string(lineno) + ": bad posting");
      index.postings_[term].push_back({static_cast<std::uint32_t>(std::stoul(entry.substr(0, colon))),
                                       static_cast<std::uint32_t>(std::stoul(entry.substr(colon + 1)))});
    }
  }
  return index;
}

}  // namespace ghrm

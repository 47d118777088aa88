#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ghrm/corpus.hpp"

namespace ghrm {

struct Posting {
  std::uint32_t doc = 0;  // dense document number, index into doc_ids()
  std::uint32_t tf = 0;
};

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

/// Term-at-a-time inverted index over in-vocabulary tokens.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  std::size_t n_docs() const { return doc_ids_.size(); }
  double avg_len() const { return avg_len_; }
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
  std::uint32_t doc_len(std::uint32_t doc) const { return doc_len_.at(doc); }
  const std::vector<Posting>& postings(TermId term) const;
  std::size_t df(TermId term) const { return postings(term).size(); }
  std::size_t n_terms() const { return postings_.size(); }

  /// Throws std::out_of_range for an unknown doc_id.
  std::uint32_t doc_number(const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const { return lookup_.count(doc_id) != 0; }

  void save(const std::string& dir) const;
  static InvertedIndex load(const std::string& dir);

 private:
  friend InvertedIndex build_index(const std::vector<PreparedDoc>& docs);

  std::vector<std::vector<Posting>> postings_;  // indexed by TermId
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_len_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
  double avg_len_ = 0.0;
};

/// Throws on an empty corpus or a duplicate doc_id.
InvertedIndex build_index(const std::vector<PreparedDoc>& docs);

/// idf component ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t n_docs, std::size_t df);

/// Okapi BM25 over the given query terms (duplicates count once each time
/// they appear). Throws std::out_of_range for an unknown document.
double bm25_score(const InvertedIndex& index, const std::vector<TermId>& query,
                  const std::string& doc_id, const Bm25Params& params = {});

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

struct CandidateList {
  std::string qid;
  std::vector<ScoredDoc> docs;  // score descending, ties by doc_id ascending
};

/// Sorts by score descending, then doc_id ascending.
void sort_ranked(std::vector<ScoredDoc>& docs);

/// Exact top-n over documents containing at least one query term.
CandidateList top_candidates(const InvertedIndex& index, std::string qid,
                             const std::vector<TermId>& query, std::size_t n,
                             const Bm25Params& params = {});

}  // namespace ghrm

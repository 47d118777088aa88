#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ghrm/matrix.hpp"

namespace ghrm {

using TermId = std::uint32_t;
inline constexpr TermId kPadTerm = std::numeric_limits<TermId>::max();

/// Optional post-normalization hook (e.g. a stemmer). Returning an empty
/// string drops the token.
using TokenHook = std::function<std::string(std::string)>;

struct TokenizerOptions {
  TokenHook hook;
};

/// Whitespace split, ASCII lowercase, punctuation stripped at token
/// boundaries. Internal punctuation (hyphens, apostrophes) is kept.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {});

/// Trailing plural-s remover usable as a TokenHook.
std::string strip_plural(std::string word);

struct RawDocument {
  std::string doc_id;
  std::string text;
};

struct RawQuery {
  std::string qid;
  std::string title;
};

std::vector<RawDocument> read_corpus_jsonl(const std::string& path);
std::vector<RawQuery> read_queries_tsv(const std::string& path);
void write_corpus_jsonl(const std::string& path, const std::vector<RawDocument>& docs);
void write_queries_tsv(const std::string& path, const std::vector<RawQuery>& queries);

class Vocabulary {
 public:
  Vocabulary() = default;

  std::optional<TermId> find(std::string_view term) const;
  TermId id(std::string_view term) const;  // throws on unknown term
  const std::string& term(TermId id) const { return terms_.at(id); }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  std::uint64_t df(TermId id) const { return df_.at(id); }
  std::uint64_t cf(TermId id) const { return cf_.at(id); }
  std::uint64_t n_docs() const { return n_docs_; }
  std::uint64_t min_count() const { return min_count_; }

  /// ln((n_docs + 1) / (df + 1)).
  double idf(TermId id) const;

  /// Terms are assigned dense ids in insertion order.
  void add(std::string term, std::uint64_t df, std::uint64_t cf);
  void set_stats(std::uint64_t n_docs, std::uint64_t min_count) {
    n_docs_ = n_docs;
    min_count_ = min_count;
  }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> df_;
  std::vector<std::uint64_t> cf_;
  std::unordered_map<std::string, TermId> index_;
  std::uint64_t n_docs_ = 0;
  std::uint64_t min_count_ = 1;
};

/// Keeps terms whose corpus frequency is at least min_count. Ids are
/// assigned in lexicographic term order. Throws on an empty corpus.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& tokenized_docs,
                       std::uint64_t min_count);

/// idf for a term that may be absent from the collection (df = 0).
double idf_from_counts(std::uint64_t n_docs, std::uint64_t df);

struct EmbeddingOptions {
  std::size_t dim = 300;
  std::uint64_t seed = 13;
  double init_range = 0.1;
};

/// One row per vocabulary term.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocab_size, std::size_t dim) : table_(vocab_size, dim) {}

  std::size_t dim() const { return table_.cols; }
  std::size_t size() const { return table_.rows; }
  const double* row(TermId id) const { return &table_.data[std::size_t{id} * table_.cols]; }
  double* row(TermId id) { return &table_.data[std::size_t{id} * table_.cols]; }
  const Matrix& matrix() const { return table_; }

  /// Number of rows filled from a file; the rest used the OOV policy.
  std::size_t loaded_rows = 0;

 private:
  Matrix table_;
};

/// Seeded uniform vector in [-range, range] derived from (seed, term), so
/// a term gets the same vector regardless of vocabulary order.
std::vector<double> oov_vector(std::string_view term, const EmbeddingOptions& opts);

EmbeddingTable random_embeddings(const Vocabulary& vocab, const EmbeddingOptions& opts);

/// word2vec text format: header "V D", then "word v1 ... vD". Rows for
/// vocabulary terms missing from the file use oov_vector. The file's D
/// overrides opts.dim.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               const EmbeddingOptions& opts = {});

void save_embeddings(const std::string& path, const Vocabulary& vocab,
                     const EmbeddingTable& table);

struct PreparedQuery {
  std::string qid;
  std::vector<TermId> term_ids;  // length M, kPadTerm in padded slots
  std::vector<bool> pad_mask;    // true = real term
  std::vector<double> idf;       // 0 in padded slots

  std::size_t real_terms() const;
};

struct PreparedDoc {
  std::string doc_id;
  std::vector<TermId> term_ids;
};

/// In-vocabulary token ids, in text order.
std::vector<TermId> to_term_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab);

PreparedQuery prepare_query(std::string qid, std::string_view title, const Vocabulary& vocab,
                            std::size_t query_len, const TokenizerOptions& opts = {});

/// OOV tokens are dropped before truncation to max_len. max_len == 0 keeps all.
PreparedDoc prepare_doc(std::string doc_id, std::string_view text, const Vocabulary& vocab,
                        std::size_t max_len, const TokenizerOptions& opts = {});

}  // namespace ghrm

#include "ghrm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ghrm/rng.hpp"

namespace ghrm {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Bytes >= 0x80 belong to UTF-8 sequences and count as word characters.
bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  return out;
}

std::string at_line(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t lo = i, hi = j;
    while (lo < hi && !is_word_char(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !is_word_char(static_cast<unsigned char>(text[hi - 1]))) --hi;
    if (lo < hi) {
      std::string tok(text.substr(lo, hi - lo));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (opts.hook) tok = opts.hook(std::move(tok));
      if (!tok.empty()) out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

std::string strip_plural(std::string word) {
  if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's') word.pop_back();
  return word;
}

std::vector<RawDocument> read_corpus_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(at_line(path, lineno) + "invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("text") ||
        !obj["doc_id"].is_string() || !obj["text"].is_string())
      throw std::runtime_error(at_line(path, lineno) +
                               "expected object with string fields doc_id and text");
    docs.push_back({obj["doc_id"].get<std::string>(), obj["text"].get<std::string>()});
  }
  return docs;
}

std::vector<RawQuery> read_queries_tsv(const std::string& path) {
  auto in = open_input(path);
  std::vector<RawQuery> queries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw std::runtime_error(at_line(path, lineno) + "expected qid<TAB>title");
    queries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return queries;
}

void write_corpus_jsonl(const std::string& path, const std::vector<RawDocument>& docs) {
  auto out = open_output(path);
  for (const auto& d : docs) {
    nlohmann::json obj = {{"doc_id", d.doc_id}, {"text", d.text}};
    out << obj.dump() << '\n';
  }
}

void write_queries_tsv(const std::string& path, const std::vector<RawQuery>& queries) {
  auto out = open_output(path);
  for (const auto& q : queries) out << q.qid << '\t' << q.title << '\n';
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TermId Vocabulary::id(std::string_view term) const {
  auto found = find(term);
  if (!found) throw std::out_of_range("unknown term \"" + std::string(term) + "\"");
  return *found;
}

double Vocabulary::idf(TermId id) const {
  if (id >= terms_.size()) throw std::out_of_range("unknown term id " + std::to_string(id));
  return idf_from_counts(n_docs_, df_[id]);
}

void Vocabulary::add(std::string term, std::uint64_t df, std::uint64_t cf) {
  if (index_.count(term)) throw std::invalid_argument("duplicate term \"" + term + "\"");
  index_.emplace(term, static_cast<TermId>(terms_.size()));
  terms_.push_back(std::move(term));
  df_.push_back(df);
  cf_.push_back(cf);
}

void Vocabulary::save(const std::string& path) const {
  auto out = open_output(path);
  out << "#vocab\tn_docs=" << n_docs_ << "\tmin_count=" << min_count_ << '\n';
  for (std::size_t i = 0; i < terms_.size(); ++i)
    out << terms_[i] << '\t' << df_[i] << '\t' << cf_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#vocab", 0) != 0)
    throw std::runtime_error(at_line(path, 1) + "missing #vocab header");
  Vocabulary v;
  {
    std::uint64_t n = 0, mc = 0;
    if (std::sscanf(line.c_str(), "#vocab\tn_docs=%lu\tmin_count=%lu", &n, &mc) != 2)
      throw std::runtime_error(at_line(path, 1) + "malformed #vocab header");
    v.set_stats(n, mc);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string term;
    std::uint64_t df = 0, cf = 0;
    if (!(std::getline(fields, term, '\t') && fields >> df >> cf))
      throw std::runtime_error(at_line(path, lineno) + "expected term<TAB>df<TAB>cf");
    v.add(std::move(term), df, cf);
  }
  return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& tokenized_docs,
                       std::uint64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (tokenized_docs.empty()) throw std::invalid_argument("empty corpus");
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;  // term -> (df, cf)
  for (const auto& doc : tokenized_docs) {
    std::vector<std::string_view> seen;
    for (const auto& tok : doc) {
      auto& c = counts[tok];
      c.second += 1;
      seen.push_back(tok);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto t : seen) counts[std::string(t)].first += 1;
  }
  Vocabulary v;
  v.set_stats(tokenized_docs.size(), min_count);
  for (auto& [term, c] : counts)
    if (c.second >= min_count) v.add(term, c.first, c.second);
  return v;
}

double idf_from_counts(std::uint64_t n_docs, std::uint64_t df) {
  return std::log((static_cast<double>(n_docs) + 1.0) / (static_cast<double>(df) + 1.0));
}

std::vector<double> oov_vector(std::string_view term, const EmbeddingOptions& opts) {
  Rng rng(mix_seed(opts.seed, fnv1a(term)));
  std::vector<double> v(opts.dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.uniform(-opts.init_range, opts.init_range);
      norm += x * x;
    }
  } while (norm == 0.0);
  return v;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, const EmbeddingOptions& opts) {
  if (opts.dim == 0) throw std::invalid_argument("embedding dimension must be > 0");
  EmbeddingTable table(vocab.size(), opts.dim);
  for (TermId id = 0; id < vocab.size(); ++id) {
    auto v = oov_vector(vocab.term(id), opts);
    std::copy(v.begin(), v.end(), table.row(id));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               const EmbeddingOptions& opts) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw std::runtime_error(at_line(path, 1) + "empty embeddings file");
  std::size_t declared_rows = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> declared_rows >> dim) || (header >> extra) || dim == 0)
      throw std::runtime_error(at_line(path, 1) + "expected header \"V D\" with D > 0");
  }
  EmbeddingOptions oov = opts;
  oov.dim = dim;
  EmbeddingTable table(vocab.size(), dim);
  std::vector<bool> filled(vocab.size(), false);
  std::vector<double> values(dim);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::size_t n = 0;
    double x = 0.0, norm = 0.0;
    while (fields >> x) {
      if (n == dim) {
        ++n;
        break;
      }
      if (!std::isfinite(x)) throw std::runtime_error(at_line(path, lineno) + "non-finite value");
      values[n++] = x;
      norm += x * x;
    }
    if (n != dim || !fields.eof())
      throw std::runtime_error(at_line(path, lineno) + "expected " + std::to_string(dim) +
                               " values for \"" + word + "\"");
    if (norm == 0.0)
      throw std::runtime_error(at_line(path, lineno) + "zero vector for \"" + word + "\"");
    if (auto id = vocab.find(word); id && !filled[*id]) {
      std::copy(values.begin(), values.end(), table.row(*id));
      filled[*id] = true;
      ++table.loaded_rows;
    }
  }
  for (TermId id = 0; id < vocab.size(); ++id) {
    if (filled[id]) continue;
    auto v = oov_vector(vocab.term(id), oov);
    std::copy(v.begin(), v.end(), table.row(id));
  }
  (void)declared_rows;
  return table;
}

void save_embeddings(const std::string& path, const Vocabulary& vocab,
                     const EmbeddingTable& table) {
  auto out = open_output(path);
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (TermId id = 0; id < table.size(); ++id) {
    out << vocab.term(id);
    for (std::size_t d = 0; d < table.dim(); ++d) {
      std::snprintf(buf, sizeof buf, " %.17g", table.row(id)[d]);
      out << buf;
    }
    out << '\n';
  }
}

std::size_t PreparedQuery::real_terms() const {
  return static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), true));
}

std::vector<TermId> to_term_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<TermId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens)
    if (auto id = vocab.find(t)) ids.push_back(*id);
  return ids;
}

PreparedQuery prepare_query(std::string qid, std::string_view title, const Vocabulary& vocab,
                            std::size_t query_len, const TokenizerOptions& opts) {
  auto ids = to_term_ids(tokenize(title, opts), vocab);
  if (ids.size() > query_len) ids.resize(query_len);
  PreparedQuery q;
  q.qid = std::move(qid);
  q.term_ids.assign(query_len, kPadTerm);
  q.pad_mask.assign(query_len, false);
  q.idf.assign(query_len, 0.0);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    q.term_ids[j] = ids[j];
    q.pad_mask[j] = true;
    q.idf[j] = vocab.idf(ids[j]);
  }
  return q;
}

PreparedDoc prepare_doc(std::string doc_id, std::string_view text, const Vocabulary& vocab,
                        std::size_t max_len, const TokenizerOptions& opts) {
  PreparedDoc d;
  d.doc_id = std::move(doc_id);
  d.term_ids = to_term_ids(tokenize(text, opts), vocab);
  if (max_len > 0 && d.term_ids.size() > max_len) d.term_ids.resize(max_len);
  return d;
}

}  // namespace ghrm

#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance runner. None of them calls into the code they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ghrm/candidates.hpp"
#include "ghrm/model.hpp"
#include "ghrm/rng.hpp"
#include "ghrm/trec.hpp"

namespace oracle {

using namespace ghrm;

// Full scan over raw token lists; shares nothing with the index.
struct BruteBm25 {
  std::vector<PreparedDoc> docs;
  Bm25Params params;

  double score(const std::vector<TermId>& query, std::size_t d) const {
    double total_len = 0.0;
    for (const auto& x : docs) total_len += static_cast<double>(x.term_ids.size());
    const double avg = total_len / static_cast<double>(docs.size());
    const double n = static_cast<double>(docs.size());
    const double norm = params.k1 * (1.0 - params.b + params.b * docs[d].term_ids.size() / avg);
    double s = 0.0;
    for (TermId t : query) {
      double df = 0.0;
      for (const auto& x : docs)
        if (std::find(x.term_ids.begin(), x.term_ids.end(), t) != x.term_ids.end()) df += 1.0;
      const double tf = static_cast<double>(std::count(docs[d].term_ids.begin(), docs[d].term_ids.end(), t));
      if (tf == 0.0) continue;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      s += idf * tf * (params.k1 + 1.0) / (tf + norm);
    }
    return s;
  }

  std::vector<ScoredDoc> ranking(const std::vector<TermId>& query) const {
    std::vector<ScoredDoc> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      bool any = false;
      for (TermId t : query)
        any = any || std::count(docs[d].term_ids.begin(), docs[d].term_ids.end(), t) > 0;
      if (any) out.push_back({docs[d].doc_id, score(query, d)});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
      return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
    return out;
  }
};

/// Ten documents of 3..17 random terms from an 8-term vocabulary.
inline std::vector<PreparedDoc> bm25_fixture() {
  Rng rng(42);
  std::vector<PreparedDoc> docs;
  for (int i = 0; i < 10; ++i) {
    std::vector<TermId> t;
    const auto len = 3 + rng.index(15);
    for (std::size_t j = 0; j < len; ++j) t.push_back(static_cast<TermId>(rng.index(8)));
    docs.push_back({"doc" + std::to_string(9 - i), t});
  }
  return docs;
}

// DCG at every ordering of the judged documents; the ideal is the maximum.
inline double ndcg(const std::vector<ScoredDoc>& ranked, const std::map<std::string, int>& judged, std::size_t k) {
  auto dcg = [&](const std::vector<int>& grades) {
    double s = 0.0;
    for (std::size_t r = 0; r < std::min(k, grades.size()); ++r) s += grades[r] / std::log2(static_cast<double>(r) + 2.0);
    return s;
  };
  std::vector<int> got;
  for (const auto& d : ranked) got.push_back(judged.count(d.doc_id) ? judged.at(d.doc_id) : 0);
  std::vector<int> all;
  for (const auto& [_, g] : judged) all.push_back(g);
  std::sort(all.begin(), all.end());
  double ideal = 0.0;
  do ideal = std::max(ideal, dcg(all));
  while (std::next_permutation(all.begin(), all.end()));
  return dcg(got) / ideal;
}

inline double precision(const std::vector<ScoredDoc>& ranked, const std::map<std::string, int>& judged, std::size_t k) {
  double hits = 0.0;
  for (std::size_t r = 0; r < k; ++r)
    if (r < ranked.size() && judged.count(ranked[r].doc_id) && judged.at(ranked[r].doc_id) > 0) hits += 1.0;
  return hits / static_cast<double>(k);
}

/// Random qrels and run over up to four queries; every query appears in both.
inline void random_judgments(Rng& rng, Qrels& qrels, Run& run) {
  const std::size_t nq = 1 + rng.index(4);
  for (std::size_t qi = 0; qi < nq; ++qi) {
    const std::string qid = "q" + std::to_string(qi);
    const std::size_t judged = 1 + rng.index(6);
    for (std::size_t j = 0; j < judged; ++j) qrels[qid]["d" + std::to_string(rng.index(10))] = static_cast<int>(rng.index(4));
    std::vector<std::string> pool;
    for (int d = 0; d < 10; ++d) pool.push_back("d" + std::to_string(d));
    rng.shuffle(pool.begin(), pool.end());
    pool.resize(rng.index(11));
    double s = 1.0;
    run.queries[qid];
    for (auto& d : pool) run.queries[qid].push_back({d, s -= 0.01});
  }
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void randomize(ad::ParamSet& ps, Rng& rng, double scale = 0.8) {
  for (const auto& [name, v] : ps.entries()) {
    ad::Var p = v;
    for (auto& x : p.mutable_value().data) x = rng.uniform(-scale, scale);
  }
}

// Scalar loops over the gated update, independent of the autodiff ops.
inline Matrix gnn(const Matrix& H, const Matrix& A, const GruParams& p) {
  const std::size_t m = H.rows, d = H.cols;
  auto W = [](const ad::Var& v, std::size_t r, std::size_t c) { return v.value()(r, c); };
  Matrix a(m, d), out(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = 0; l < d; ++l) s += A(i, j) * H(j, l) * W(p.w_a, l, c);
      a(i, c) = s;
    }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> z(d), r(d);
    for (std::size_t c = 0; c < d; ++c) {
      double sz = W(p.b_z, 0, c), sr = W(p.b_r, 0, c);
      for (std::size_t l = 0; l < d; ++l) {
        sz += a(i, l) * W(p.w_z, l, c) + H(i, l) * W(p.u_z, l, c);
        sr += a(i, l) * W(p.w_r, l, c) + H(i, l) * W(p.u_r, l, c);
      }
      z[c] = sigm(sz);
      r[c] = sigm(sr);
    }
    for (std::size_t c = 0; c < d; ++c) {
      double sh = W(p.b_h, 0, c);
      for (std::size_t l = 0; l < d; ++l) sh += a(i, l) * W(p.w_h, l, c) + r[l] * H(i, l) * W(p.u_h, l, c);
      out(i, c) = std::tanh(sh) * z[c] + H(i, c) * (1.0 - z[c]);
    }
  }
  return out;
}

inline double score(const Matrix& signal, const std::vector<double>& g, const ScoringParams& p) {
  double rel = 0.0;
  for (std::size_t j = 0; j < signal.cols; ++j) {
    double f = p.b2.value()(0, 0);
    for (std::size_t h = 0; h < p.w1.cols(); ++h) {
      double pre = p.b1.value()(0, h);
      for (std::size_t r = 0; r < signal.rows; ++r) pre += signal(r, j) * p.w1.value()(r, h);
      f += std::tanh(pre) * p.w2.value()(h, 0);
    }
    rel += g[j] * f;
  }
  return rel;
}

}  // namespace oracle

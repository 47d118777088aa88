#include "ghrm/trec.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ghrm {

namespace {

std::string at_line(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

}  // namespace

Qrels read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels \"" + path + "\"");
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, iter, doc, extra;
    int grade = 0;
    if (!(fields >> qid)) continue;
    if (!(fields >> iter >> doc >> grade) || (fields >> extra))
      throw std::runtime_error(at_line(path, lineno) + "expected \"qid 0 docid grade\"");
    if (grade < 0) throw std::runtime_error(at_line(path, lineno) + "negative grade");
    qrels[qid][doc] = grade;
  }
  return qrels;
}

void write_qrels(const std::string& path, const Qrels& qrels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  for (const auto& [qid, docs] : qrels)
    for (const auto& [doc, grade] : docs) out << qid << " 0 " << doc << ' ' << grade << '\n';
}

Run read_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run \"" + path + "\"");
  Run run;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, q0, doc, tag;
    long rank = 0;
    double score = 0.0;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> doc >> rank >> score >> tag))
      throw std::runtime_error(at_line(path, lineno) + "expected \"qid Q0 docid rank score tag\"");
    run.queries[qid].push_back({doc, score});
    run.tag = tag;
  }
  return run;
}

std::string format_run(const Run& run) {
  std::string out;
  char buf[64];
  for (const auto& [qid, docs] : run.queries)
    for (std::size_t r = 0; r < docs.size(); ++r) {
      std::snprintf(buf, sizeof buf, " %zu %.9f ", r + 1, docs[r].score);
      out += qid + " Q0 " + docs[r].doc_id + buf + run.tag + '\n';
    }
  return out;
}

void write_run(const std::string& path, const Run& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
  out << format_run(run);
}

}  // namespace ghrm

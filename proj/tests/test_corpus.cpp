#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ghrm/corpus.hpp"
#include "test_util.hpp"

using namespace ghrm;

namespace {

using Tokens = std::vector<std::string>;

Vocabulary small_vocab(std::uint64_t min_count) {
  return build_vocab({tokenize("a a b"), tokenize("a c")}, min_count);
}

std::string join(const Tokens& t) {
  std::string out;
  for (const auto& s : t) out += (out.empty() ? "" : " ") + s;
  return out;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplits) {
  EXPECT_EQ(tokenize("The EXPO Train"), (Tokens{"the", "expo", "train"}));
}

TEST(Tokenize, EmptyInput) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("   \t\n").empty());
}

TEST(Tokenize, KeepsInternalHyphenCollapsesSpaces) {
  EXPECT_EQ(tokenize("long-closed  EXPO"), (Tokens{"long-closed", "expo"}));
}

TEST(Tokenize, StripsBoundaryPunctuation) {
  EXPECT_EQ(tokenize("(Hello), world!! \"don't\" --"), (Tokens{"hello", "world", "don't"}));
}

TEST(Tokenize, NonAsciiBytesAreWordCharacters) {
  EXPECT_EQ(tokenize("Caf\xc3\xa9."), (Tokens{"caf\xc3\xa9"}));
}

TEST(Tokenize, HookAppliesAndCanDrop) {
  TokenizerOptions opts;
  opts.hook = [](std::string w) { return w == "the" ? std::string() : strip_plural(std::move(w)); };
  EXPECT_EQ(tokenize("The trains cars", opts), (Tokens{"train", "car"}));
}

TEST(Tokenize, IdempotentOnRandomText) {
  Rng rng(5);
  const std::string alphabet = "abcXYZ-'.,!? \t()0";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto len = rng.index(40);
    for (std::size_t i = 0; i < len; ++i) text += alphabet[rng.index(alphabet.size())];
    const auto once = tokenize(text);
    EXPECT_EQ(tokenize(join(once)), once) << "input: " << text;
  }
}

TEST(BuildVocab, MinCountTwo) {
  auto v = small_vocab(2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.term(0), "a");
  EXPECT_EQ(v.df(0), 2u);
  EXPECT_EQ(v.cf(0), 3u);
  EXPECT_EQ(v.n_docs(), 2u);
}

TEST(BuildVocab, MinCountOneKeepsAll) {
  auto v = small_vocab(1);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id("a"), 0u);
  EXPECT_EQ(v.id("b"), 1u);
  EXPECT_EQ(v.id("c"), 2u);
}

TEST(BuildVocab, EverythingFilteredGivesEmptyVocabulary) {
  EXPECT_TRUE(small_vocab(10).empty());
}

TEST(BuildVocab, EmptyCorpusThrows) {
  EXPECT_THROW(build_vocab({}, 1), std::invalid_argument);
}

TEST(BuildVocab, DenseIdsAndThreshold) {
  Rng rng(11);
  std::vector<Tokens> docs(30);
  for (auto& d : docs)
    for (int i = 0; i < 20; ++i) d.push_back("t" + std::to_string(rng.index(25)));
  for (std::uint64_t mc : {1, 3, 10, 25}) {
    auto v = build_vocab(docs, mc);
    for (TermId id = 0; id < v.size(); ++id) {
      EXPECT_EQ(v.id(v.term(id)), id);
      EXPECT_GE(v.cf(id), mc);
    }
  }
}

TEST(Idf, ExamplesFromFormula) {
  auto v = small_vocab(1);
  EXPECT_NEAR(v.idf(v.id("a")), 0.0, 1e-15);
  EXPECT_NEAR(v.idf(v.id("b")), std::log(1.5), 1e-15);
  EXPECT_NEAR(idf_from_counts(2, 0), std::log(3.0), 1e-15);
  EXPECT_THROW(v.idf(99), std::out_of_range);
}

TEST(Idf, StrictlyDecreasingInDf) {
  for (std::uint64_t n : {1, 7, 1000})
    for (std::uint64_t df = 0; df < n; ++df) EXPECT_GT(idf_from_counts(n, df), idf_from_counts(n, df + 1));
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  auto dir = test::temp_dir("vocab");
  auto v = small_vocab(1);
  v.save((dir / "v.tsv").string());
  auto w = Vocabulary::load((dir / "v.tsv").string());
  ASSERT_EQ(w.size(), v.size());
  EXPECT_EQ(w.n_docs(), 2u);
  for (TermId i = 0; i < v.size(); ++i) {
    EXPECT_EQ(w.term(i), v.term(i));
    EXPECT_EQ(w.df(i), v.df(i));
    EXPECT_EQ(w.cf(i), v.cf(i));
  }
}

TEST(Embeddings, ReadsRowsFromFile) {
  auto dir = test::temp_dir("emb_read");
  auto path = test::write(dir / "e.txt", "2 3\na 1 0 0\nzz 0 1 0\n");
  auto v = small_vocab(1);
  auto t = load_embeddings(path, v);
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.loaded_rows, 1u);
  const double* a = t.row(v.id("a"));
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_EQ(a[2], 0.0);
}

TEST(Embeddings, OovRowsDeterministicAndNonZero) {
  auto dir = test::temp_dir("emb_oov");
  auto path = test::write(dir / "e.txt", "1 3\na 1 0 0\n");
  auto v = small_vocab(1);
  auto t1 = load_embeddings(path, v);
  auto t2 = load_embeddings(path, v);
  EXPECT_EQ(t1.matrix(), t2.matrix());
  for (TermId id = 0; id < v.size(); ++id) {
    double norm = 0.0;
    for (std::size_t j = 0; j < t1.dim(); ++j) norm += t1.row(id)[j] * t1.row(id)[j];
    EXPECT_GT(norm, 0.0);
  }
  auto expected = oov_vector("b", {3, 13, 0.1});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t1.row(v.id("b"))[j], expected[j]);
}

TEST(Embeddings, ShortLineReportsLineNumber) {
  auto dir = test::temp_dir("emb_short");
  auto path = test::write(dir / "e.txt", "2 3\na 1 0 0\nb 1 0\n");
  try {
    load_embeddings(path, small_vocab(1));
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Embeddings, RejectsZeroVectorAndNonFinite) {
  auto dir = test::temp_dir("emb_bad");
  EXPECT_THROW(load_embeddings(test::write(dir / "z.txt", "1 2\na 0 0\n"), small_vocab(1)), std::runtime_error);
  EXPECT_THROW(load_embeddings(test::write(dir / "n.txt", "1 2\na nan 1\n"), small_vocab(1)), std::runtime_error);
}

TEST(Embeddings, SaveLoadRoundTrip) {
  auto dir = test::temp_dir("emb_rt");
  auto v = small_vocab(1);
  auto t = random_embeddings(v, {4, 3, 0.1});
  save_embeddings((dir / "e.txt").string(), v, t);
  auto u = load_embeddings((dir / "e.txt").string(), v, {4, 99, 0.1});
  EXPECT_EQ(u.matrix(), t.matrix());
  EXPECT_EQ(u.loaded_rows, v.size());
}

TEST(PrepareQuery, PadsToM) {
  auto v = build_vocab({tokenize("expo train station")}, 1);
  auto q = prepare_query("q1", "expo train", v, 4);
  EXPECT_EQ(q.pad_mask, (std::vector<bool>{true, true, false, false}));
  EXPECT_EQ(q.term_ids[0], v.id("expo"));
  EXPECT_EQ(q.term_ids[1], v.id("train"));
  EXPECT_EQ(q.term_ids[2], kPadTerm);
  EXPECT_EQ(q.idf[3], 0.0);
  EXPECT_EQ(q.real_terms(), 2u);
}

TEST(PrepareQuery, AllOovIsFullyPadded) {
  auto q = prepare_query("q1", "nothing here", small_vocab(1), 4);
  EXPECT_EQ(q.real_terms(), 0u);
  EXPECT_EQ(q.term_ids.size(), 4u);
}

TEST(PrepareQuery, LengthIsAlwaysM) {
  auto v = small_vocab(1);
  for (std::size_t M : {1, 2, 4, 7})
    for (const char* title : {"", "a", "a b c a b c a b c", "x y"}) {
      auto q = prepare_query("q", title, v, M);
      EXPECT_EQ(q.term_ids.size(), M);
      EXPECT_EQ(q.pad_mask.size(), M);
      EXPECT_EQ(q.idf.size(), M);
    }
}

TEST(PrepareDoc, TruncatesAfterOovFiltering) {
  std::string text;
  for (int i = 0; i < 800; ++i) text += (i % 2 ? "oov" + std::to_string(i) : std::string("a")) + " b ";
  auto v = build_vocab({tokenize("a b")}, 1);
  auto d = prepare_doc("d", text, v, 500);
  ASSERT_EQ(d.term_ids.size(), 500u);
  auto all = prepare_doc("d", text, v, 0);
  EXPECT_EQ(all.term_ids.size(), 1200u);
  EXPECT_TRUE(std::equal(d.term_ids.begin(), d.term_ids.end(), all.term_ids.begin()));
}

TEST(CorpusFiles, RoundTripAndLineNumberedErrors) {
  auto dir = test::temp_dir("corpus_io");
  std::vector<RawDocument> docs{{"d1", "hello \"world\"\tx"}, {"d2", ""}};
  write_corpus_jsonl((dir / "c.jsonl").string(), docs);
  auto back = read_corpus_jsonl((dir / "c.jsonl").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].text, docs[0].text);

  std::vector<RawQuery> qs{{"q1", "expo train"}};
  write_queries_tsv((dir / "q.tsv").string(), qs);
  EXPECT_EQ(read_queries_tsv((dir / "q.tsv").string())[0].title, "expo train");

  auto bad = test::write(dir / "bad.jsonl", "{\"doc_id\":\"a\",\"text\":\"x\"}\n{oops\n");
  try {
    read_corpus_jsonl(bad);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

#include <random>

#include "chronicler/errors.hpp"
#include "chronicler/evalkit.hpp"
#include "chronicler/text.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::TempDir;
using chronicler::testing::write_file;

TEST_SUITE_BEGIN("evalkit");

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
  return std::vector<std::string>(xs.begin(), xs.end());
}

// Independent LCS oracle: enumerate every subsequence of the shorter side
// and test it against the other. Exponential on purpose.
std::size_t lcs_brute_force(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (1ull << small.size()); ++mask) {
    std::vector<const std::string*> sub;
    for (std::size_t i = 0; i < small.size(); ++i) {
      if (mask & (1ull << i)) sub.push_back(&small[i]);
    }
    if (sub.size() <= best) continue;
    std::size_t j = 0;
    for (const auto& token : large) {
      if (j < sub.size() && token == *sub[j]) ++j;
    }
    if (j == sub.size()) best = sub.size();
  }
  return best;
}

}  // namespace

TEST_CASE("rouge_n identity, hand-counted pair, disjoint") {
  auto s = rouge_n(toks({"a", "b"}), toks({"a", "b"}), 1);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);

  // [a,b] vs [b,c]: overlap 1, p = r = f1 = 0.5
  s = rouge_n(toks({"a", "b"}), toks({"b", "c"}), 1);
  CHECK(s.precision == doctest::Approx(0.5));
  CHECK(s.recall == doctest::Approx(0.5));
  CHECK(s.f1 == doctest::Approx(0.5));

  s = rouge_n(toks({"a", "b"}), toks({"c", "d"}), 1);
  CHECK(s.f1 == 0.0);
  CHECK_FALSE(s.degenerate);
}

TEST_CASE("rouge_n bigrams and clipping") {
  // candidate repeats a bigram: clipped at the reference count
  auto s = rouge_n(toks({"x", "y", "x", "y"}), toks({"x", "y", "z"}), 2);
  // candidate bigrams: xy, yx, xy (xy count 2); reference: xy, yz -> overlap 1
  CHECK(s.precision == doctest::Approx(1.0 / 3.0));
  CHECK(s.recall == doctest::Approx(0.5));

  auto degenerate = rouge_n(toks({"only"}), toks({"a", "b"}), 2);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.f1 == 0.0);
  CHECK_THROWS_AS((void)rouge_n(toks({"a"}), toks({"a"}), 3), Error);
}

TEST_CASE("rouge_l hand example: ace vs abcde") {
  // LCS("ace","abcde") = ace (3): p = 3/3, r = 3/5, f1 = 0.75
  auto s = rouge_l(toks({"a", "c", "e"}), toks({"a", "b", "c", "d", "e"}));
  CHECK(s.precision == doctest::Approx(1.0));
  CHECK(s.recall == doctest::Approx(0.6));
  CHECK(s.f1 == doctest::Approx(0.75));

  CHECK(rouge_l(toks({"x"}), toks({"x"})).f1 == 1.0);
  CHECK(rouge_l(toks({"x"}), toks({"y"})).f1 == 0.0);
  CHECK(rouge_l({}, toks({"y"})).degenerate);
}

TEST_CASE("rouge_l(x, x) = 1 and DP matches the brute-force oracle on random pairs") {
  std::mt19937 rng(13);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  for (int iter = 0; iter < 400; ++iter) {
    std::vector<std::string> a, b;
    std::size_t la = rng() % 11, lb = rng() % 11;
    for (std::size_t i = 0; i < la; ++i) a.push_back(alphabet[rng() % 3]);
    for (std::size_t i = 0; i < lb; ++i) b.push_back(alphabet[rng() % 3]);
    CHECK(lcs_length(a, b) == lcs_brute_force(a, b));
    if (!a.empty()) CHECK(rouge_l(a, a).f1 == 1.0);
  }
}

TEST_CASE("rouge text helpers share the engine tokenizer") {
  auto s = rouge_l_text("胡鄂，字卓庵。", "胡鄂，字卓庵。");
  CHECK(s.f1 == 1.0);
  CHECK(rouge_n_text("Hu E born 1630", "hu e BORN 1630", 1).f1 == 1.0);  // case folded
}

TEST_CASE("hallucination rate and atomic fact error") {
  std::vector<LabelEntry> labels;
  for (int i = 0; i < 28; ++i) {
    labels.push_back(LabelEntry{"f" + std::to_string(i), i < 11, 0});
  }
  CHECK(hallucination_rate(labels) == doctest::Approx(11.0 / 28.0));  // 0.3929
  CHECK(hallucination_rate({{"a", false, 0}}) == 0.0);
  CHECK(hallucination_rate({{"a", true, 0}}) == 1.0);
  CHECK_THROWS_AS((void)hallucination_rate({}), Error);

  CHECK(avg_atomic_fact_error({{"a", false, 0}, {"b", false, 1}, {"c", false, 2}}) ==
        doctest::Approx(1.0));
  CHECK(avg_atomic_fact_error({{"a", false, 3}}) == doctest::Approx(3.0));
  CHECK_THROWS_AS((void)avg_atomic_fact_error({}), Error);
}

TEST_CASE("label and gold file parsing") {
  TempDir tmp("eval");
  write_file(tmp / "labels.tsv", "# comment\nfig1\t1\t2\nfig2\t0\t0\n");
  auto labels = load_labels(tmp / "labels.tsv");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].has_hallucination);
  CHECK(labels[0].erroneous_atomic_facts == 2);

  write_file(tmp / "bad.tsv", "fig1\t2\t0\n");
  CHECK_THROWS_AS((void)load_labels(tmp / "bad.tsv"), Error);
  write_file(tmp / "neg.tsv", "fig1\t1\t-3\n");
  CHECK_THROWS_AS((void)load_labels(tmp / "neg.tsv"), Error);

  write_file(tmp / "gold.tsv", "A\tc1,c2\nB\tc3\n");
  auto gold = load_retrieval_gold(tmp / "gold.tsv");
  CHECK(gold.at("A") == std::set<std::string>{"c1", "c2"});
  write_file(tmp / "gold_empty.tsv", "A\t\n");
  CHECK_THROWS_AS((void)load_retrieval_gold(tmp / "gold_empty.tsv"), Error);
}

TEST_CASE("retrieval metrics: hand-counted cases") {
  RetrievalGold gold;
  gold["q"] = {"a", "c"};
  std::map<std::string, std::vector<std::string>> results;
  results["q"] = {"a", "b"};
  auto agg = retrieval_metrics(results, gold);
  CHECK(agg.precision == doctest::Approx(0.5));
  CHECK(agg.recall == doctest::Approx(0.5));
  CHECK(agg.f1 == doctest::Approx(0.5));
}

TEST_CASE("retrieval metrics: perfect retrieval scores 1.0 everywhere") {
  RetrievalGold gold;
  std::map<std::string, std::vector<std::string>> results;
  for (int i = 0; i < 5; ++i) {
    std::string q = "q" + std::to_string(i);
    gold[q] = {"c" + std::to_string(i)};
    results[q] = {"c" + std::to_string(i)};
  }
  auto agg = retrieval_metrics(results, gold);
  CHECK(agg.precision == 1.0);
  CHECK(agg.recall == 1.0);
  CHECK(agg.f1 == 1.0);
}

TEST_CASE("macro vs pooled F1: two queries at 1.0 and 0.0 average to 0.5") {
  RetrievalGold gold;
  gold["good"] = {"a"};
  gold["bad"] = {"b"};
  std::map<std::string, std::vector<std::string>> results;
  results["good"] = {"a"};
  results["bad"] = {"x"};
  auto agg = retrieval_metrics(results, gold);
  CHECK(agg.f1 == doctest::Approx(0.5));
  // pooled-harmonic reading would give 2*0.5*0.5/(0.5+0.5) = 0.5 only for
  // symmetric P/R; macro F1 is the mean of per-query F1 and need not equal
  // the harmonic mean of the macro P and macro R
  double pooled = 2 * agg.precision * agg.recall / (agg.precision + agg.recall);
  CHECK(agg.f1 == doctest::Approx(pooled));  // symmetric case coincides

  // asymmetric case where they differ
  gold.clear();
  results.clear();
  gold["q1"] = {"a"};
  results["q1"] = {"a", "b", "c", "d"};  // P 0.25, R 1, F1 0.4
  gold["q2"] = {"a", "b", "c", "d"};
  results["q2"] = {"a"};  // P 1, R 0.25, F1 0.4
  agg = retrieval_metrics(results, gold);
  CHECK(agg.f1 == doctest::Approx(0.4));
  pooled = 2 * agg.precision * agg.recall / (agg.precision + agg.recall);
  CHECK(agg.f1 < pooled);  // macro F1 below the harmonic mean of macro P/R
}

TEST_CASE("metric outputs bounded; macro F1 between per-query extremes") {
  std::mt19937 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    RetrievalGold gold;
    std::map<std::string, std::vector<std::string>> results;
    int queries = 1 + static_cast<int>(rng() % 5);
    for (int q = 0; q < queries; ++q) {
      std::string name = "q" + std::to_string(q);
      std::set<std::string> g;
      std::vector<std::string> r;
      int gn = 1 + static_cast<int>(rng() % 4);
      for (int i = 0; i < gn; ++i) g.insert("c" + std::to_string(rng() % 6));
      int rn = static_cast<int>(rng() % 5);
      for (int i = 0; i < rn; ++i) r.push_back("c" + std::to_string(rng() % 6));
      gold[name] = g;
      results[name] = r;
    }
    auto agg = retrieval_metrics(results, gold);
    double min_f1 = 1.0, max_f1 = 0.0;
    for (const auto& q : agg.per_query) {
      CHECK(q.precision >= 0.0);
      CHECK(q.precision <= 1.0);
      CHECK(q.recall >= 0.0);
      CHECK(q.recall <= 1.0);
      min_f1 = std::min(min_f1, q.f1);
      max_f1 = std::max(max_f1, q.f1);
    }
    CHECK(agg.f1 >= min_f1 - 1e-12);
    CHECK(agg.f1 <= max_f1 + 1e-12);
  }
}

TEST_SUITE_END();

#include <random>

#include "chronicler/errors.hpp"
#include "chronicler/verifier.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::make_chunk;

TEST_SUITE_BEGIN("verifier");

namespace {

PromptLibrary test_prompts() { return PromptLibrary(chronicler::testing::prompts_dir()); }

std::set<std::string> S(std::initializer_list<const char*> xs) {
  return std::set<std::string>(xs.begin(), xs.end());
}

}  // namespace

TEST_CASE("jaccard: hand-computed, identity, disjoint, empty") {
  CHECK(jaccard(S({"a", "b", "c"}), S({"b", "c", "d"})) == doctest::Approx(0.5));
  CHECK(jaccard(S({"x", "y"}), S({"x", "y"})) == 1.0);
  CHECK(jaccard(S({"x"}), S({"y"})) == 0.0);
  CHECK(jaccard({}, {}) == 0.0);
  CHECK(jaccard({}, S({"a"})) == 0.0);
}

TEST_CASE("jaccard laws over random token sets") {
  std::mt19937 rng(23);
  for (int iter = 0; iter < 2000; ++iter) {
    std::set<std::string> a, b;
    int na = static_cast<int>(rng() % 12), nb = static_cast<int>(rng() % 12);
    for (int i = 0; i < na; ++i) a.insert("t" + std::to_string(rng() % 16));
    for (int i = 0; i < nb; ++i) b.insert("t" + std::to_string(rng() % 16));
    double ab = jaccard(a, b);
    CHECK(ab == jaccard(b, a));  // symmetric
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!a.empty()) CHECK(jaccard(a, a) == 1.0);  // identity on non-empty
    if (ab == 1.0 && !a.empty()) CHECK(a == b);   // 1 exactly on equal sets
  }
}

TEST_CASE("filter_references: scores, floor, top-k") {
  AtomicFact fact{"alpha beta gamma", 0};
  // controlled overlap: tokens shared with the fact
  std::vector<Chunk> refs = {
      make_chunk("r#0", "alpha beta shared lots gamma"),  // high overlap
      make_chunk("r#1", "alpha unrelated filler words extra junk"),  // low
      make_chunk("r#2", "totally different content here"),           // zero
  };
  std::map<std::string, double> scores;
  auto kept = filter_references(fact, refs, 2, 0.1, &scores);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "r#0");
  CHECK(kept[1].id == "r#1");
  CHECK(scores.at("r#0") > scores.at("r#1"));
  CHECK(scores.at("r#2") == 0.0);
}

TEST_CASE("filter_references: all below floor keeps single best") {
  AtomicFact fact{"alpha", 0};
  std::vector<Chunk> refs = {
      make_chunk("r#0", "unrelated one"),
      make_chunk("r#1", "alpha plus many many other other tokens tokens here here now"),
      make_chunk("r#2", "unrelated two"),
  };
  auto kept = filter_references(fact, refs, 3, 0.9, nullptr);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "r#1");
}

TEST_CASE("filter_references: empty refs give empty output") {
  AtomicFact fact{"anything", 0};
  CHECK(filter_references(fact, {}, 3, 0.05).empty());
}

TEST_CASE("filter_references laws over random score configurations") {
  std::mt19937 rng(29);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int iter = 0; iter < 500; ++iter) {
    AtomicFact fact{"a b c", 0};
    std::vector<Chunk> refs;
    int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      std::string text;
      int len = 1 + static_cast<int>(rng() % 8);
      for (int j = 0; j < len; ++j) text += vocab[rng() % vocab.size()] + " ";
      refs.push_back(make_chunk("r#" + std::to_string(i), text));
    }
    std::size_t k = 1 + rng() % 4;
    double floor = (rng() % 100) / 100.0;
    auto kept = filter_references(fact, refs, k, floor, nullptr);
    CHECK(kept.size() <= std::max<std::size_t>(k, 1));
    CHECK(!kept.empty());  // safety net: always something to check against
    // output is a subsequence of the input
    std::size_t cursor = 0;
    for (const auto& c : kept) {
      while (cursor < refs.size() && refs[cursor].id != c.id) ++cursor;
      CHECK(cursor < refs.size());
      ++cursor;
    }
  }
}

TEST_CASE("verdict wire format parses and round trips") {
  AtomicFact fact{"born 1630", 0};
  std::vector<Chunk> refs = {make_chunk("c#0", "third year of Chongzhen (1630)"),
                             make_chunk("c#1", "another reference")};

  auto ok = parse_verdict("SUPPORTED\tc#0\tthird year of Chongzhen (1630)", fact, refs);
  REQUIRE(ok.has_value());
  CHECK(ok->status == VerdictStatus::Supported);
  REQUIRE(ok->evidence.size() == 1);
  CHECK(ok->evidence[0].chunk_id == "c#0");

  auto ni = parse_verdict("NOT_INCLUDED", fact, refs);
  REQUIRE(ni.has_value());
  CHECK(ni->status == VerdictStatus::NotIncluded);
  CHECK(ni->evidence.empty());

  auto ns = parse_verdict("NOT_SUPPORTED\tERA\tc#0\tthird year of Chongzhen (1630)", fact,
                          refs);
  REQUIRE(ns.has_value());
  CHECK(ns->status == VerdictStatus::NotSupported);
  CHECK(ns->subtype == ErrorSubtype::EraConflict);

  auto multi = parse_verdict(
      "NOT_SUPPORTED\tREF\tc#0\tyear A\nEVIDENCE\tc#1\tyear B", fact, refs);
  REQUIRE(multi.has_value());
  CHECK(multi->evidence.size() == 2);

  for (const auto& v : {*ok, *ni, *ns, *multi}) {
    auto reparsed = parse_verdict(format_verdict(v), fact, refs);
    REQUIRE(reparsed.has_value());
    CHECK(reparsed->status == v.status);
    CHECK(reparsed->evidence == v.evidence);
  }
}

TEST_CASE("verdict wire format rejects malformed lines") {
  AtomicFact fact{"f", 0};
  std::vector<Chunk> refs = {make_chunk("c#0", "text")};
  CHECK_FALSE(parse_verdict("MAYBE", fact, refs).has_value());
  CHECK_FALSE(parse_verdict("SUPPORTED", fact, refs).has_value());  // evidence required
  CHECK_FALSE(parse_verdict("SUPPORTED\tc#9\tsnippet", fact, refs).has_value());  // bad id
  CHECK_FALSE(parse_verdict("NOT_INCLUDED\tc#0\tx", fact, refs).has_value());
  CHECK_FALSE(parse_verdict("NOT_SUPPORTED\tBOGUS", fact, refs).has_value());
  CHECK_FALSE(parse_verdict("NOT_SUPPORTED", fact, refs).has_value());
  CHECK_FALSE(parse_verdict("", fact, refs).has_value());
}

TEST_CASE("decompose: one fact per line with whole-sentence fallback") {
  auto prompts = test_prompts();
  {
    MockScript script;
    script.entries.push_back(MockEntry{
        "decompose", "Born in 1630.\nA native of Yuyao.", false, "", FinishReason::Stop});
    MockGateway gw(script);
    auto facts = decompose_atomic_facts("Born in 1630, native of Yuyao.", 4, gw, prompts);
    REQUIRE(facts.size() == 2);
    CHECK(facts[0].text == "Born in 1630.");
    CHECK(facts[0].sentence_index == 4);
  }
  {
    MockScript script;
    script.entries.push_back(MockEntry{"decompose", "\n\n", false, "", FinishReason::Stop});
    MockGateway gw(script);
    auto facts = decompose_atomic_facts("Whole sentence.", 0, gw, prompts);
    REQUIRE(facts.size() == 1);
    CHECK(facts[0].text == "Whole sentence.");
  }
  {
    MockScript script;
    for (int i = 0; i < 3; ++i) {
      script.entries.push_back(
          MockEntry{"decompose", "", false, "timeout", FinishReason::Stop});
    }
    MockGateway gw(script, 2);
    auto facts = decompose_atomic_facts("Whole sentence.", 0, gw, prompts);
    REQUIRE(facts.size() == 1);  // gateway failure never blocks the pipeline
  }
}

TEST_CASE("check_support: scripted verdicts for the Table-3 era case") {
  auto prompts = test_prompts();
  std::vector<Chunk> refs = {
      make_chunk("c#0", "Born in the third year of Chongzhen (1630), native of Yuyao.")};
  {
    MockScript script;
    script.entries.push_back(MockEntry{
        "verify", "SUPPORTED\tc#0\tthird year of Chongzhen (1630)", false, "",
        FinishReason::Stop});
    MockGateway gw(script);
    auto v = check_support(AtomicFact{"born 1630", 0}, refs, gw, prompts);
    CHECK(v.status == VerdictStatus::Supported);
    REQUIRE_FALSE(v.evidence.empty());
    CHECK(v.evidence[0].snippet == "third year of Chongzhen (1630)");
  }
  {
    MockScript script;
    script.entries.push_back(MockEntry{
        "verify", "NOT_SUPPORTED\tERA\tc#0\tthird year of Chongzhen (1630)", false, "",
        FinishReason::Stop});
    MockGateway gw(script);
    auto v = check_support(AtomicFact{"born 1632", 0}, refs, gw, prompts);
    CHECK(v.status == VerdictStatus::NotSupported);
    CHECK(v.subtype == ErrorSubtype::EraConflict);
  }
}

TEST_CASE("check_support: empty refs short-circuit without a gateway call") {
  auto prompts = test_prompts();
  MockGateway gw(MockScript{});  // any call would throw: script is empty
  auto v = check_support(AtomicFact{"fact", 0}, {}, gw, prompts);
  CHECK(v.status == VerdictStatus::NotIncluded);
  CHECK(gw.calls_made() == 0);
}

TEST_CASE("check_support: malformed verdicts retried then NotSupported(Other)") {
  auto prompts = test_prompts();
  std::vector<Chunk> refs = {make_chunk("c#0", "reference text")};
  MockScript script;
  script.entries.push_back(MockEntry{"verify", "gibberish", false, "", FinishReason::Stop});
  script.entries.push_back(MockEntry{"verify", "more gibberish", false, "", FinishReason::Stop});
  MockGateway gw(script);
  auto v = check_support(AtomicFact{"fact", 0}, refs, gw, prompts, 1);
  CHECK(v.status == VerdictStatus::NotSupported);
  CHECK(v.subtype == ErrorSubtype::Other);
  CHECK(v.low_confidence);
  CHECK(v.raw_response == "more gibberish");
  CHECK(gw.calls_made() == 2);  // retry budget 1 -> two attempts
}

TEST_SUITE_END();

#include "chronicler/errors.hpp"
#include "chronicler/extraction.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::make_chunk;

TEST_SUITE_BEGIN("extraction");

namespace {

constexpr std::uint64_t kBudget = 2'000'000;

// The book-series introduction pattern (transliterated form).
const char* kPattern = R"((\S+), styled (\S+), nicknamed (\S+))";
const std::vector<std::string> kRoles = {"name", "styled_name", "nickname"};

PromptLibrary test_prompts() { return PromptLibrary(chronicler::testing::prompts_dir()); }

RegexGenOptions gen_options() {
  RegexGenOptions o;
  ExtractionDemo d;
  d.excerpt = "Ax, styled Bx, nicknamed Cx";
  d.pattern = kPattern;
  d.roles = kRoles;
  o.demonstrations.push_back(d);
  o.retry_budget = 2;
  return o;
}

}  // namespace

TEST_CASE("validate_regex accepts the writing-pattern regex on a matching chunk") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan, nicknamed Donglin, a native of Yuyao.");
  ExtractionRegex r{kPattern, kRoles, ExtractionRegex::Origin::LlmGenerated};
  auto v = validate_regex(r, chunk, kBudget);
  CHECK(v.accepted);
}

TEST_CASE("validate_regex rejections carry reasons") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan, nicknamed Donglin");
  CHECK_FALSE(validate_regex({"(", {"x"}, {}}, chunk, kBudget).accepted);
  CHECK_FALSE(validate_regex({"(\\S+), styled (\\S+)", kRoles, {}}, chunk, kBudget)
                  .accepted);  // 2 groups, 3 roles
  CHECK_FALSE(validate_regex({"zzz(q)", {"q"}, {}}, chunk, kBudget).accepted);  // no match
  CHECK_FALSE(validate_regex({"\\S+", {}, {}}, chunk, kBudget).accepted);  // no groups
}

TEST_CASE("apply_regex yields head-centred triples, trimmed, empties dropped") {
  auto chunk = make_chunk("c#0", "胡鄂，字卓庵，号东林。");
  ExtractionRegex r{R"((\S+)，字(\S+)，号(\S+)。)", kRoles, {}};
  auto triples = apply_regex(r, chunk, "name", kBudget);
  REQUIRE(triples.size() == 2);
  CHECK(triples[0] == Triple{"胡鄂", "styled_name", "卓庵", "c#0",
                             Triple::Provenance::Regex});
  CHECK(triples[1] == Triple{"胡鄂", "nickname", "东林", "c#0",
                             Triple::Provenance::Regex});
}

TEST_CASE("apply_regex: two entries in one chunk yield triples for both heads") {
  auto chunk = make_chunk(
      "c#0",
      "Ax, styled Bx, nicknamed Cx. Filler words. Dy, styled Ey, nicknamed Fy. Tail.");
  ExtractionRegex r{kPattern, kRoles, {}};
  auto triples = apply_regex(r, chunk, "", kBudget);  // default head role = first
  REQUIRE(triples.size() == 4);
  CHECK(triples[0].head == "Ax");
  CHECK(triples[1].head == "Ax");
  CHECK(triples[2].head == "Dy");
  CHECK(triples[3].head == "Dy");
  CHECK(triples[2].tail == "Ey");
}

TEST_CASE("apply_regex: empty capture omits that triple") {
  auto chunk = make_chunk("c#0", "Ax, styled , nicknamed Cx");
  ExtractionRegex r{R"((\S+), styled (.*?), nicknamed (\S+))", kRoles, {}};
  auto triples = apply_regex(r, chunk, "", kBudget);
  REQUIRE(triples.size() == 1);
  CHECK(triples[0].relation == "nickname");
}

TEST_CASE("generate_regex: valid scripted pattern accepted with roles") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan, nicknamed Donglin");
  MockScript script;
  script.entries.push_back(
      MockEntry{"regex", std::string(kPattern) + "\nname\tstyled_name\tnickname", false, "",
                FinishReason::Stop});
  MockGateway gw(script);
  auto prompts = test_prompts();
  auto r = generate_regex(chunk, gen_options(), gw, prompts);
  REQUIRE(r.has_value());
  CHECK(r->pattern == kPattern);
  CHECK(r->capture_roles == kRoles);
  CHECK(r->origin == ExtractionRegex::Origin::LlmGenerated);
}

TEST_CASE("generate_regex: non-compiling replies exhaust retries into the sentinel") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan");
  MockScript script;
  for (int i = 0; i < 3; ++i) {
    script.entries.push_back(MockEntry{"regex", "(((\nname", false, "", FinishReason::Stop});
  }
  MockGateway gw(script);
  auto prompts = test_prompts();
  CHECK_FALSE(generate_regex(chunk, gen_options(), gw, prompts).has_value());
}

TEST_CASE("generate_regex: arity mismatch rejected then a good retry wins") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan, nicknamed Donglin");
  MockScript script;
  script.entries.push_back(MockEntry{
      "regex", "(\\S+), styled (\\S+)\nname\tstyled_name\tnickname", false, "",
      FinishReason::Stop});  // 2 groups, 3 roles
  script.entries.push_back(
      MockEntry{"regex", std::string(kPattern) + "\nname\tstyled_name\tnickname", false, "",
                FinishReason::Stop});
  MockGateway gw(script);
  auto prompts = test_prompts();
  auto r = generate_regex(chunk, gen_options(), gw, prompts);
  REQUIRE(r.has_value());
  CHECK(r->capture_roles.size() == 3);
}

TEST_CASE("generate_regex: gateway failure returns the sentinel, never throws") {
  auto chunk = make_chunk("c#0", "text");
  MockScript script;
  for (int i = 0; i < 12; ++i) {
    script.entries.push_back(MockEntry{"regex", "", false, "timeout", FinishReason::Stop});
  }
  MockGateway gw(script, 1);
  auto prompts = test_prompts();
  CHECK_FALSE(generate_regex(chunk, gen_options(), gw, prompts).has_value());
}

TEST_CASE("extract_direct parses tab-separated lines and counts drops") {
  auto chunk = make_chunk("c#0", "irrelevant");
  MockScript script;
  script.entries.push_back(MockEntry{
      "extract", "HuE\tstyled_name\tZhuoan\nmalformed line\nHuE\thometown\tYuyao", false, "",
      FinishReason::Stop});
  MockGateway gw(script);
  auto prompts = test_prompts();
  auto out = extract_direct(chunk, gw, prompts);
  REQUIRE(out.triples.size() == 2);
  CHECK(out.dropped_lines == 1);
  CHECK(out.triples[0].provenance == Triple::Provenance::LlmDirect);
  CHECK(out.triples[0].chunk_id == "c#0");
}

TEST_CASE("extract_direct: exhausted gateway raises ExtractionFailed") {
  auto chunk = make_chunk("c#0", "irrelevant");
  MockScript script;
  for (int i = 0; i < 3; ++i) {
    script.entries.push_back(MockEntry{"extract", "", false, "timeout", FinishReason::Stop});
  }
  MockGateway gw(script, 2);
  auto prompts = test_prompts();
  try {
    (void)extract_direct(chunk, gw, prompts);
    FAIL("expected ExtractionFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ExtractionFailed);
  }
}

TEST_CASE("regex/plan-B equivalence on pattern-conforming text") {
  auto chunk = make_chunk("c#0", "HuE, styled Zhuoan, nicknamed Donglin");
  ExtractionRegex r{kPattern, kRoles, {}};
  auto via_regex = apply_regex(r, chunk, "name", kBudget);

  MockScript script;
  script.entries.push_back(MockEntry{
      "extract", "HuE\tstyled_name\tZhuoan\nHuE\tnickname\tDonglin", false, "",
      FinishReason::Stop});
  MockGateway gw(script);
  auto prompts = test_prompts();
  auto via_llm = extract_direct(chunk, gw, prompts);

  REQUIRE(via_regex.size() == via_llm.triples.size());
  for (std::size_t i = 0; i < via_regex.size(); ++i) {
    CHECK(via_regex[i].head == via_llm.triples[i].head);
    CHECK(via_regex[i].relation == via_llm.triples[i].relation);
    CHECK(via_regex[i].tail == via_llm.triples[i].tail);
  }
}

TEST_CASE("shape cache groups near-identical chunks") {
  std::string a = "Ax, styled Bx, nicknamed Cx, a native of Px.";
  std::string b = "Dyy, styled Eyy, nicknamed Fyy, a native of Qyy.";
  std::string c = "Completely different structure: no pattern here";
  CHECK(pattern_shape_key(a) == pattern_shape_key(b));
  CHECK(pattern_shape_key(a) != pattern_shape_key(c));

  RegexCache cache;
  CHECK_FALSE(cache.get(pattern_shape_key(a)).has_value());
  cache.put(pattern_shape_key(a), ExtractionRegex{kPattern, kRoles, {}});
  CHECK(cache.get(pattern_shape_key(b)).has_value());
  CHECK(cache.size() == 1);
}

TEST_SUITE_END();

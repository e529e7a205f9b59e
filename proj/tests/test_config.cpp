#include "chronicler/config.hpp"
#include "chronicler/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::TempDir;

TEST_SUITE_BEGIN("config");

namespace {

const char* kSample = R"(# sample
[paths]
corpus_root = corpus
index_path = out/index.kg

[chunking]
pattern = entries start with the name, then the alias
demo.1.excerpt = A, styled B. C, styled D.
demo.1.boundaries = 0, 13
retry_budget = 2

[verifier]
top_k = 3
floor = 0.05
)";

}  // namespace

TEST_CASE("ini parse and lossless round trip") {
  IniDoc doc = IniDoc::parse(kSample);
  CHECK(doc.get("chunking", "retry_budget", "") == "2");
  CHECK(doc.get("missing", "key", "fallback") == "fallback");
  IniDoc again = IniDoc::parse(doc.serialize());
  CHECK(doc == again);
  IniDoc third = IniDoc::parse(again.serialize());
  CHECK(again == third);
}

TEST_CASE("ini escapes survive round trip") {
  IniDoc doc;
  doc.set("chunking", "demo.1.excerpt", "line one\nline two\twith tab\\end");
  IniDoc again = IniDoc::parse(doc.serialize());
  CHECK(doc == again);
  CHECK(again.get("chunking", "demo.1.excerpt", "") == "line one\nline two\twith tab\\end");
}

TEST_CASE("ini rejects malformed input") {
  CHECK_THROWS_AS((void)IniDoc::parse("[unterminated\nkey = v\n"), Error);
  CHECK_THROWS_AS((void)IniDoc::parse("key_outside = 1\n"), Error);
  CHECK_THROWS_AS((void)IniDoc::parse("[s]\nnot_an_assignment\n"), Error);
}

TEST_CASE("runconfig parses sections, demos and budgets") {
  RunConfig c = RunConfig::from_ini(IniDoc::parse(kSample));
  CHECK(c.corpus_root == "corpus");
  CHECK(c.chunk_retry == 2);
  REQUIRE(c.chunk_demos.size() == 1);
  CHECK(c.chunk_demos[0].boundaries == std::vector<std::uint32_t>{0, 13});
  CHECK(c.filter_top_k == 3);
  CHECK(c.filter_floor == doctest::Approx(0.05));
}

TEST_CASE("runconfig rejects unknown keys and bad values") {
  CHECK_THROWS_AS((void)RunConfig::from_ini(IniDoc::parse("[paths]\ntypo_key = x\n")), Error);
  CHECK_THROWS_AS((void)RunConfig::from_ini(IniDoc::parse("[verifier]\ntop_k = zero\n")),
                  Error);
  CHECK_THROWS_AS(
      (void)RunConfig::from_ini(IniDoc::parse("[solver]\nregen_attempts = -1\n")), Error);
  CHECK_THROWS_AS((void)RunConfig::from_ini(IniDoc::parse("[verifier]\nfloor = 1.5\n")),
                  Error);
  CHECK_THROWS_AS((void)RunConfig::from_ini(IniDoc::parse("[gateway]\nmode = carrier\n")),
                  Error);
}

TEST_CASE("runconfig to_ini round trips through from_ini") {
  RunConfig c = RunConfig::from_ini(IniDoc::parse(kSample));
  RunConfig again = RunConfig::from_ini(c.to_ini());
  CHECK(again.to_ini().serialize() == c.to_ini().serialize());
}

TEST_CASE("config paths validated at load") {
  TempDir tmp("cfg");
  RunConfig c;
  c.corpus_root = tmp / "missing_corpus";
  c.era_table = tmp / "missing_table";
  CHECK_THROWS_AS(c.validate_paths(true, false), Error);
}

TEST_SUITE_END();

#include "chronicler/errors.hpp"
#include "chronicler/indexer.hpp"
#include "chronicler/text.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::TempDir;
using chronicler::testing::write_file;

TEST_SUITE_BEGIN("indexer");

namespace {

const char* kEntryPattern = R"((\S+), styled (\S+), a native of (\S+)\.)";

RunConfig base_config(const TempDir& tmp) {
  RunConfig c;
  c.corpus_root = tmp / "corpus";
  c.prompts_dir = chronicler::testing::prompts_dir();
  c.era_table = chronicler::testing::data_dir() / "era_table.tsv";
  ChunkDemo demo;
  demo.excerpt = "Ax, styled Bx, a native of Px.";
  demo.boundaries = {0};
  c.chunk_demos.push_back(demo);
  ExtractionDemo xdemo;
  xdemo.excerpt = demo.excerpt;
  xdemo.pattern = kEntryPattern;
  xdemo.roles = {"name", "styled_name", "hometown"};
  c.extraction_demos.push_back(xdemo);
  c.fallback_regex = R"(\S+, styled )";
  return c;
}

MockScript index_script(std::vector<std::string> chunk_replies) {
  MockScript script;
  for (auto& r : chunk_replies) {
    MockEntry e;
    e.tag = "chunk";
    e.content = std::move(r);
    script.entries.push_back(std::move(e));
  }
  MockEntry regex;
  regex.tag = "regex";
  regex.sticky = true;
  regex.content = std::string(kEntryPattern) + "\nname\tstyled_name\thometown";
  script.entries.push_back(std::move(regex));
  MockEntry extract;
  extract.tag = "extract";
  extract.sticky = true;
  extract.content = "";
  script.entries.push_back(std::move(extract));
  return script;
}

}  // namespace

TEST_CASE("end-to-end index build over a two-volume corpus") {
  TempDir tmp("indexer");
  std::string va_e0 = "Anwei, styled Zhongmu, a native of Yuyao. Studied the classics.";
  std::string va_e1 = "Borong, styled Jixuan, a native of Shanyin. Served as registrar.";
  std::string vb_e0 = "Cihan, styled Wenbo, a native of Yuyao. Compiled the gazetteer.";
  write_file(tmp / "corpus" / "va.txt", va_e0 + "\n" + va_e1);
  write_file(tmp / "corpus" / "vb.txt", vb_e0);

  RunConfig config = base_config(tmp);
  std::string b1 = std::to_string(utf8_length(va_e0 + "\n"));
  MockGateway gw(index_script({"0\n" + b1, "0"}));
  PromptLibrary prompts(config.prompts_dir);
  IndexBuildReport report;
  KnowledgeGraph graph = build_index(config, gw, prompts, &report);

  CHECK(report.documents == 2);
  CHECK(report.chunks == 3);
  CHECK(report.llm_chunked_docs == 2);
  CHECK(report.regex_chunks == 3);
  CHECK(report.planb_chunks == 0);
  CHECK(report.regex_ratio() == 1.0);
  CHECK(report.cache_hits >= 1);  // same-shaped entries reuse the regex
  CHECK(report.triples == 6);

  auto anwei = graph.lookup("Anwei");
  REQUIRE(anwei.has_value());
  CHECK(graph.node(*anwei).aliases == std::vector<std::string>{"Zhongmu"});
  // shared hometown connects figures across volumes
  auto r = graph.retrieve("Anwei", 1);
  bool reaches_cihan = false;
  for (const auto& c : r.chunks) reaches_cihan |= c.id == "vb#0";
  CHECK(reaches_cihan);
  // alias lookup
  CHECK(graph.lookup("Jixuan") == graph.lookup("Borong"));
}

TEST_CASE("distractor documents fall through to empty plan B and become orphans") {
  TempDir tmp("indexer2");
  write_file(tmp / "corpus" / "da.txt",
             "The gazetteer records grain shipments along the canal.");
  write_file(tmp / "corpus" / "va.txt", "Anwei, styled Zhongmu, a native of Yuyao.");
  RunConfig config = base_config(tmp);
  MockGateway gw(index_script({"0", "0"}));
  PromptLibrary prompts(config.prompts_dir);
  IndexBuildReport report;
  KnowledgeGraph graph = build_index(config, gw, prompts, &report);
  CHECK(report.planb_chunks == 1);   // distractor: regex rejected, plan B empty
  CHECK(report.regex_chunks == 1);
  CHECK(graph.orphan_chunks() == std::vector<std::string>{"da#0"});
}

TEST_CASE("preamble chunks are skipped by extraction and land in orphans") {
  TempDir tmp("indexer3");
  write_file(tmp / "corpus" / "va.txt",
             "Volume three, compiled 1701.\nAnwei, styled Zhongmu, a native of Yuyao.");
  RunConfig config = base_config(tmp);
  std::string b = std::to_string(utf8_length("Volume three, compiled 1701.\n"));
  MockGateway gw(index_script({b}));  // first boundary > 0 -> preamble chunk
  PromptLibrary prompts(config.prompts_dir);
  IndexBuildReport report;
  KnowledgeGraph graph = build_index(config, gw, prompts, &report);
  CHECK(report.preamble_chunks == 1);
  CHECK(report.chunks == 2);
  REQUIRE(graph.orphan_chunks().size() == 1);
  CHECK(graph.orphan_chunks()[0] == "va#0");
  // only the entry chunk consumed extraction traffic
  CHECK(report.regex_chunks == 1);
}

TEST_CASE("rebuild over an unchanged corpus is byte-identical") {
  TempDir tmp("indexer4");
  write_file(tmp / "corpus" / "va.txt", "Anwei, styled Zhongmu, a native of Yuyao.");
  RunConfig config = base_config(tmp);
  PromptLibrary prompts(config.prompts_dir);

  MockGateway gw1(index_script({"0"}));
  KnowledgeGraph g1 = build_index(config, gw1, prompts);
  g1.save_file(tmp / "index1.kg");
  MockGateway gw2(index_script({"0"}));
  KnowledgeGraph g2 = build_index(config, gw2, prompts);
  g2.save_file(tmp / "index2.kg");
  CHECK(chronicler::testing::read_file(tmp / "index1.kg") ==
        chronicler::testing::read_file(tmp / "index2.kg"));
}

TEST_SUITE_END();

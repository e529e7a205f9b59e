#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/graph.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::make_chunk;

TEST_SUITE_BEGIN("graph");

namespace {

Triple triple(const std::string& h, const std::string& r, const std::string& t,
              const std::string& chunk) {
  return Triple{h, r, t, chunk, Triple::Provenance::Regex};
}

// The running fixture: one figure whose entry yields an alias triple.
struct HuEFixture {
  std::vector<Chunk> chunks;
  std::vector<Triple> triples;
  HuEFixture() {
    chunks.push_back(make_chunk("doc#0", "Hu E, styled Zhuo'an, a native of Yuyao."));
    triples.push_back(triple("Hu E", "styled_name", "Zhuo'an", "doc#0"));
  }
};

}  // namespace

TEST_CASE("build: alias folded into the head node, edge created, index resolves both") {
  HuEFixture fx;
  BuildReport report;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks, {}, &report);
  REQUIRE(g.nodes().size() == 1);
  const EntityNode& node = g.nodes()[0];
  CHECK(node.canonical_name == "Hu E");
  CHECK(node.aliases == std::vector<std::string>{"Zhuo'an"});
  CHECK(node.chunk_ids == std::vector<std::string>{"doc#0"});
  CHECK(g.edges().size() == 1);
  CHECK(g.edges()[0].relation == "styled_name");
  CHECK(g.lookup("Hu E") == node.id);
  CHECK(g.lookup("Zhuo'an") == node.id);
  CHECK(g.lookup("hu e") == node.id);  // normalized
  CHECK_FALSE(g.lookup("Nobody").has_value());
  CHECK(report.node_count == 1);
  CHECK(report.orphan_count == 0);
}

TEST_CASE("build: empty triple list leaves only orphans") {
  std::vector<Chunk> chunks = {make_chunk("a#0", "x"), make_chunk("a#1", "y"),
                               make_chunk("b#0", "z")};
  auto g = KnowledgeGraph::build({}, chunks);
  CHECK(g.nodes().empty());
  CHECK(g.orphan_chunks().size() == 3);
}

TEST_CASE("build: two heads sharing a chunk both link it") {
  std::vector<Chunk> chunks = {make_chunk("a#0", "X and Y studied together in Yuyao.")};
  std::vector<Triple> triples = {triple("X", "hometown", "Yuyao", "a#0"),
                                 triple("Y", "hometown", "Yuyao", "a#0")};
  auto g = KnowledgeGraph::build(triples, chunks);
  auto x = g.lookup("X");
  auto y = g.lookup("Y");
  REQUIRE(x.has_value());
  REQUIRE(y.has_value());
  CHECK(g.node(*x).chunk_ids == std::vector<std::string>{"a#0"});
  CHECK(g.node(*y).chunk_ids == std::vector<std::string>{"a#0"});
  // shared tail node "Yuyao" connects them
  auto yuyao = g.lookup("Yuyao");
  REQUIRE(yuyao.has_value());
  CHECK(g.node(*yuyao).chunk_ids == std::vector<std::string>{"a#0"});
}

TEST_CASE("build: triple referencing an unknown chunk is rejected") {
  CHECK_THROWS_AS(
      (void)KnowledgeGraph::build({triple("A", "r", "B", "nowhere#0")}, {}), Error);
}

TEST_CASE("homonyms: same name, different documents, disagreeing discriminator split") {
  std::vector<Chunk> chunks = {
      make_chunk("va#0", "Wang Li, a native of Yuyao."),
      make_chunk("vb#0", "Wang Li, a native of Shanyin."),
  };
  std::vector<Triple> triples = {triple("Wang Li", "hometown", "Yuyao", "va#0"),
                                 triple("Wang Li", "hometown", "Shanyin", "vb#0")};
  BuildReport report;
  auto g = KnowledgeGraph::build(triples, chunks, {}, &report);
  // two person nodes plus two hometown tail nodes
  int wang_nodes = 0;
  for (const auto& n : g.nodes()) {
    if (n.canonical_name == "Wang Li") ++wang_nodes;
  }
  CHECK(wang_nodes == 2);
  REQUIRE(report.collisions.size() == 1);
  CHECK(report.collisions[0].action == "split");
  // lookup is now ambiguous
  CHECK_THROWS_AS((void)g.lookup("Wang Li"), Error);
}

TEST_CASE("homonyms: same discriminator merges, collision logged") {
  std::vector<Chunk> chunks = {
      make_chunk("va#0", "Wang Li, a native of Yuyao."),
      make_chunk("vb#0", "Wang Li, a native of Yuyao, later judge."),
  };
  std::vector<Triple> triples = {triple("Wang Li", "hometown", "Yuyao", "va#0"),
                                 triple("Wang Li", "hometown", "Yuyao", "vb#0")};
  BuildReport report;
  auto g = KnowledgeGraph::build(triples, chunks, {}, &report);
  auto id = g.lookup("Wang Li");
  REQUIRE(id.has_value());
  CHECK(g.node(*id).chunk_ids == std::vector<std::string>{"va#0", "vb#0"});
  REQUIRE(report.collisions.size() == 1);
  CHECK(report.collisions[0].action == "merged");
}

TEST_CASE("ambiguous alias raises with candidates") {
  std::vector<Chunk> chunks = {make_chunk("a#0", "P one, styled Tong."),
                               make_chunk("b#0", "Q two, styled Tong.")};
  std::vector<Triple> triples = {triple("Pone", "styled_name", "Tong", "a#0"),
                                 triple("Qtwo", "styled_name", "Tong", "b#0")};
  auto g = KnowledgeGraph::build(triples, chunks);
  try {
    (void)g.lookup("Tong");
    FAIL("expected Ambiguous");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Ambiguous);
    CHECK(e.candidates().size() == 2);
  }
}

TEST_CASE("retrieve: hops=0 returns exactly the node's own chunks") {
  HuEFixture fx;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  auto r = g.retrieve("Hu E", 0);
  CHECK(r.match == MatchKind::Canonical);
  REQUIRE(r.chunks.size() == 1);
  CHECK(r.chunks[0].id == "doc#0");
  CHECK(r.neighbor_nodes.empty());

  auto via_alias = g.retrieve("Zhuo'an", 0);
  CHECK(via_alias.match == MatchKind::Alias);
  CHECK(via_alias.chunks.size() == 1);
}

TEST_CASE("retrieve: star graph expands breadth-first with id tie-break") {
  // center C with neighbors N1..N3, each in its own chunk
  std::vector<Chunk> chunks = {
      make_chunk("c#0", "C knew N1."), make_chunk("c#1", "C knew N2."),
      make_chunk("c#2", "C knew N3."),
  };
  std::vector<Triple> triples = {
      triple("C", "knew", "N1", "c#0"),
      triple("C", "knew", "N2", "c#1"),
      triple("C", "knew", "N3", "c#2"),
  };
  auto g = KnowledgeGraph::build(triples, chunks);
  auto r = g.retrieve("C", 1);
  // center's chunks first (all three, in link order), neighbors add nothing new
  REQUIRE(r.chunks.size() == 3);
  CHECK(r.chunks[0].id == "c#0");
  CHECK(r.chunks[1].id == "c#1");
  CHECK(r.chunks[2].id == "c#2");
  CHECK(r.neighbor_nodes.size() == 3);
  CHECK(std::is_sorted(r.neighbor_nodes.begin(), r.neighbor_nodes.end()));
}

TEST_CASE("retrieve: absent name gives empty result with match none") {
  HuEFixture fx;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  auto r = g.retrieve("Unknown", 1);
  CHECK(r.match == MatchKind::None);
  CHECK(r.chunks.empty());
  CHECK_FALSE(r.matched_node.has_value());
}

TEST_CASE("retrieve: hops=k chunks are a prefix-preserving superset of k-1") {
  // chain A - B - C through shared places
  std::vector<Chunk> chunks = {
      make_chunk("a#0", "A of P1."), make_chunk("b#0", "B of P1 and P2."),
      make_chunk("d#0", "D of P2."),
  };
  std::vector<Triple> triples = {
      triple("A", "hometown", "P1", "a#0"), triple("B", "hometown", "P1", "b#0"),
      triple("B", "hometown", "P2", "b#0"), triple("D", "hometown", "P2", "d#0"),
  };
  auto g = KnowledgeGraph::build(triples, chunks);
  for (int k = 1; k <= 4; ++k) {
    auto prev = g.retrieve("A", k - 1);
    auto cur = g.retrieve("A", k);
    REQUIRE(cur.chunks.size() >= prev.chunks.size());
    for (std::size_t i = 0; i < prev.chunks.size(); ++i) {
      CHECK(cur.chunks[i].id == prev.chunks[i].id);  // prefix order preserved
    }
  }
  // D's chunk is reached through P1 -> B -> P2
  auto far = g.retrieve("A", 4);
  bool has_d = false;
  for (const auto& c : far.chunks) has_d |= c.id == "d#0";
  CHECK(has_d);
}

TEST_CASE("navigability: every linked chunk contains the node's name or an alias") {
  HuEFixture fx;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  for (const auto& n : g.nodes()) {
    for (const auto& cid : n.chunk_ids) {
      const Chunk* c = g.find_chunk(cid);
      REQUIRE(c != nullptr);
      bool contains = c->text.find(n.canonical_name) != std::string::npos;
      for (const auto& a : n.aliases) {
        contains = contains || c->text.find(a) != std::string::npos;
      }
      CHECK_MESSAGE(contains, "node ", n.canonical_name, " chunk ", cid);
    }
  }
}

TEST_CASE("save/load: structural round trip") {
  HuEFixture fx;
  fx.chunks.push_back(make_chunk("doc#1", "An orphan chunk with no triples."));
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  std::ostringstream out;
  g.save(out);
  std::istringstream in(out.str());
  auto loaded = KnowledgeGraph::load(in);
  CHECK(g.structurally_equal(loaded));
  CHECK(loaded.orphan_chunks() == std::vector<std::string>{"doc#1"});
  // byte-identical second save
  std::ostringstream out2;
  loaded.save(out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("load: truncated file is CorruptIndex") {
  HuEFixture fx;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  std::ostringstream out;
  g.save(out);
  std::string full = out.str();
  std::string truncated = full.substr(0, full.size() / 2);
  std::istringstream in(truncated);
  try {
    (void)KnowledgeGraph::load(in);
    FAIL("expected CorruptIndex");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptIndex);
  }
}

TEST_CASE("load: tampered byte fails the checksum") {
  HuEFixture fx;
  auto g = KnowledgeGraph::build(fx.triples, fx.chunks);
  std::ostringstream out;
  g.save(out);
  std::string bytes = out.str();
  auto pos = bytes.find("Hu E");
  bytes[pos] = 'X';
  std::istringstream in(bytes);
  CHECK_THROWS_AS((void)KnowledgeGraph::load(in), Error);
}

TEST_CASE("load: future version is UnsupportedVersion") {
  std::istringstream in("chronicler-index\t99\nchecksum\t0\t0\n");
  try {
    (void)KnowledgeGraph::load(in);
    FAIL("expected UnsupportedVersion");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedVersion);
  }
}

TEST_CASE("load: garbage is CorruptIndex") {
  std::istringstream in("not an index at all\n");
  try {
    (void)KnowledgeGraph::load(in);
    FAIL("expected CorruptIndex");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptIndex);
  }
}

TEST_SUITE_END();

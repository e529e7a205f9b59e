#include "chronicler/errors.hpp"
#include "chronicler/remediation.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace chronicler;
using chronicler::testing::TempDir;
using chronicler::testing::write_file;

TEST_SUITE_BEGIN("remediation");

namespace {

const EraTable& table() {
  static EraTable t = EraTable::load(chronicler::testing::data_dir() / "era_table.tsv");
  return t;
}

PromptLibrary test_prompts() { return PromptLibrary(chronicler::testing::prompts_dir()); }

Verdict not_supported(ErrorSubtype subtype, std::vector<EvidenceItem> evidence = {}) {
  Verdict v;
  v.fact = AtomicFact{"fact", 0};
  v.status = VerdictStatus::NotSupported;
  v.subtype = subtype;
  v.evidence = std::move(evidence);
  return v;
}

}  // namespace

TEST_CASE("router: totality over non-supported verdicts") {
  Verdict ni;
  ni.status = VerdictStatus::NotIncluded;
  CHECK(route(ni) == SolverKind::Regenerator);
  CHECK(route(not_supported(ErrorSubtype::EraConflict)) == SolverKind::Era);
  CHECK(route(not_supported(ErrorSubtype::RefConflict)) == SolverKind::RefConflict);
  CHECK(route(not_supported(ErrorSubtype::KnowledgeLack)) == SolverKind::Knowledge);
  CHECK(route(not_supported(ErrorSubtype::AliasConflict)) == SolverKind::Alias);
  CHECK(route(not_supported(ErrorSubtype::Other)) == SolverKind::Generic);
  Verdict supported;
  supported.status = VerdictStatus::Supported;
  CHECK_THROWS_AS((void)route(supported), Error);  // precondition violation
}

TEST_CASE("era solver: Table-3 case, wrong year rewritten from evidence") {
  std::string sentence =
      "He was born on the thirteenth day of the second month in the fifth year of "
      "Chongzhen (1632).";
  AtomicFact fact{"born in the fifth year of Chongzhen (1632)", 0};
  std::vector<EvidenceItem> evidence = {
      {"c#0", "Born in the third year of Chongzhen (1630) of the Ming dynasty."}};
  auto r = solve_era_conflict(fact, sentence, evidence, table());
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(r->solver == SolverKind::Era);
  CHECK(r->text.find("third year of Chongzhen") != std::string::npos);
  CHECK(r->text.find("(1630)") != std::string::npos);
  CHECK(r->text.find("1632") == std::string::npos);
  CHECK(r->text.find("fifth year") == std::string::npos);
}

TEST_CASE("era solver: CJK sentence rewritten in place") {
  std::string sentence = "明崇祯五年（1632）二月十三日生，浙江余姚县人。";
  AtomicFact fact{"崇祯五年（1632）生", 0};
  std::vector<EvidenceItem> evidence = {{"c#0", "明崇祯三年（1630）二月十三日生"}};
  auto r = solve_era_conflict(fact, sentence, evidence, table());
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(r->text.find("崇祯三年") != std::string::npos);
  CHECK(r->text.find("1630") != std::string::npos);
  CHECK(r->text.find("1632") == std::string::npos);
}

TEST_CASE("era solver: agreement is a verifier false alarm -> Accept") {
  std::string sentence = "In the eighteenth year of Shunzhi (1661), appointed judge.";
  AtomicFact fact{"appointed in the eighteenth year of Shunzhi (1661)", 0};
  std::vector<EvidenceItem> evidence = {{"c#0", "顺治十八年（1661）任松江府推官"}};
  auto r = solve_era_conflict(fact, sentence, evidence, table());
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::Accept);
}

TEST_CASE("era solver: no era token anywhere escalates") {
  AtomicFact fact{"a claim without dates", 0};
  auto r = solve_era_conflict(fact, "No dates here.", {{"c#0", "No dates either."}}, table());
  CHECK_FALSE(r.has_value());
}

TEST_CASE("era solver: bare Gregorian year in the fact still corrected") {
  std::string sentence = "He retired in 1661 to his home county.";
  AtomicFact fact{"retired in 1661", 0};
  std::vector<EvidenceItem> evidence = {{"c#0", "retired in the first year of Kangxi (1662)"}};
  auto r = solve_era_conflict(fact, sentence, evidence, table());
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(r->text.find("1662") != std::string::npos);
  CHECK(r->text.find("1661") == std::string::npos);
}

TEST_CASE("alias solver: unattested alias dropped") {
  EntityNode node;
  node.canonical_name = "Hu E";
  node.aliases = {"Zhuo'an"};
  AtomicFact fact{"styled Mengde", 0};
  auto r = solve_alias_conflict(fact, "Hu E, styled Mengde, was a judge.", node);
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(r->text.find("Mengde") == std::string::npos);
  CHECK(r->text.find("Hu E") != std::string::npos);
}

TEST_CASE("alias solver: attested alias alone presented with the canonical name") {
  EntityNode node;
  node.canonical_name = "Hu E";
  node.aliases = {"Zhuo'an"};
  AtomicFact fact{"Zhuo'an was a judge", 0};
  auto r = solve_alias_conflict(fact, "Zhuo'an served as a judge.", node);
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(r->text == "Hu E, styled Zhuo'an served as a judge.");
}

TEST_CASE("alias solver: canonical already present -> Accept") {
  EntityNode node;
  node.canonical_name = "Hu E";
  node.aliases = {"Zhuo'an"};
  AtomicFact fact{"Hu E was a judge", 0};
  auto r = solve_alias_conflict(fact, "Hu E, styled Zhuo'an, was a judge.", node);
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::Accept);
}

TEST_CASE("alias solver: CJK alias presentation") {
  EntityNode node;
  node.canonical_name = "胡鄂";
  node.aliases = {"卓庵"};
  AtomicFact fact{"卓庵任推官", 0};
  auto r = solve_alias_conflict(fact, "卓庵任松江府推官。", node);
  REQUIRE(r.has_value());
  CHECK(r->text == "胡鄂，字卓庵任松江府推官。");
}

TEST_CASE("review store: append, list, resolve, idempotence") {
  TempDir tmp("review");
  ReviewStore store(tmp / "review.ledger");
  CHECK(store.open_tickets().empty());

  Ticket t;
  t.id = make_ticket_id("Hu E", 3, "born 1630");
  t.figure = "Hu E";
  t.sentence_index = 3;
  t.fact = "born 1630";
  t.candidates = {{"a", "c#0", "snippet A", "replacement A"},
                  {"b", "c#1", "snippet B", "replacement B"}};
  store.append(t);

  auto open = store.open_tickets();
  REQUIRE(open.size() == 1);
  CHECK(open[0].id == t.id);
  REQUIRE(open[0].candidates.size() == 2);

  CHECK_THROWS_AS((void)store.resolve(t.id, "z"), Error);  // unknown candidate

  auto outcome = store.resolve(t.id, "a");
  CHECK_FALSE(outcome.already_resolved);
  CHECK(outcome.ticket.chosen == "a");
  CHECK(store.open_tickets().empty());

  auto again = store.resolve(t.id, "b");  // idempotent no-op with warning flag
  CHECK(again.already_resolved);
  CHECK(again.ticket.chosen == "a");

  CHECK_THROWS_AS((void)store.resolve("t-missing", "a"), Error);
}

TEST_CASE("review store: unwritable path raises ReviewStoreError") {
  ReviewStore store("/nonexistent_dir_zz/review.ledger");
  Ticket t;
  t.id = "t1";
  t.candidates = {{"a", "c", "s", "r"}};
  try {
    store.append(t);
    FAIL("expected ReviewStoreError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ReviewStoreError);
  }
}

TEST_CASE("ref-conflict solver files a two-candidate ticket") {
  TempDir tmp("refc");
  ReviewStore store(tmp / "review.ledger");
  AtomicFact fact{"born in the third year of Chongzhen (1630)", 2};
  std::string sentence = "Born in the third year of Chongzhen (1630).";
  std::vector<EvidenceItem> evidence = {
      {"c#0", "born in the third year of Chongzhen (1630)"},
      {"c#1", "born in the fifth year of Chongzhen (1632)"},
  };
  auto r = solve_ref_conflict(fact, sentence, evidence, "Hu E", 2, "/run/dir", table(),
                              store);
  CHECK(r.action == Resolution::Action::PendingHuman);
  CHECK_FALSE(r.ticket_id.empty());
  auto ticket = store.find(r.ticket_id);
  REQUIRE(ticket.has_value());
  REQUIRE(ticket->candidates.size() == 2);
  // candidate a matches the sentence as written; candidate b patches 1632 in
  CHECK(ticket->candidates[0].replacement == sentence);
  CHECK(ticket->candidates[1].replacement.find("1632") != std::string::npos);
  CHECK(ticket->run_dir == "/run/dir");
  CHECK_THROWS_AS(
      (void)solve_ref_conflict(fact, sentence, {evidence[0]}, "Hu E", 2, "", table(), store),
      Error);  // needs >= 2 snippets
}

TEST_CASE("snapshot lookup: longest matching key wins") {
  TempDir tmp("snap");
  write_file(tmp / "snap.tsv",
             "examination\tThe palace examination ranked jinshi into three classes.\n"
             "palace examination\tThe palace examination was the final metropolitan "
             "stage, presided over by the emperor.\n");
  SnapshotLookup lookup(tmp / "snap.tsv");
  auto hit = lookup.lookup("He sat the palace examination in 1630.");
  REQUIRE(hit.has_value());
  CHECK(hit->find("presided over by the emperor") != std::string::npos);
  CHECK_FALSE(lookup.lookup("nothing relevant").has_value());
}

TEST_CASE("knowledge solver: rewrite passes re-verification") {
  TempDir tmp("kn");
  write_file(tmp / "snap.tsv", "examination\tRanked 79th in the second class.\n");
  SnapshotLookup lookup(tmp / "snap.tsv");
  MockScript script;
  script.entries.push_back(MockEntry{
      "correct", "He ranked 79th in the second class of the palace examination.", false, "",
      FinishReason::Stop});
  MockGateway gw(script);
  auto prompts = test_prompts();
  int verify_calls = 0;
  auto verify = [&](const std::string& s) {
    ++verify_calls;
    return s.find("79th") != std::string::npos;
  };
  std::vector<std::string> consulted;
  auto r = solve_knowledge_lack(AtomicFact{"ranked first in the examination", 0},
                                "He ranked first in the palace examination.", lookup, gw,
                                prompts, verify, 2, &consulted);
  REQUIRE(r.has_value());
  CHECK(r->action == Resolution::Action::ReplaceSentence);
  CHECK(verify_calls == 1);
  CHECK(consulted.size() == 1);
}

TEST_CASE("knowledge solver: empty lookup escalates; failing rewrites pend") {
  TempDir tmp("kn2");
  write_file(tmp / "snap.tsv", "examination\tbackground text\n");
  SnapshotLookup lookup(tmp / "snap.tsv");
  auto prompts = test_prompts();
  {
    MockGateway gw(MockScript{});
    auto r = solve_knowledge_lack(AtomicFact{"no match here", 0}, "Sentence.", lookup, gw,
                                  prompts, [](const std::string&) { return true; }, 2,
                                  nullptr);
    CHECK_FALSE(r.has_value());  // nothing found -> escalate
  }
  {
    MockScript script;
    script.entries.push_back(MockEntry{"correct", "bad rewrite 1.", false, "", FinishReason::Stop});
    script.entries.push_back(MockEntry{"correct", "bad rewrite 2.", false, "", FinishReason::Stop});
    MockGateway gw(script);
    auto r = solve_knowledge_lack(AtomicFact{"examination fact", 0}, "Sentence.", lookup, gw,
                                  prompts, [](const std::string&) { return false; }, 2,
                                  nullptr);
    REQUIRE(r.has_value());
    CHECK(r->action == Resolution::Action::PendingHuman);
  }
}

TEST_CASE("generic solver: happy path, bounded rounds, gateway down") {
  auto prompts = test_prompts();
  Verdict v = not_supported(ErrorSubtype::Other, {{"c#0", "evidence"}});
  {
    MockScript script;
    script.entries.push_back(
        MockEntry{"correct", "A corrected sentence.", false, "", FinishReason::Stop});
    MockGateway gw(script);
    auto r = solve_other(v.fact, v, "Broken sentence.", gw, prompts,
                         [](const std::string&) { return true; }, 2);
    CHECK(r.action == Resolution::Action::ReplaceSentence);
    CHECK(r.text == "A corrected sentence.");
  }
  {
    MockScript script;
    script.entries.push_back(MockEntry{"correct", "try 1.", false, "", FinishReason::Stop});
    script.entries.push_back(MockEntry{"correct", "try 2.", false, "", FinishReason::Stop});
    MockGateway gw(script);
    int rounds = 0;
    auto r = solve_other(v.fact, v, "Broken sentence.", gw, prompts,
                         [&](const std::string&) {
                           ++rounds;
                           return false;
                         },
                         2);
    CHECK(r.action == Resolution::Action::PendingHuman);
    CHECK(rounds == 2);  // exactly the configured bound
  }
  {
    MockScript script;
    for (int i = 0; i < 3; ++i) {
      script.entries.push_back(MockEntry{"correct", "", false, "timeout", FinishReason::Stop});
    }
    MockGateway gw(script, 2);
    auto r = solve_other(v.fact, v, "Broken sentence.", gw, prompts,
                         [](const std::string&) { return true; }, 2);
    CHECK(r.action == Resolution::Action::PendingHuman);
  }
}

TEST_SUITE_END();

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chronicler/config.hpp"
#include "chronicler/era.hpp"
#include "chronicler/gateway.hpp"
#include "chronicler/graph.hpp"
#include "chronicler/remediation.hpp"
#include "chronicler/verifier.hpp"

namespace chronicler {

struct BiographyQuery {
  std::string figure_name;
  int hops = 1;
  std::string style_prompt = "style_default";
  double temperature = 0.7;
  std::string run_dir;  // recorded in review tickets so resolutions can patch
};

struct SentenceOut {
  enum class Status { Accepted, Provisional };
  std::string text;
  Status status = Status::Accepted;
  std::string ticket_id;  // set iff Provisional
};

struct Biography {
  NodeId figure = 0;
  std::string figure_name;
  std::vector<SentenceOut> sentences;
  std::vector<std::string> references;  // chunk ids actually consulted

  std::string text() const;  // sentences joined with script-aware spacing
};

struct FactOutcome {
  AtomicFact fact;
  Verdict verdict;
  std::optional<SolverKind> routed;
  std::optional<Resolution> resolution;
};

struct SentenceRecord {
  int index = 0;
  std::string draft;
  std::string final_text;
  std::string status;  // accepted | provisional | dropped
  std::string ticket_id;
  std::vector<FactOutcome> fact_outcomes;  // every verdict over every round
  int rounds = 0;          // remediation rounds consumed
  int regen_attempts = 0;
  std::size_t gateway_calls = 0;
  std::uint64_t prefix_hash = 0;  // hash of emitted text up to this sentence
  std::vector<std::string> notes;
  double t_generate = 0, t_verify = 0, t_remediate = 0;  // seconds, in-memory only
};

struct AuditTrail {
  std::string figure_name;
  NodeId figure = 0;
  std::string match_kind;
  std::vector<std::string> retrieved_chunk_ids;
  std::vector<SentenceRecord> sentences;
  std::vector<std::string> external_consulted;
  bool failed = false;
  std::string failure;
  double t_retrieval = 0, t_total = 0;
};

struct PipelineResult {
  Biography biography;
  AuditTrail trail;
};

struct StageTimings {
  double retrieval = 0;
  double generation = 0;
  double verification = 0;
  double remediation = 0;
  double total = 0;
};

// Aggregates wall time per stage from the trail's in-memory timings.
StageTimings stage_timings(const AuditTrail& trail);

// The online path: retrieve references, stream one sentence at a time,
// verify every sentence before the next is requested, route failures to the
// solvers, and keep a complete per-sentence audit record. Accepted sentences
// are frozen; remediation can only touch the sentence under review.
class Engine {
 public:
  Engine(const RunConfig& config, const KnowledgeGraph& graph, LlmGateway& gateway,
         const PromptLibrary& prompts, const EraTable& era_table, ReviewStore& review,
         ExternalLookup* lookup = nullptr);

  PipelineResult generate(const BiographyQuery& query);

  // Upper bound on gateway calls one sentence may consume under the
  // configured budgets; the termination acceptance test checks against it.
  std::size_t per_sentence_call_bound() const;

 private:
  struct VerifyPass {
    std::vector<FactOutcome> outcomes;
    int first_failing = -1;  // index into outcomes
    std::size_t facts = 0;
  };
  VerifyPass verify_sentence(const std::string& sentence, int sentence_index,
                             const std::vector<Chunk>& refs,
                             const std::vector<std::string>& overridden,
                             std::vector<std::string>* consulted_chunks);

  const RunConfig& config_;
  const KnowledgeGraph& graph_;
  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  const EraTable& era_table_;
  ReviewStore& review_;
  ExternalLookup* lookup_;
};

// Run directory layout: biography.txt, sentences.tsv, trail.tsv,
// timings.txt (formats documented in docs/formats.md). trail.tsv carries no
// wall-clock data so deterministic replays are byte-identical.
void write_run_dir(const std::filesystem::path& dir, const PipelineResult& result);

// Applies a resolved review ticket to its stored biography: the chosen
// candidate's replacement text is patched into sentences.tsv and
// biography.txt is regenerated.
void patch_run_dir(const Ticket& ticket, const TicketCandidate& choice);

}  // namespace chronicler

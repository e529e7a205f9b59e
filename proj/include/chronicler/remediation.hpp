#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "chronicler/era.hpp"
#include "chronicler/gateway.hpp"
#include "chronicler/graph.hpp"
#include "chronicler/verifier.hpp"

namespace chronicler {

enum class SolverKind { Regenerator, Era, RefConflict, Knowledge, Alias, Generic };

std::string_view solver_name(SolverKind k);

// Maps a failed verdict to its correction strategy. Total over non-supported
// verdicts; calling it on a Supported verdict is a programming error.
SolverKind route(const Verdict& verdict);

struct Resolution {
  enum class Action { ReplaceSentence, Regenerate, PendingHuman, Accept };
  Action action = Action::Accept;
  std::string text;            // ReplaceSentence: non-empty replacement
  int regenerate_from = -1;    // Regenerate: sentence index
  std::string ticket_id;       // PendingHuman
  std::string rationale;
  SolverKind solver = SolverKind::Generic;
};

// Full re-verification of a rewritten sentence, provided by the caller so
// solver rewrites are never accepted unchecked.
using VerifyFn = std::function<bool(const std::string& sentence)>;

// Era-conflict solver: parse era dates from the fact and the evidence,
// convert both to Gregorian years, and rewrite the sentence when they
// disagree (era phrase and stated year both). Agreement is a verifier false
// alarm -> Accept. Returns nullopt (escalate to the generic solver) when no
// era or year token can be parsed on either side.
std::optional<Resolution> solve_era_conflict(const AtomicFact& fact,
                                             const std::string& sentence,
                                             const std::vector<EvidenceItem>& evidence,
                                             const EraTable& table);

// Alias-conflict solver: drop "styled X"/"，字X" phrases whose name is not
// attested on the node; present an attested alias as
// "<canonical>, styled <alias>" when the canonical name is absent. Returns
// nullopt when no rewrite applies and nothing is wrong -> caller Accepts.
std::optional<Resolution> solve_alias_conflict(const AtomicFact& fact,
                                               const std::string& sentence,
                                               const EntityNode& node);

// --- human review -------------------------------------------------------------

struct TicketCandidate {
  std::string id;           // "a", "b", ...
  std::string chunk_id;
  std::string snippet;
  std::string replacement;  // sentence text this choice patches in
};

struct Ticket {
  std::string id;
  std::string figure;
  int sentence_index = 0;
  std::string fact;
  std::vector<TicketCandidate> candidates;
  std::string run_dir;  // biography this ticket patches
  bool resolved = false;
  std::string chosen;
};

// Append-resolve ledger file: ticket/cand records are appended when a
// conflict is found, resolve records when a human decides. State is the
// fold of the file; nothing is rewritten in place.
class ReviewStore {
 public:
  explicit ReviewStore(std::filesystem::path file);

  // Throws ReviewStoreError when the ledger cannot be written: human-gated
  // fidelity must not be silently skipped.
  void append(const Ticket& ticket);

  std::vector<Ticket> tickets() const;        // all, resolved included
  std::vector<Ticket> open_tickets() const;
  std::optional<Ticket> find(const std::string& ticket_id) const;

  struct ResolveOutcome {
    Ticket ticket;
    bool already_resolved = false;
  };
  ResolveOutcome resolve(const std::string& ticket_id, const std::string& candidate_id);

  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
};

// Deterministic ticket id from its content.
std::string make_ticket_id(const std::string& figure, int sentence_index,
                           const std::string& fact);

// Ref-conflict solver: evidence cites at least two chunks with mutually
// contradictory values; files a review ticket and returns PendingHuman. The
// pipeline marks the sentence provisional and continues.
Resolution solve_ref_conflict(const AtomicFact& fact, const std::string& sentence,
                              const std::vector<EvidenceItem>& evidence,
                              const std::string& figure, int sentence_index,
                              const std::string& run_dir, const EraTable& table,
                              ReviewStore& store);

// --- external lookup -------------------------------------------------------------

class ExternalLookup {
 public:
  virtual ~ExternalLookup() = default;
  // Human-readable background text for the query, or nothing.
  virtual std::optional<std::string> lookup(const std::string& query) = 0;
};

// Canned local snapshot: TSV lines "key<TAB>text"; a key matches when it is
// a substring of the query (longest key wins).
class SnapshotLookup : public ExternalLookup {
 public:
  explicit SnapshotLookup(const std::filesystem::path& file);
  std::optional<std::string> lookup(const std::string& query) override;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // longest first
};

class HttpLookup : public ExternalLookup {
 public:
  explicit HttpLookup(std::string endpoint, int timeout_sec = 30);
  std::optional<std::string> lookup(const std::string& query) override;

 private:
  std::string endpoint_;
  int timeout_sec_;
};

// Knowledge-lack solver: inject lookup results into a correction prompt and
// re-verify the rewrite before accepting it. Lookup failure escalates
// (nullopt); rewrites that keep failing end as PendingHuman.
std::optional<Resolution> solve_knowledge_lack(const AtomicFact& fact,
                                               const std::string& sentence,
                                               ExternalLookup& external,
                                               LlmGateway& gateway,
                                               const PromptLibrary& prompts,
                                               const VerifyFn& verify, int rounds,
                                               std::vector<std::string>* consulted = nullptr);

// Catch-all solver: correction prompt carrying the verdict and evidence; at
// most `rounds` rewrite attempts, each re-verified, then PendingHuman.
Resolution solve_other(const AtomicFact& fact, const Verdict& verdict,
                       const std::string& sentence, LlmGateway& gateway,
                       const PromptLibrary& prompts, const VerifyFn& verify, int rounds);

}  // namespace chronicler

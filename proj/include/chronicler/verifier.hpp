#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chronicler/corpus.hpp"
#include "chronicler/gateway.hpp"

namespace chronicler {

// One biographical claim extracted from a generated sentence; the unit of
// verification.
struct AtomicFact {
  std::string text;
  int sentence_index = 0;
};

enum class VerdictStatus { Supported, NotIncluded, NotSupported };

enum class ErrorSubtype { EraConflict, RefConflict, KnowledgeLack, AliasConflict, Other };

std::string_view subtype_name(ErrorSubtype s);
std::optional<ErrorSubtype> subtype_from(std::string_view token);

struct EvidenceItem {
  std::string chunk_id;
  std::string snippet;

  bool operator==(const EvidenceItem& other) const = default;
};

struct Verdict {
  AtomicFact fact;
  VerdictStatus status = VerdictStatus::NotIncluded;
  std::optional<ErrorSubtype> subtype;       // set iff NotSupported
  std::vector<EvidenceItem> evidence;        // non-empty iff Supported/NotSupported
  std::map<std::string, double> jaccard_scores;
  bool low_confidence = false;               // malformed/unavailable verdicts
  std::string raw_response;                  // attached on malformed verdicts
};

// |a ∩ b| / |a ∪ b|; both empty -> 0 by convention.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);
double jaccard_text(std::string_view a, std::string_view b);

// One fact per response line; an empty or failed decomposition falls back to
// the whole sentence as a single fact.
std::vector<AtomicFact> decompose_atomic_facts(const std::string& sentence,
                                               int sentence_index, LlmGateway& gateway,
                                               const PromptLibrary& prompts,
                                               std::size_t max_facts = 16);

// Keeps the top-k references by token Jaccard against the fact, dropping
// scores under `floor`; when nothing clears the floor the single best
// reference is kept so the fact is still checked against something.
std::vector<Chunk> filter_references(const AtomicFact& fact, const std::vector<Chunk>& refs,
                                     std::size_t k, double floor,
                                     std::map<std::string, double>* scores_out = nullptr);

// Verdict wire format, shared between live prompts and scripted mocks
// (grammar documented in docs/formats.md):
//   SUPPORTED\t<chunk_id>\t<snippet>
//   NOT_INCLUDED
//   NOT_SUPPORTED\t<ERA|REF|KNOWLEDGE|ALIAS|OTHER>[\t<chunk_id>\t<snippet>]
// plus any number of continuation lines: EVIDENCE\t<chunk_id>\t<snippet>.
std::optional<Verdict> parse_verdict(const std::string& response, const AtomicFact& fact,
                                     const std::vector<Chunk>& refs);
std::string format_verdict(const Verdict& verdict);

// Prompts the gateway with the fact and filtered references. Empty refs
// short-circuit to NotIncluded without a call; malformed verdicts are
// retried then mapped to NotSupported(Other) with the raw response kept.
Verdict check_support(const AtomicFact& fact, const std::vector<Chunk>& refs,
                      LlmGateway& gateway, const PromptLibrary& prompts,
                      int retry_budget = 1);

}  // namespace chronicler

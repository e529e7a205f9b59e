#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "chronicler/config.hpp"
#include "chronicler/corpus.hpp"
#include "chronicler/gateway.hpp"

namespace chronicler {

// A chunk-specific extraction pattern plus the relation label carried by
// each capture group, e.g. "(\S+), styled (\S+)" with roles [name,
// styled_name]. Patterns must compile in the engine's linear-time dialect.
struct ExtractionRegex {
  std::string pattern;
  std::vector<std::string> capture_roles;
  enum class Origin { LlmGenerated, Handcrafted } origin = Origin::LlmGenerated;
};

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  std::string chunk_id;
  enum class Provenance { Regex, LlmDirect } provenance = Provenance::Regex;

  bool operator==(const Triple& other) const = default;
};

struct RegexValidation {
  bool accepted = false;
  std::string reason;  // set when rejected
};

// Accepted iff the pattern compiles in the linear dialect, the group count
// matches the role list, applying it to the chunk stays inside the step
// budget, and it matches at least once.
RegexValidation validate_regex(const ExtractionRegex& candidate, const Chunk& chunk,
                               std::uint64_t step_budget);

// Every match yields one triple per non-head capture: (head capture,
// role[i], capture[i]). Captures are whitespace-trimmed and empty ones are
// dropped. head_role empty means the first role.
std::vector<Triple> apply_regex(const ExtractionRegex& regex, const Chunk& chunk,
                                const std::string& head_role, std::uint64_t step_budget);

struct RegexGenOptions {
  std::vector<ExtractionDemo> demonstrations;  // at least one
  int retry_budget = 2;
  std::uint64_t step_budget = 2'000'000;
  double temperature = 0.0;
  int max_tokens = 512;
};

// Prompts the gateway for a pattern + role list; a response that fails
// validation is retried, and exhausted retries (or gateway failure) yield
// the "no regex" sentinel so the caller can take the plan-B path.
std::optional<ExtractionRegex> generate_regex(const Chunk& chunk,
                                              const RegexGenOptions& options,
                                              LlmGateway& gateway,
                                              const PromptLibrary& prompts);

struct DirectExtraction {
  std::vector<Triple> triples;
  int dropped_lines = 0;
};

// Plan B: the model emits one triple per line as head<TAB>relation<TAB>tail.
// Unparseable lines are dropped and counted. Gateway failure after the
// gateway's own transport retries throws ExtractionFailed.
DirectExtraction extract_direct(const Chunk& chunk, LlmGateway& gateway,
                                const PromptLibrary& prompts, double temperature = 0.0,
                                int max_tokens = 512);

// Shape key for regex reuse across near-identical chunks: letters collapse
// to 'a', digits to '0', CJK to 'c', whitespace to ' '; punctuation stays.
// Repeated runs collapse to one symbol.
std::string pattern_shape_key(const std::string& chunk_text);

class RegexCache {
 public:
  std::optional<ExtractionRegex> get(const std::string& shape_key) const;
  void put(const std::string& shape_key, ExtractionRegex regex);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ExtractionRegex> by_shape_;
};

}  // namespace chronicler

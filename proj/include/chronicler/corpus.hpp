#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chronicler/config.hpp"
#include "chronicler/gateway.hpp"

namespace chronicler {

struct Document {
  std::string id;      // derived from the relative path, unique per corpus
  std::string title;
  std::string text;    // full body, UTF-8; offsets below are code points
  std::string source;  // original file path
};

// A contiguous span of one document describing one person; the atom of
// retrieval. Front matter between entries is kept as addressable preamble
// chunks so that the chunk list always partitions the document.
struct Chunk {
  std::string id;       // "<doc_id>#<ordinal>"
  std::string doc_id;
  std::uint32_t start = 0;  // code-point offsets, end exclusive
  std::uint32_t end = 0;
  std::string text;         // always the verbatim slice [start, end)
  bool preamble = false;

  bool operator==(const Chunk& other) const = default;
};

struct LoadReport {
  struct Failure {
    std::string path;
    std::string error;
  };
  std::vector<Failure> failures;
  std::size_t loaded = 0;
};

// Loads every *.txt under root (recursively). Unreadable or invalid-UTF-8
// files land in the report; an entirely empty corpus is an error.
std::vector<Document> load_corpus(const std::filesystem::path& root, LoadReport& report);

// Splits at every match start of boundary_regex; text before the first
// match becomes a preamble chunk. A regex with zero matches yields one
// chunk spanning the whole document.
std::vector<Chunk> chunk_fallback(const Document& doc, const std::string& boundary_regex,
                                  std::uint64_t step_budget = 2'000'000);

struct WritingPattern {
  std::string description;
  std::vector<ChunkDemo> demonstrations;
};

enum class ChunkMethod { Llm, Fallback };

struct ChunkOutcome {
  ChunkMethod method = ChunkMethod::Llm;
  int attempts = 0;  // LLM attempts consumed
};

struct ChunkingOptions {
  WritingPattern pattern;
  std::string fallback_regex;
  int retry_budget = 2;
  double temperature = 0.0;
  int max_tokens = 512;
  std::uint64_t step_budget = 2'000'000;
};

// In-context chunking: the gateway is asked only for chunk start offsets
// (one integer per line); chunk text is always sliced verbatim from the
// document. Malformed or invariant-violating boundary lists are retried up
// to the budget, then the call falls back to chunk_fallback.
std::vector<Chunk> chunk_with_pattern(const Document& doc, const ChunkingOptions& options,
                                      LlmGateway& gateway, const PromptLibrary& prompts,
                                      ChunkOutcome* outcome = nullptr);

// Invariant helper shared by chunkers and tests: spans sorted, non-
// overlapping, in range, text equal to the slice.
void check_chunks(const Document& doc, const std::vector<Chunk>& chunks);

}  // namespace chronicler

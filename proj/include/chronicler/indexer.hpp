#pragma once

#include <string>

#include "chronicler/config.hpp"
#include "chronicler/corpus.hpp"
#include "chronicler/gateway.hpp"
#include "chronicler/graph.hpp"

namespace chronicler {

// The offline path: load -> chunk -> extract -> build. Documents are
// processed in id order so scripted-gateway runs replay exactly.
struct IndexBuildReport {
  LoadReport load;
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::size_t preamble_chunks = 0;
  std::size_t llm_chunked_docs = 0;
  std::size_t fallback_chunked_docs = 0;
  std::size_t regex_chunks = 0;   // extracted via a generated/cached regex
  std::size_t planb_chunks = 0;   // extracted via direct LLM triples
  std::size_t failed_chunks = 0;  // extraction failed; indexed as orphans
  std::size_t cache_hits = 0;
  std::size_t triples = 0;
  int dropped_lines = 0;
  BuildReport graph;
  double t_load = 0, t_chunk = 0, t_extract = 0, t_graph = 0;  // seconds

  double regex_ratio() const;
  std::string summary() const;  // one stat per line, "key<TAB>value"
};

KnowledgeGraph build_index(const RunConfig& config, LlmGateway& gateway,
                           const PromptLibrary& prompts, IndexBuildReport* report = nullptr);

}  // namespace chronicler

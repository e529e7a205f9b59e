#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chronicler/extraction.hpp"

namespace chronicler {

// Desk-scale corpus factory: emits pattern-conforming person entries plus
// irrelevant distractor passages, the gold retrieval mapping and gold
// triples implied by construction, and a mock gateway script that drives the
// whole offline index path (and a one-figure generation demo) offline.
struct SynthSpec {
  int figures = 10;
  int distractors = 5;
  std::uint64_t seed = 1;
  int entries_per_doc = 5;
  std::filesystem::path era_table;    // era phrases are drawn from this table
  std::filesystem::path prompts_dir;  // recorded in the emitted config
};

struct SynthFigure {
  std::string name;
  std::string styled;
  std::string nickname;
  std::string hometown;
  std::string chunk_id;
};

struct SynthResult {
  std::filesystem::path corpus_dir;
  std::filesystem::path gold_retrieval;
  std::filesystem::path gold_triples;
  std::filesystem::path script;
  std::filesystem::path config;
  std::filesystem::path labels;
  std::vector<SynthFigure> figures;
  ExtractionRegex regex;  // the writing-pattern regex the script answers with
};

SynthResult generate_synthetic_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir);

}  // namespace chronicler

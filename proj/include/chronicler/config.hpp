#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chronicler {

// Minimal INI document preserving section and key order, so that loading
// and re-serializing a config is lossless (modulo comments/whitespace).
// Values may contain \t, \n, \\ escapes.
class IniDoc {
 public:
  struct Entry {
    std::string key;
    std::string value;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  static IniDoc parse(const std::string& text);
  static IniDoc load(const std::filesystem::path& file);
  std::string serialize() const;

  const std::string* find(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, std::string value);

  const std::vector<Section>& sections() const { return sections_; }
  bool operator==(const IniDoc& other) const;

 private:
  std::vector<Section> sections_;
};

// One demonstration for the in-context chunker: an excerpt plus the chunk
// start offsets that a correct split would produce.
struct ChunkDemo {
  std::string excerpt;
  std::vector<std::uint32_t> boundaries;
};

struct ExtractionDemo {
  std::string excerpt;
  std::string pattern;
  std::vector<std::string> roles;
};

// All engine tunables in one place; defaults here are the shipped defaults
// and the config file overrides them field by field.
struct RunConfig {
  // [paths]
  std::filesystem::path corpus_root;
  std::filesystem::path index_path = "index.kg";
  std::filesystem::path era_table = "data/era_table.tsv";
  std::filesystem::path prompts_dir = "prompts";
  std::filesystem::path review_store = "review.ledger";
  std::filesystem::path run_root = "runs";
  std::filesystem::path snapshot_path;  // external-lookup snapshot (optional)

  // [gateway]
  std::string gateway_mode = "mock";  // mock | http
  std::string endpoint;
  std::string model = "default";
  std::string api_key_env = "CHRONICLER_API_KEY";
  std::filesystem::path mock_script;
  int retry_budget = 2;
  int backoff_ms = 100;
  double temp_index = 0.0;     // chunking / regex / verification calls
  double temp_generate = 0.7;  // drafting
  int max_tokens = 512;

  // [chunking]
  std::string pattern_description =
      "Each entry introduces one person: the name first, then the alias, "
      "then further details such as hometown and career.";
  std::vector<ChunkDemo> chunk_demos;
  std::string fallback_regex;
  int chunk_retry = 2;

  // [extraction]
  std::vector<ExtractionDemo> extraction_demos;
  std::string head_role = "name";
  std::vector<std::string> alias_relations = {"styled_name", "nickname"};
  int regex_retry = 2;
  int direct_retry = 2;
  std::uint64_t regex_step_budget = 2'000'000;
  bool regex_cache = true;

  // [index]
  std::string discriminator_relation = "hometown";
  int default_hops = 1;

  // [verifier]
  std::size_t filter_top_k = 3;
  double filter_floor = 0.05;
  int verify_retry = 1;
  std::size_t max_facts_per_sentence = 16;

  // [solver]
  int generic_rounds = 2;
  int knowledge_rounds = 2;
  int regen_attempts = 3;
  int max_steps_per_sentence = 16;

  // [generation]
  int max_sentences = 64;
  std::string style_prompt = "style_default";

  // Parses and validates; unknown keys are rejected so typos fail loudly.
  static RunConfig from_ini(const IniDoc& doc,
                            const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& file);
  IniDoc to_ini() const;

  // Existence checks for the inputs a run actually reads.
  void validate_paths(bool need_corpus, bool need_index) const;
};

}  // namespace chronicler

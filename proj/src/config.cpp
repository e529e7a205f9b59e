#include "chronicler/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

std::string escape_value(std::string_view v) {
  std::string out;
  for (char c : v) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_value(std::string_view v) { return tsv_unescape(v); }

int parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    int n = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, "key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::ConfigError, "key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto& item : split_fields(v, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint32_t> parse_offsets(const std::string& v, const std::string& key) {
  std::vector<std::uint32_t> out;
  for (auto& item : split_fields(v, ',')) {
    std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(static_cast<std::uint32_t>(parse_int(t, key)));
  }
  return out;
}

std::filesystem::path resolveat(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

IniDoc IniDoc::parse(const std::string& text) {
  IniDoc doc;
  Section* current = nullptr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw Error(Errc::ConfigError, "malformed section header at line " + std::to_string(lineno));
      }
      doc.sections_.push_back(Section{t.substr(1, t.size() - 2), {}});
      current = &doc.sections_.back();
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::ConfigError, "expected key=value at line " + std::to_string(lineno));
    }
    if (current == nullptr) {
      throw Error(Errc::ConfigError, "key outside any section at line " + std::to_string(lineno));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = unescape_value(trim(t.substr(eq + 1)));
    if (key.empty()) {
      throw Error(Errc::ConfigError, "empty key at line " + std::to_string(lineno));
    }
    current->entries.push_back(Entry{std::move(key), std::move(value)});
  }
  return doc;
}

IniDoc IniDoc::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string IniDoc::serialize() const {
  std::string out;
  for (const auto& section : sections_) {
    out += "[" + section.name + "]\n";
    for (const auto& e : section.entries) {
      out += e.key + " = " + escape_value(e.value) + "\n";
    }
    out += "\n";
  }
  return out;
}

const std::string* IniDoc::find(const std::string& section, const std::string& key) const {
  for (const auto& s : sections_) {
    if (s.name != section) continue;
    for (const auto& e : s.entries) {
      if (e.key == key) return &e.value;
    }
  }
  return nullptr;
}

std::string IniDoc::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

void IniDoc::set(const std::string& section, const std::string& key, std::string value) {
  for (auto& s : sections_) {
    if (s.name != section) continue;
    for (auto& e : s.entries) {
      if (e.key == key) {
        e.value = std::move(value);
        return;
      }
    }
    s.entries.push_back(Entry{key, std::move(value)});
    return;
  }
  sections_.push_back(Section{section, {Entry{key, std::move(value)}}});
}

bool IniDoc::operator==(const IniDoc& other) const {
  if (sections_.size() != other.sections_.size()) return false;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (sections_[i].name != other.sections_[i].name) return false;
    if (sections_[i].entries.size() != other.sections_[i].entries.size()) return false;
    for (std::size_t j = 0; j < sections_[i].entries.size(); ++j) {
      if (sections_[i].entries[j].key != other.sections_[i].entries[j].key) return false;
      if (sections_[i].entries[j].value != other.sections_[i].entries[j].value) return false;
    }
  }
  return true;
}

RunConfig RunConfig::from_ini(const IniDoc& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  // demo.N.* keys are collected per index
  std::map<int, ChunkDemo> chunk_demos;
  std::map<int, ExtractionDemo> extraction_demos;

  auto demo_index = [](const std::string& key, std::string& field) -> std::optional<int> {
    // demo.<n>.<field>
    if (key.rfind("demo.", 0) != 0) return std::nullopt;
    auto rest = key.substr(5);
    auto dot = rest.find('.');
    if (dot == std::string::npos) return std::nullopt;
    field = rest.substr(dot + 1);
    try {
      return std::stoi(rest.substr(0, dot));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };

  for (const auto& section : doc.sections()) {
    for (const auto& e : section.entries) {
      const std::string& k = e.key;
      const std::string& v = e.value;
      std::string qual = section.name + "." + k;
      if (section.name == "paths") {
        if (k == "corpus_root") c.corpus_root = resolveat(base_dir, v);
        else if (k == "index_path") c.index_path = resolveat(base_dir, v);
        else if (k == "era_table") c.era_table = resolveat(base_dir, v);
        else if (k == "prompts_dir") c.prompts_dir = resolveat(base_dir, v);
        else if (k == "review_store") c.review_store = resolveat(base_dir, v);
        else if (k == "run_root") c.run_root = resolveat(base_dir, v);
        else if (k == "snapshot") c.snapshot_path = resolveat(base_dir, v);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "gateway") {
        if (k == "mode") {
          if (v != "mock" && v != "http")
            throw Error(Errc::ConfigError, "gateway.mode must be mock or http");
          c.gateway_mode = v;
        } else if (k == "endpoint") c.endpoint = v;
        else if (k == "model") c.model = v;
        else if (k == "api_key_env") c.api_key_env = v;
        else if (k == "script") c.mock_script = resolveat(base_dir, v);
        else if (k == "retry_budget") c.retry_budget = parse_int(v, qual);
        else if (k == "backoff_ms") c.backoff_ms = parse_int(v, qual);
        else if (k == "temp_index") c.temp_index = parse_double(v, qual);
        else if (k == "temp_generate") c.temp_generate = parse_double(v, qual);
        else if (k == "max_tokens") c.max_tokens = parse_int(v, qual);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "chunking") {
        std::string field;
        if (auto idx = demo_index(k, field)) {
          auto& d = chunk_demos[*idx];
          if (field == "excerpt") d.excerpt = v;
          else if (field == "boundaries") d.boundaries = parse_offsets(v, qual);
          else throw Error(Errc::ConfigError, "unknown key " + qual);
        } else if (k == "pattern") c.pattern_description = v;
        else if (k == "fallback_regex") c.fallback_regex = v;
        else if (k == "retry_budget") c.chunk_retry = parse_int(v, qual);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "extraction") {
        std::string field;
        if (auto idx = demo_index(k, field)) {
          auto& d = extraction_demos[*idx];
          if (field == "excerpt") d.excerpt = v;
          else if (field == "pattern") d.pattern = v;
          else if (field == "roles") d.roles = parse_list(v);
          else throw Error(Errc::ConfigError, "unknown key " + qual);
        } else if (k == "head_role") c.head_role = v;
        else if (k == "alias_relations") c.alias_relations = parse_list(v);
        else if (k == "regex_retry") c.regex_retry = parse_int(v, qual);
        else if (k == "direct_retry") c.direct_retry = parse_int(v, qual);
        else if (k == "regex_step_budget") c.regex_step_budget =
            static_cast<std::uint64_t>(parse_double(v, qual));
        else if (k == "cache") c.regex_cache = parse_bool(v, qual);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "index") {
        if (k == "discriminator_relation") c.discriminator_relation = v;
        else if (k == "default_hops") c.default_hops = parse_int(v, qual);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "verifier") {
        if (k == "top_k") c.filter_top_k = static_cast<std::size_t>(parse_int(v, qual));
        else if (k == "floor") c.filter_floor = parse_double(v, qual);
        else if (k == "retry_budget") c.verify_retry = parse_int(v, qual);
        else if (k == "max_facts") c.max_facts_per_sentence =
            static_cast<std::size_t>(parse_int(v, qual));
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "solver") {
        if (k == "generic_rounds") c.generic_rounds = parse_int(v, qual);
        else if (k == "knowledge_rounds") c.knowledge_rounds = parse_int(v, qual);
        else if (k == "regen_attempts") c.regen_attempts = parse_int(v, qual);
        else if (k == "max_steps_per_sentence") c.max_steps_per_sentence = parse_int(v, qual);
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else if (section.name == "generation") {
        if (k == "max_sentences") c.max_sentences = parse_int(v, qual);
        else if (k == "style_prompt") c.style_prompt = v;
        else throw Error(Errc::ConfigError, "unknown key " + qual);
      } else {
        throw Error(Errc::ConfigError, "unknown section [" + section.name + "]");
      }
    }
  }

  for (auto& [idx, d] : chunk_demos) {
    if (d.excerpt.empty())
      throw Error(Errc::ConfigError, "chunking demo " + std::to_string(idx) + " missing excerpt");
    c.chunk_demos.push_back(std::move(d));
  }
  for (auto& [idx, d] : extraction_demos) {
    if (d.pattern.empty())
      throw Error(Errc::ConfigError, "extraction demo " + std::to_string(idx) + " missing pattern");
    c.extraction_demos.push_back(std::move(d));
  }

  auto positive = [](int v, const char* name) {
    if (v <= 0) throw Error(Errc::ConfigError, std::string(name) + " must be positive");
  };
  positive(c.retry_budget, "gateway.retry_budget");
  positive(c.chunk_retry + 1, "chunking.retry_budget");
  positive(c.regex_retry + 1, "extraction.regex_retry");
  positive(static_cast<int>(c.filter_top_k), "verifier.top_k");
  positive(c.generic_rounds, "solver.generic_rounds");
  positive(c.knowledge_rounds, "solver.knowledge_rounds");
  positive(c.regen_attempts, "solver.regen_attempts");
  positive(c.max_steps_per_sentence, "solver.max_steps_per_sentence");
  positive(c.max_sentences, "generation.max_sentences");
  if (c.filter_floor < 0.0 || c.filter_floor > 1.0) {
    throw Error(Errc::ConfigError, "verifier.floor must lie in [0,1]");
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  return from_ini(IniDoc::load(file), file.parent_path());
}

IniDoc RunConfig::to_ini() const {
  IniDoc doc;
  auto set = [&](const char* s, const char* k, const std::string& v) {
    doc.set(s, k, v);
  };
  set("paths", "corpus_root", corpus_root.string());
  set("paths", "index_path", index_path.string());
  set("paths", "era_table", era_table.string());
  set("paths", "prompts_dir", prompts_dir.string());
  set("paths", "review_store", review_store.string());
  set("paths", "run_root", run_root.string());
  if (!snapshot_path.empty()) set("paths", "snapshot", snapshot_path.string());
  set("gateway", "mode", gateway_mode);
  if (!endpoint.empty()) set("gateway", "endpoint", endpoint);
  set("gateway", "model", model);
  set("gateway", "api_key_env", api_key_env);
  if (!mock_script.empty()) set("gateway", "script", mock_script.string());
  set("gateway", "retry_budget", std::to_string(retry_budget));
  set("gateway", "backoff_ms", std::to_string(backoff_ms));
  set("gateway", "temp_index", std::to_string(temp_index));
  set("gateway", "temp_generate", std::to_string(temp_generate));
  set("gateway", "max_tokens", std::to_string(max_tokens));
  set("chunking", "pattern", pattern_description);
  for (std::size_t i = 0; i < chunk_demos.size(); ++i) {
    std::string prefix = "demo." + std::to_string(i + 1) + ".";
    set("chunking", (prefix + "excerpt").c_str(), chunk_demos[i].excerpt);
    std::string offs;
    for (std::size_t j = 0; j < chunk_demos[i].boundaries.size(); ++j) {
      if (j) offs += ",";
      offs += std::to_string(chunk_demos[i].boundaries[j]);
    }
    set("chunking", (prefix + "boundaries").c_str(), offs);
  }
  if (!fallback_regex.empty()) set("chunking", "fallback_regex", fallback_regex);
  set("chunking", "retry_budget", std::to_string(chunk_retry));
  for (std::size_t i = 0; i < extraction_demos.size(); ++i) {
    std::string prefix = "demo." + std::to_string(i + 1) + ".";
    set("extraction", (prefix + "excerpt").c_str(), extraction_demos[i].excerpt);
    set("extraction", (prefix + "pattern").c_str(), extraction_demos[i].pattern);
    std::string roles;
    for (std::size_t j = 0; j < extraction_demos[i].roles.size(); ++j) {
      if (j) roles += ",";
      roles += extraction_demos[i].roles[j];
    }
    set("extraction", (prefix + "roles").c_str(), roles);
  }
  set("extraction", "head_role", head_role);
  {
    std::string rels;
    for (std::size_t i = 0; i < alias_relations.size(); ++i) {
      if (i) rels += ",";
      rels += alias_relations[i];
    }
    set("extraction", "alias_relations", rels);
  }
  set("extraction", "regex_retry", std::to_string(regex_retry));
  set("extraction", "direct_retry", std::to_string(direct_retry));
  set("extraction", "regex_step_budget", std::to_string(regex_step_budget));
  set("extraction", "cache", regex_cache ? "true" : "false");
  set("index", "discriminator_relation", discriminator_relation);
  set("index", "default_hops", std::to_string(default_hops));
  set("verifier", "top_k", std::to_string(filter_top_k));
  set("verifier", "floor", std::to_string(filter_floor));
  set("verifier", "retry_budget", std::to_string(verify_retry));
  set("verifier", "max_facts", std::to_string(max_facts_per_sentence));
  set("solver", "generic_rounds", std::to_string(generic_rounds));
  set("solver", "knowledge_rounds", std::to_string(knowledge_rounds));
  set("solver", "regen_attempts", std::to_string(regen_attempts));
  set("solver", "max_steps_per_sentence", std::to_string(max_steps_per_sentence));
  set("generation", "max_sentences", std::to_string(max_sentences));
  set("generation", "style_prompt", style_prompt);
  return doc;
}

void RunConfig::validate_paths(bool need_corpus, bool need_index) const {
  namespace fs = std::filesystem;
  if (need_corpus && !fs::exists(corpus_root)) {
    throw Error(Errc::ConfigError, "corpus_root does not exist: " + corpus_root.string());
  }
  if (need_index && !fs::exists(index_path)) {
    throw Error(Errc::ConfigError, "index_path does not exist: " + index_path.string());
  }
  if (!fs::exists(era_table)) {
    throw Error(Errc::ConfigError, "era_table does not exist: " + era_table.string());
  }
  if (!fs::exists(prompts_dir)) {
    throw Error(Errc::ConfigError, "prompts_dir does not exist: " + prompts_dir.string());
  }
  if (gateway_mode == "mock" && !mock_script.empty() && !fs::exists(mock_script)) {
    throw Error(Errc::ConfigError, "mock script does not exist: " + mock_script.string());
  }
}

}  // namespace chronicler

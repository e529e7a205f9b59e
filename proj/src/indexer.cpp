#include "chronicler/indexer.hpp"

#include <chrono>
#include <cstdio>

#include "chronicler/errors.hpp"
#include "chronicler/extraction.hpp"

namespace chronicler {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double IndexBuildReport::regex_ratio() const {
  std::size_t extracted = regex_chunks + planb_chunks;
  return extracted == 0 ? 0.0
                        : static_cast<double>(regex_chunks) / static_cast<double>(extracted);
}

std::string IndexBuildReport::summary() const {
  auto line = [](const std::string& k, const std::string& v) { return k + "\t" + v + "\n"; };
  std::string out;
  out += line("documents", std::to_string(documents));
  out += line("load_failures", std::to_string(load.failures.size()));
  out += line("chunks", std::to_string(chunks));
  out += line("preamble_chunks", std::to_string(preamble_chunks));
  out += line("llm_chunked_docs", std::to_string(llm_chunked_docs));
  out += line("fallback_chunked_docs", std::to_string(fallback_chunked_docs));
  out += line("regex_chunks", std::to_string(regex_chunks));
  out += line("planb_chunks", std::to_string(planb_chunks));
  out += line("failed_chunks", std::to_string(failed_chunks));
  out += line("regex_cache_hits", std::to_string(cache_hits));
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.3f", regex_ratio());
  out += line("regex_ratio", ratio);
  out += line("triples", std::to_string(triples));
  out += line("dropped_triple_lines", std::to_string(dropped_lines));
  out += line("nodes", std::to_string(graph.node_count));
  out += line("edges", std::to_string(graph.edge_count));
  out += line("orphan_chunks", std::to_string(graph.orphan_count));
  out += line("name_collisions", std::to_string(graph.collisions.size()));
  char t[64];
  std::snprintf(t, sizeof t, "%.3f", t_load);
  out += line("sec_load", t);
  std::snprintf(t, sizeof t, "%.3f", t_chunk);
  out += line("sec_chunking", t);
  std::snprintf(t, sizeof t, "%.3f", t_extract);
  out += line("sec_extraction", t);
  std::snprintf(t, sizeof t, "%.3f", t_graph);
  out += line("sec_graph_build", t);
  return out;
}

KnowledgeGraph build_index(const RunConfig& config, LlmGateway& gateway,
                           const PromptLibrary& prompts, IndexBuildReport* report) {
  IndexBuildReport local;
  IndexBuildReport& rep = report != nullptr ? *report : local;

  auto t0 = std::chrono::steady_clock::now();
  std::vector<Document> docs = load_corpus(config.corpus_root, rep.load);
  rep.documents = docs.size();
  rep.t_load = seconds_since(t0);

  ChunkingOptions chunk_options;
  chunk_options.pattern.description = config.pattern_description;
  chunk_options.pattern.demonstrations = config.chunk_demos;
  chunk_options.fallback_regex = config.fallback_regex;
  chunk_options.retry_budget = config.chunk_retry;
  chunk_options.temperature = config.temp_index;
  chunk_options.max_tokens = config.max_tokens;
  chunk_options.step_budget = config.regex_step_budget;

  t0 = std::chrono::steady_clock::now();
  std::vector<Chunk> all_chunks;
  for (const auto& doc : docs) {
    ChunkOutcome outcome;
    auto chunks = chunk_with_pattern(doc, chunk_options, gateway, prompts, &outcome);
    if (outcome.method == ChunkMethod::Llm) ++rep.llm_chunked_docs;
    else ++rep.fallback_chunked_docs;
    for (auto& c : chunks) {
      if (c.preamble) ++rep.preamble_chunks;
      all_chunks.push_back(std::move(c));
    }
  }
  rep.chunks = all_chunks.size();
  rep.t_chunk = seconds_since(t0);

  RegexGenOptions regex_options;
  regex_options.demonstrations = config.extraction_demos;
  regex_options.retry_budget = config.regex_retry;
  regex_options.step_budget = config.regex_step_budget;
  regex_options.temperature = config.temp_index;
  regex_options.max_tokens = config.max_tokens;

  t0 = std::chrono::steady_clock::now();
  RegexCache cache;
  std::vector<Triple> triples;
  for (const auto& chunk : all_chunks) {
    if (chunk.preamble) continue;  // non-biographical by construction
    std::optional<ExtractionRegex> regex;
    std::string shape;
    if (config.regex_cache) {
      shape = pattern_shape_key(chunk.text);
      if (auto cached = cache.get(shape)) {
        if (validate_regex(*cached, chunk, config.regex_step_budget).accepted) {
          regex = cached;
          ++rep.cache_hits;
        }
      }
    }
    if (!regex) {
      regex = generate_regex(chunk, regex_options, gateway, prompts);
      if (regex && config.regex_cache) cache.put(shape, *regex);
    }
    if (regex) {
      auto extracted = apply_regex(*regex, chunk, config.head_role, config.regex_step_budget);
      if (!extracted.empty()) {
        ++rep.regex_chunks;
        for (auto& t : extracted) triples.push_back(std::move(t));
        continue;
      }
      // matched the chunk but produced nothing usable: fall through to plan B
    }
    try {
      DirectExtraction direct = extract_direct(chunk, gateway, prompts, config.temp_index,
                                               config.max_tokens);
      rep.dropped_lines += direct.dropped_lines;
      ++rep.planb_chunks;
      for (auto& t : direct.triples) triples.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.code() != Errc::ExtractionFailed) throw;
      ++rep.failed_chunks;  // chunk stays indexed as an orphan
    }
  }
  rep.triples = triples.size();
  rep.t_extract = seconds_since(t0);

  BuildOptions build_options;
  build_options.alias_relations = config.alias_relations;
  build_options.discriminator_relation = config.discriminator_relation;

  t0 = std::chrono::steady_clock::now();
  KnowledgeGraph graph = KnowledgeGraph::build(triples, all_chunks, build_options, &rep.graph);
  rep.t_graph = seconds_since(t0);
  return graph;
}

}  // namespace chronicler

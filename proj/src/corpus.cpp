#include "chronicler/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/regex.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

std::string doc_id_from_path(const std::filesystem::path& rel) {
  std::filesystem::path p = rel;
  p.replace_extension();
  std::string id = p.generic_string();
  return id;
}

std::vector<Chunk> chunks_from_starts(const Document& doc, std::vector<std::uint32_t> starts,
                                      std::uint32_t doc_len, bool first_is_preamble) {
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::uint32_t begin = starts[i];
    std::uint32_t end = i + 1 < starts.size() ? starts[i + 1] : doc_len;
    if (begin >= end) continue;
    Chunk c;
    c.doc_id = doc.id;
    c.start = begin;
    c.end = end;
    c.text = utf8_slice(doc.text, begin, end);
    c.preamble = first_is_preamble && i == 0;
    chunks.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    chunks[i].id = doc.id + "#" + std::to_string(i);
  }
  return chunks;
}

// Parses "one integer per line" boundary output. Returns false on any
// non-integer line or if nothing was found.
bool parse_boundary_lines(const std::string& content, std::vector<std::uint32_t>& out) {
  out.clear();
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (!std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return false;
    }
    try {
      out.push_back(static_cast<std::uint32_t>(std::stoul(t)));
    } catch (const std::exception&) {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

std::vector<Document> load_corpus(const std::filesystem::path& root, LoadReport& report) {
  namespace fs = std::filesystem;
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw Error(Errc::IoError, "corpus root is not a directory: " + root.string());
  }
  std::vector<Document> docs;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      report.failures.push_back({file.string(), "unreadable"});
      continue;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.empty()) {
      report.failures.push_back({file.string(), "empty file"});
      continue;
    }
    if (!utf8_valid(text)) {
      report.failures.push_back({file.string(), "invalid UTF-8"});
      continue;
    }
    Document d;
    d.id = doc_id_from_path(fs::relative(file, root));
    d.title = file.stem().string();
    d.text = std::move(text);
    d.source = file.string();
    docs.push_back(std::move(d));
  }
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].id == docs[i - 1].id) {
      throw Error(Errc::InvalidData, "duplicate document id " + docs[i].id);
    }
  }
  report.loaded = docs.size();
  if (docs.empty()) {
    throw Error(Errc::EmptyCorpus, "no loadable documents under " + root.string());
  }
  return docs;
}

std::vector<Chunk> chunk_fallback(const Document& doc, const std::string& boundary_regex,
                                  std::uint64_t step_budget) {
  if (doc.text.empty()) {
    throw Error(Errc::InvalidData, "document " + doc.id + " has empty text");
  }
  rx::Program prog = rx::compile(boundary_regex);  // throws InvalidPattern
  std::u32string utext = utf8_decode(doc.text);
  rx::FindAllResult found = rx::find_all(prog, utext, step_budget);
  if (found.budget_exceeded) {
    throw Error(Errc::InvalidPattern, "boundary regex exceeded its step budget");
  }
  std::uint32_t doc_len = static_cast<std::uint32_t>(utext.size());
  std::vector<std::uint32_t> starts;
  for (const auto& m : found.matches) {
    auto b = static_cast<std::uint32_t>(m.begin());
    if (b < doc_len && (starts.empty() || b > starts.back())) starts.push_back(b);
  }
  bool preamble = false;
  if (starts.empty() || starts.front() != 0) {
    starts.insert(starts.begin(), 0);
    preamble = !starts.empty() && starts.size() > 1;
  }
  auto chunks = chunks_from_starts(doc, std::move(starts), doc_len, preamble);
  check_chunks(doc, chunks);
  return chunks;
}

std::vector<Chunk> chunk_with_pattern(const Document& doc, const ChunkingOptions& options,
                                      LlmGateway& gateway, const PromptLibrary& prompts,
                                      ChunkOutcome* outcome) {
  if (options.pattern.demonstrations.empty()) {
    throw Error(Errc::InvalidData, "chunking pattern needs at least one demonstration");
  }
  std::uint32_t doc_len = static_cast<std::uint32_t>(utf8_length(doc.text));

  std::string demos;
  for (const auto& d : options.pattern.demonstrations) {
    demos += "EXCERPT:\n" + d.excerpt + "\nCHUNK START OFFSETS:\n";
    for (auto b : d.boundaries) demos += std::to_string(b) + "\n";
    demos += "\n";
  }

  int attempts = 0;
  for (int attempt = 0; attempt <= options.retry_budget; ++attempt) {
    std::string prompt = prompts.render(
        "chunk_boundaries",
        {{"pattern", options.pattern.description},
         {"demonstrations", demos},
         {"length", std::to_string(doc_len)},
         {"document", doc.text}});
    ChatResponse resp;
    try {
      resp = gateway.chat(ChatRequest::user("chunk", "", prompt, options.temperature,
                                            options.max_tokens));
      ++attempts;
    } catch (const Error& e) {
      if (e.code() == Errc::GatewayUnavailable) {
        ++attempts;
        break;  // transport dead: go straight to the fallback
      }
      throw;
    }
    std::vector<std::uint32_t> bounds;
    if (!parse_boundary_lines(resp.content, bounds)) continue;
    // A trailing offset equal to the document length is accepted as a
    // harmless end marker.
    if (!bounds.empty() && bounds.back() == doc_len) bounds.pop_back();
    if (bounds.empty()) continue;
    bool ok = bounds.front() <= doc_len;
    for (std::size_t i = 0; ok && i < bounds.size(); ++i) {
      if (bounds[i] >= doc_len) ok = false;
      if (i > 0 && bounds[i] <= bounds[i - 1]) ok = false;
    }
    if (!ok) continue;
    bool preamble = bounds.front() != 0;
    if (preamble) bounds.insert(bounds.begin(), 0);
    auto chunks = chunks_from_starts(doc, std::move(bounds), doc_len, preamble);
    try {
      check_chunks(doc, chunks);
    } catch (const Error&) {
      continue;
    }
    if (outcome != nullptr) {
      outcome->method = ChunkMethod::Llm;
      outcome->attempts = attempts;
    }
    return chunks;
  }

  if (options.fallback_regex.empty()) {
    throw Error(Errc::ChunkingFailed,
                "LLM chunking failed for " + doc.id + " and no fallback regex is configured");
  }
  std::vector<Chunk> chunks;
  try {
    chunks = chunk_fallback(doc, options.fallback_regex, options.step_budget);
  } catch (const Error& e) {
    throw Error(Errc::ChunkingFailed, "fallback chunking failed for " + doc.id + ": " + e.message());
  }
  if (outcome != nullptr) {
    outcome->method = ChunkMethod::Fallback;
    outcome->attempts = attempts;
  }
  return chunks;
}

void check_chunks(const Document& doc, const std::vector<Chunk>& chunks) {
  std::uint32_t doc_len = static_cast<std::uint32_t>(utf8_length(doc.text));
  std::uint32_t prev_end = 0;
  bool first = true;
  for (const auto& c : chunks) {
    if (c.doc_id != doc.id) throw Error(Errc::InvalidData, "chunk doc_id mismatch");
    if (!(c.start < c.end && c.end <= doc_len)) {
      throw Error(Errc::InvalidData, "chunk span out of range in " + doc.id);
    }
    if (!first && c.start < prev_end) {
      throw Error(Errc::InvalidData, "overlapping chunks in " + doc.id);
    }
    if (c.text != utf8_slice(doc.text, c.start, c.end)) {
      throw Error(Errc::InvalidData, "chunk text is not the verbatim slice in " + doc.id);
    }
    prev_end = c.end;
    first = false;
  }
}

}  // namespace chronicler

#include "chronicler/extraction.hpp"

#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/regex.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

RegexValidation validate_regex(const ExtractionRegex& candidate, const Chunk& chunk,
                               std::uint64_t step_budget) {
  RegexValidation v;
  rx::Program prog;
  try {
    prog = rx::compile(candidate.pattern);
  } catch (const Error& e) {
    v.reason = "compile error: " + e.message();
    return v;
  }
  if (static_cast<std::size_t>(prog.group_count) != candidate.capture_roles.size()) {
    v.reason = "capture group count " + std::to_string(prog.group_count) +
               " does not match " + std::to_string(candidate.capture_roles.size()) +
               " roles";
    return v;
  }
  if (prog.group_count == 0) {
    v.reason = "pattern has no capture groups";
    return v;
  }
  for (const auto& role : candidate.capture_roles) {
    if (trim(role).empty()) {
      v.reason = "empty capture role";
      return v;
    }
  }
  std::u32string utext = utf8_decode(chunk.text);
  rx::FindAllResult found = rx::find_all(prog, utext, step_budget);
  if (found.budget_exceeded) {
    v.reason = "step budget exceeded";
    return v;
  }
  if (found.matches.empty()) {
    v.reason = "no match on the chunk";
    return v;
  }
  v.accepted = true;
  return v;
}

std::vector<Triple> apply_regex(const ExtractionRegex& regex, const Chunk& chunk,
                                const std::string& head_role, std::uint64_t step_budget) {
  rx::Program prog = rx::compile(regex.pattern);
  if (static_cast<std::size_t>(prog.group_count) != regex.capture_roles.size()) {
    throw Error(Errc::InvalidPattern, "role/group arity mismatch");
  }
  std::size_t head_idx = 0;
  if (!head_role.empty()) {
    bool found_role = false;
    for (std::size_t i = 0; i < regex.capture_roles.size(); ++i) {
      if (regex.capture_roles[i] == head_role) {
        head_idx = i;
        found_role = true;
        break;
      }
    }
    if (!found_role) {
      throw Error(Errc::InvalidData, "head role '" + head_role + "' not among capture roles");
    }
  }
  std::u32string utext = utf8_decode(chunk.text);
  rx::FindAllResult found = rx::find_all(prog, utext, step_budget);
  if (found.budget_exceeded) {
    throw Error(Errc::InvalidPattern, "step budget exceeded while applying regex");
  }
  std::vector<Triple> out;
  for (const auto& m : found.matches) {
    auto capture = [&](std::size_t group1) -> std::string {
      int g = static_cast<int>(group1);
      if (!m.group_set(g)) return "";
      auto b = static_cast<std::size_t>(m.slots[2 * g]);
      auto e = static_cast<std::size_t>(m.slots[2 * g + 1]);
      return trim(utf8_encode(std::u32string_view(utext).substr(b, e - b)));
    };
    std::string head = capture(head_idx + 1);
    if (head.empty()) continue;
    for (std::size_t i = 0; i < regex.capture_roles.size(); ++i) {
      if (i == head_idx) continue;
      std::string tail = capture(i + 1);
      if (tail.empty()) continue;
      Triple t;
      t.head = head;
      t.relation = regex.capture_roles[i];
      t.tail = std::move(tail);
      t.chunk_id = chunk.id;
      t.provenance = Triple::Provenance::Regex;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::optional<ExtractionRegex> generate_regex(const Chunk& chunk,
                                              const RegexGenOptions& options,
                                              LlmGateway& gateway,
                                              const PromptLibrary& prompts) {
  if (options.demonstrations.empty()) {
    throw Error(Errc::InvalidData, "regex generation needs at least one demonstration");
  }
  std::string demos;
  for (const auto& d : options.demonstrations) {
    demos += "CHUNK:\n" + d.excerpt + "\nPATTERN:\n" + d.pattern + "\nROLES:\n";
    for (std::size_t i = 0; i < d.roles.size(); ++i) {
      if (i) demos += "\t";
      demos += d.roles[i];
    }
    demos += "\n\n";
  }
  for (int attempt = 0; attempt <= options.retry_budget; ++attempt) {
    std::string prompt =
        prompts.render("regex_generate", {{"demonstrations", demos}, {"chunk", chunk.text}});
    ChatResponse resp;
    try {
      resp = gateway.chat(
          ChatRequest::user("regex", "", prompt, options.temperature, options.max_tokens));
    } catch (const Error& e) {
      if (e.code() == Errc::GatewayUnavailable) return std::nullopt;
      throw;
    }
    // Expected response: pattern on the first line, tab-separated roles on
    // the second.
    std::istringstream in(resp.content);
    std::string pattern_line, roles_line;
    if (!std::getline(in, pattern_line)) continue;
    std::getline(in, roles_line);
    ExtractionRegex candidate;
    candidate.pattern = trim(pattern_line);
    for (auto& r : split_fields(trim(roles_line), '\t')) {
      std::string t = trim(r);
      if (!t.empty()) candidate.capture_roles.push_back(std::move(t));
    }
    candidate.origin = ExtractionRegex::Origin::LlmGenerated;
    if (candidate.pattern.empty()) continue;
    if (validate_regex(candidate, chunk, options.step_budget).accepted) {
      return candidate;
    }
  }
  return std::nullopt;
}

DirectExtraction extract_direct(const Chunk& chunk, LlmGateway& gateway,
                                const PromptLibrary& prompts, double temperature,
                                int max_tokens) {
  std::string prompt = prompts.render("extract_direct", {{"chunk", chunk.text}});
  ChatResponse resp;
  try {
    resp = gateway.chat(ChatRequest::user("extract", "", prompt, temperature, max_tokens));
  } catch (const Error& e) {
    if (e.code() == Errc::GatewayUnavailable) {
      throw Error(Errc::ExtractionFailed, "gateway unavailable for chunk " + chunk.id);
    }
    throw;
  }
  DirectExtraction out;
  std::istringstream in(resp.content);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3) {
      ++out.dropped_lines;
      continue;
    }
    Triple t;
    t.head = trim(fields[0]);
    t.relation = trim(fields[1]);
    t.tail = trim(fields[2]);
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) {
      ++out.dropped_lines;
      continue;
    }
    t.chunk_id = chunk.id;
    t.provenance = Triple::Provenance::LlmDirect;
    out.triples.push_back(std::move(t));
  }
  return out;
}

std::string pattern_shape_key(const std::string& chunk_text) {
  std::u32string in = utf8_decode(chunk_text);
  std::u32string shape;
  char32_t prev = 0;
  for (char32_t c : in) {
    char32_t mapped;
    if (is_cjk(c)) mapped = U'c';
    else if (c >= U'0' && c <= U'9') mapped = U'0';
    else if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || c > 0x7F) mapped = U'a';
    else if (is_space_char(c)) mapped = U' ';
    else mapped = c;  // punctuation is the structure we key on
    if (mapped != prev || (mapped != U'a' && mapped != U'c' && mapped != U'0' && mapped != U' ')) {
      shape.push_back(mapped);
    }
    prev = mapped;
  }
  return fnv1a_hex(utf8_encode(shape));
}

std::optional<ExtractionRegex> RegexCache::get(const std::string& shape_key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = by_shape_.find(shape_key);
  if (it == by_shape_.end()) return std::nullopt;
  return it->second;
}

void RegexCache::put(const std::string& shape_key, ExtractionRegex regex) {
  std::lock_guard<std::mutex> lock(mu_);
  by_shape_.emplace(shape_key, std::move(regex));
}

std::size_t RegexCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return by_shape_.size();
}

}  // namespace chronicler

#include "chronicler/verifier.hpp"

#include <algorithm>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

std::string_view subtype_name(ErrorSubtype s) {
  switch (s) {
    case ErrorSubtype::EraConflict: return "ERA";
    case ErrorSubtype::RefConflict: return "REF";
    case ErrorSubtype::KnowledgeLack: return "KNOWLEDGE";
    case ErrorSubtype::AliasConflict: return "ALIAS";
    case ErrorSubtype::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<ErrorSubtype> subtype_from(std::string_view token) {
  if (token == "ERA") return ErrorSubtype::EraConflict;
  if (token == "REF") return ErrorSubtype::RefConflict;
  if (token == "KNOWLEDGE") return ErrorSubtype::KnowledgeLack;
  if (token == "ALIAS") return ErrorSubtype::AliasConflict;
  if (token == "OTHER") return ErrorSubtype::Other;
  return std::nullopt;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) {
    if (b.count(x)) ++inter;
  }
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_text(std::string_view a, std::string_view b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  return jaccard(std::set<std::string>(ta.begin(), ta.end()),
                 std::set<std::string>(tb.begin(), tb.end()));
}

std::vector<AtomicFact> decompose_atomic_facts(const std::string& sentence,
                                               int sentence_index, LlmGateway& gateway,
                                               const PromptLibrary& prompts,
                                               std::size_t max_facts) {
  if (trim(sentence).empty()) {
    throw Error(Errc::InvalidData, "cannot decompose an empty sentence");
  }
  auto whole = [&] {
    return std::vector<AtomicFact>{AtomicFact{sentence, sentence_index}};
  };
  std::string prompt = prompts.render("decompose_facts", {{"sentence", sentence}});
  ChatResponse resp;
  try {
    resp = gateway.chat(ChatRequest::user("decompose", "", prompt));
  } catch (const Error& e) {
    if (e.code() == Errc::GatewayUnavailable) return whole();
    throw;
  }
  std::vector<AtomicFact> facts;
  std::istringstream in(resp.content);
  std::string line;
  while (std::getline(in, line) && facts.size() < max_facts) {
    std::string t = trim(line);
    if (t.empty()) continue;
    facts.push_back(AtomicFact{std::move(t), sentence_index});
  }
  if (facts.empty()) return whole();
  return facts;
}

std::vector<Chunk> filter_references(const AtomicFact& fact, const std::vector<Chunk>& refs,
                                     std::size_t k, double floor,
                                     std::map<std::string, double>* scores_out) {
  if (k < 1) throw Error(Errc::InvalidData, "filter k must be >= 1");
  if (floor < 0.0 || floor > 1.0) throw Error(Errc::InvalidData, "floor must lie in [0,1]");
  if (refs.empty()) return {};

  auto fact_tokens_vec = tokenize(fact.text);
  std::set<std::string> fact_tokens(fact_tokens_vec.begin(), fact_tokens_vec.end());

  struct Scored {
    std::size_t index;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto ct = tokenize(refs[i].text);
    double s = jaccard(fact_tokens, std::set<std::string>(ct.begin(), ct.end()));
    if (scores_out != nullptr) (*scores_out)[refs[i].id] = s;
    scored.push_back(Scored{i, s});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return a.score > b.score;  // stable: retrieval order breaks ties
  });

  std::vector<std::size_t> keep;
  for (const auto& s : scored) {
    if (keep.size() >= k) break;
    if (s.score >= floor) keep.push_back(s.index);
  }
  if (keep.empty()) keep.push_back(scored.front().index);  // safety net

  std::sort(keep.begin(), keep.end());  // restore retrieval order
  std::vector<Chunk> out;
  for (std::size_t i : keep) out.push_back(refs[i]);
  return out;
}

std::optional<Verdict> parse_verdict(const std::string& response, const AtomicFact& fact,
                                     const std::vector<Chunk>& refs) {
  std::set<std::string> known;
  for (const auto& c : refs) known.insert(c.id);

  std::istringstream in(response);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  auto fields = split_fields(trim(line), '\t');
  if (fields.empty()) return std::nullopt;

  Verdict v;
  v.fact = fact;

  auto parse_evidence = [&](std::size_t at) -> bool {
    if (at + 1 >= fields.size()) return false;
    EvidenceItem item{fields.at(at), tsv_unescape(fields.at(at + 1))};
    if (!known.count(item.chunk_id)) return false;  // must cite a provided ref
    if (trim(item.snippet).empty()) return false;
    v.evidence.push_back(std::move(item));
    return true;
  };

  const std::string& status = fields[0];
  if (status == "SUPPORTED") {
    v.status = VerdictStatus::Supported;
    if (fields.size() != 3 || !parse_evidence(1)) return std::nullopt;
  } else if (status == "NOT_INCLUDED") {
    if (fields.size() != 1) return std::nullopt;  // evidence must be empty
    v.status = VerdictStatus::NotIncluded;
  } else if (status == "NOT_SUPPORTED") {
    v.status = VerdictStatus::NotSupported;
    if (fields.size() < 2) return std::nullopt;
    auto sub = subtype_from(fields[1]);
    if (!sub) return std::nullopt;
    v.subtype = sub;
    if (fields.size() == 4) {
      if (!parse_evidence(2)) return std::nullopt;
    } else if (fields.size() != 2) {
      return std::nullopt;
    }
  } else {
    return std::nullopt;
  }

  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    auto extra = split_fields(t, '\t');
    if (extra.size() != 3 || extra[0] != "EVIDENCE") return std::nullopt;
    if (v.status == VerdictStatus::NotIncluded) return std::nullopt;
    EvidenceItem item{extra[1], tsv_unescape(extra[2])};
    if (!known.count(item.chunk_id) || trim(item.snippet).empty()) return std::nullopt;
    v.evidence.push_back(std::move(item));
  }

  if (v.status == VerdictStatus::Supported && v.evidence.empty()) return std::nullopt;
  return v;
}

std::string format_verdict(const Verdict& verdict) {
  std::string out;
  switch (verdict.status) {
    case VerdictStatus::Supported:
      out = "SUPPORTED";
      break;
    case VerdictStatus::NotIncluded:
      return "NOT_INCLUDED";
    case VerdictStatus::NotSupported:
      out = "NOT_SUPPORTED\t" +
            std::string(subtype_name(verdict.subtype.value_or(ErrorSubtype::Other)));
      break;
  }
  bool first = true;
  for (const auto& e : verdict.evidence) {
    if (first && verdict.status == VerdictStatus::Supported) {
      out += "\t" + e.chunk_id + "\t" + tsv_escape(e.snippet);
      first = false;
    } else if (first && verdict.status == VerdictStatus::NotSupported) {
      out += "\t" + e.chunk_id + "\t" + tsv_escape(e.snippet);
      first = false;
    } else {
      out += "\nEVIDENCE\t" + e.chunk_id + "\t" + tsv_escape(e.snippet);
    }
  }
  return out;
}

Verdict check_support(const AtomicFact& fact, const std::vector<Chunk>& refs,
                      LlmGateway& gateway, const PromptLibrary& prompts,
                      int retry_budget) {
  Verdict fallback;
  fallback.fact = fact;
  if (refs.empty()) {
    fallback.status = VerdictStatus::NotIncluded;
    return fallback;  // short-circuit: no gateway call
  }

  std::string refs_text;
  for (const auto& c : refs) {
    refs_text += "[" + c.id + "] " + c.text + "\n";
  }
  std::string raw;
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    std::string prompt =
        prompts.render("check_support", {{"fact", fact.text}, {"references", refs_text}});
    ChatResponse resp;
    try {
      resp = gateway.chat(ChatRequest::user("verify", "", prompt));
    } catch (const Error& e) {
      if (e.code() != Errc::GatewayUnavailable) throw;
      fallback.status = VerdictStatus::NotSupported;
      fallback.subtype = ErrorSubtype::Other;
      fallback.low_confidence = true;
      fallback.raw_response = "gateway unavailable";
      return fallback;
    }
    raw = resp.content;
    if (auto v = parse_verdict(resp.content, fact, refs)) return *v;
  }
  fallback.status = VerdictStatus::NotSupported;
  fallback.subtype = ErrorSubtype::Other;
  fallback.low_confidence = true;
  fallback.raw_response = raw;
  return fallback;
}

}  // namespace chronicler

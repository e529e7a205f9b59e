#include "chronicler/remediation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"
#include "httplib.h"

namespace chronicler {

std::string_view solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::Regenerator: return "regenerator";
    case SolverKind::Era: return "era";
    case SolverKind::RefConflict: return "ref_conflict";
    case SolverKind::Knowledge: return "knowledge";
    case SolverKind::Alias: return "alias";
    case SolverKind::Generic: return "generic";
  }
  return "generic";
}

SolverKind route(const Verdict& verdict) {
  if (verdict.status == VerdictStatus::Supported) {
    throw Error(Errc::InvalidData, "route() called on a supported verdict");
  }
  if (verdict.status == VerdictStatus::NotIncluded) return SolverKind::Regenerator;
  switch (verdict.subtype.value_or(ErrorSubtype::Other)) {
    case ErrorSubtype::EraConflict: return SolverKind::Era;
    case ErrorSubtype::RefConflict: return SolverKind::RefConflict;
    case ErrorSubtype::KnowledgeLack: return SolverKind::Knowledge;
    case ErrorSubtype::AliasConflict: return SolverKind::Alias;
    case ErrorSubtype::Other: return SolverKind::Generic;
  }
  return SolverKind::Generic;
}

namespace {

struct Splice {
  std::size_t begin;
  std::size_t end;
  std::u32string replacement;
};

std::string apply_splices(const std::string& text, std::vector<Splice> splices) {
  std::u32string out = utf8_decode(text);
  std::sort(splices.begin(), splices.end(),
            [](const Splice& a, const Splice& b) { return a.begin > b.begin; });
  std::size_t last_begin = std::u32string::npos;
  for (const auto& s : splices) {
    if (s.end > out.size() || s.begin > s.end) continue;
    if (last_begin != std::u32string::npos && s.end > last_begin) continue;  // overlap guard
    out.replace(s.begin, s.end - s.begin, s.replacement);
    last_begin = s.begin;
  }
  return utf8_encode(out);
}

// Best dated reading of a snippet: the Gregorian year of the first era
// mention that converts, else the first stated or bare year.
struct DatedReading {
  int year = 0;
  std::optional<EraMention> mention;  // set when an era phrase was parsed
  std::string source_text;
};

std::optional<DatedReading> read_date(const std::string& text, const EraTable& table) {
  auto mentions = find_era_mentions(table, text);
  for (const auto& m : mentions) {
    try {
      int year = era_to_gregorian(table, m.date);
      return DatedReading{year, m, text};
    } catch (const Error&) {
      if (m.stated_year) return DatedReading{*m.stated_year, m, text};
    }
  }
  auto bare = find_bare_years(text, mentions);
  if (!bare.empty()) return DatedReading{bare.front().year, std::nullopt, text};
  return std::nullopt;
}

std::string phrase_of(const DatedReading& r) {
  if (!r.mention) return {};
  return utf8_encode(utf8_decode(r.source_text)
                         .substr(r.mention->phrase_begin,
                                 r.mention->phrase_end - r.mention->phrase_begin));
}

}  // namespace

std::optional<Resolution> solve_era_conflict(const AtomicFact& fact,
                                             const std::string& sentence,
                                             const std::vector<EvidenceItem>& evidence,
                                             const EraTable& table) {
  std::optional<DatedReading> ref_reading;
  for (const auto& e : evidence) {
    ref_reading = read_date(e.snippet, table);
    if (ref_reading) break;
  }
  std::optional<DatedReading> fact_reading = read_date(fact.text, table);
  if (!fact_reading) fact_reading = read_date(sentence, table);
  if (!ref_reading || !fact_reading) return std::nullopt;  // escalate

  if (ref_reading->year == fact_reading->year) {
    Resolution r;
    r.action = Resolution::Action::Accept;
    r.solver = SolverKind::Era;
    r.rationale = "fact and reference both resolve to " + std::to_string(ref_reading->year) +
                  "; verifier false alarm";
    return r;
  }

  const int wrong_year = fact_reading->year;
  const int right_year = ref_reading->year;
  const std::string right_phrase = phrase_of(*ref_reading);

  auto sentence_mentions = find_era_mentions(table, sentence);
  std::vector<Splice> splices;
  for (const auto& m : sentence_mentions) {
    int mention_year = 0;
    try {
      mention_year = era_to_gregorian(table, m.date);
    } catch (const Error&) {
      mention_year = m.stated_year.value_or(0);
    }
    if (mention_year != wrong_year) continue;
    if (!right_phrase.empty()) {
      splices.push_back(Splice{m.phrase_begin, m.phrase_end, utf8_decode(right_phrase)});
    }
    if (m.stated_year) {
      splices.push_back(
          Splice{m.year_begin, m.year_end, utf8_decode(std::to_string(right_year))});
    }
  }
  for (const auto& y : find_bare_years(sentence, sentence_mentions)) {
    if (y.year == wrong_year) {
      splices.push_back(Splice{y.begin, y.end, utf8_decode(std::to_string(right_year))});
    }
  }
  if (splices.empty()) return std::nullopt;  // nothing rewriteable: escalate

  Resolution r;
  r.action = Resolution::Action::ReplaceSentence;
  r.solver = SolverKind::Era;
  r.text = apply_splices(sentence, std::move(splices));
  r.rationale = "reference dates the event " + std::to_string(right_year) + ", not " +
                std::to_string(wrong_year);
  if (r.text.empty() || r.text == sentence) return std::nullopt;
  return r;
}

std::optional<Resolution> solve_alias_conflict(const AtomicFact& fact,
                                               const std::string& sentence,
                                               const EntityNode& node) {
  std::u32string usent = utf8_decode(sentence);
  auto attested = [&](const std::string& name) {
    if (normalize_name(name) == normalize_name(node.canonical_name)) return true;
    for (const auto& a : node.aliases) {
      if (normalize_name(a) == normalize_name(name)) return true;
    }
    return false;
  };
  auto find_u32 = [&](const std::string& needle) -> std::size_t {
    return usent.find(utf8_decode(needle));
  };

  std::vector<Splice> splices;

  // Drop "…, styled X"/"，字X" phrases naming something not attested. The
  // name is read up to the next punctuation; if neither that reading nor its
  // first token is attested, the phrase goes (the rewrite is re-verified by
  // the caller, so residue cannot slip through unchecked).
  static const std::vector<std::pair<std::u32string, bool>> kIntroducers = {
      {U", styled ", false}, {U", nicknamed ", false}, {U"，字", true}, {U"，号", true}};
  for (const auto& [intro, cjk] : kIntroducers) {
    std::size_t at = 0;
    while ((at = usent.find(intro, at)) != std::u32string::npos) {
      std::size_t name_begin = at + intro.size();
      std::size_t full_end = name_begin;
      while (full_end < usent.size()) {
        char32_t c = usent[full_end];
        bool stop = cjk ? !is_cjk(c)
                        : c == U',' || c == U'.' || c == U';' || c == 0x3002 ||
                              c == 0xFF0C || c == 0xFF1B;
        if (stop) break;
        ++full_end;
      }
      std::size_t token_end = name_begin;
      while (token_end < full_end && !is_space_char(usent[token_end])) ++token_end;
      std::string full = trim(utf8_encode(usent.substr(name_begin, full_end - name_begin)));
      std::string token = trim(utf8_encode(usent.substr(name_begin, token_end - name_begin)));
      if (!full.empty() && !attested(full) && (token.empty() || !attested(token))) {
        splices.push_back(Splice{at, token.empty() || token == full ? full_end : token_end, U""});
      }
      at = full_end;
    }
  }

  if (!splices.empty()) {
    Resolution r;
    r.action = Resolution::Action::ReplaceSentence;
    r.solver = SolverKind::Alias;
    r.text = apply_splices(sentence, std::move(splices));
    r.rationale = "removed alias not attested for " + node.canonical_name;
    if (r.text == sentence) return std::nullopt;
    return r;
  }

  // Canonical name already present: nothing to fix.
  if (find_u32(node.canonical_name) != std::u32string::npos) {
    Resolution r;
    r.action = Resolution::Action::Accept;
    r.solver = SolverKind::Alias;
    r.rationale = "canonical name already present";
    return r;
  }

  // An attested alias is used alone: present canonical + alias.
  for (const auto& alias : node.aliases) {
    std::size_t at = find_u32(alias);
    if (at == std::u32string::npos) continue;
    bool cjk_name = false;
    for (char32_t c : utf8_decode(node.canonical_name)) {
      if (is_cjk(c)) cjk_name = true;
    }
    std::string joined = cjk_name ? node.canonical_name + utf8_encode(U"，字") + alias
                                  : node.canonical_name + ", styled " + alias;
    Resolution r;
    r.action = Resolution::Action::ReplaceSentence;
    r.solver = SolverKind::Alias;
    std::vector<Splice> s{
        Splice{at, at + utf8_decode(alias).size(), utf8_decode(joined)}};
    r.text = apply_splices(sentence, std::move(s));
    r.rationale = "presented canonical name with attested alias '" + alias + "'";
    return r;
  }

  (void)fact;
  return std::nullopt;
}

// --- ReviewStore ---------------------------------------------------------------

ReviewStore::ReviewStore(std::filesystem::path file) : file_(std::move(file)) {}

void ReviewStore::append(const Ticket& ticket) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(Errc::ReviewStoreError, "cannot append to review store " + file_.string());
  }
  out << "ticket\t" << ticket.id << "\t" << tsv_escape(ticket.figure) << "\t"
      << ticket.sentence_index << "\t" << tsv_escape(ticket.fact) << "\t"
      << tsv_escape(ticket.run_dir) << "\n";
  for (const auto& c : ticket.candidates) {
    out << "cand\t" << ticket.id << "\t" << c.id << "\t" << tsv_escape(c.chunk_id) << "\t"
        << tsv_escape(c.snippet) << "\t" << tsv_escape(c.replacement) << "\n";
  }
  out.flush();
  if (!out.good()) {
    throw Error(Errc::ReviewStoreError, "short write to review store " + file_.string());
  }
}

std::vector<Ticket> ReviewStore::tickets() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Ticket> out;
  std::map<std::string, std::size_t> by_id;
  std::ifstream in(file_, std::ios::binary);
  if (!in) return out;  // no store yet: nothing pending
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_fields(line, '\t');
    auto bad = [&](const char* what) {
      return Error(Errc::ReviewStoreError, std::string("review store line ") +
                                               std::to_string(lineno) + ": " + what);
    };
    if (f[0] == "ticket") {
      if (f.size() != 6) throw bad("malformed ticket record");
      Ticket t;
      t.id = f[1];
      t.figure = tsv_unescape(f[2]);
      t.sentence_index = std::stoi(f[3]);
      t.fact = tsv_unescape(f[4]);
      t.run_dir = tsv_unescape(f[5]);
      by_id[t.id] = out.size();
      out.push_back(std::move(t));
    } else if (f[0] == "cand") {
      if (f.size() != 6) throw bad("malformed cand record");
      auto it = by_id.find(f[1]);
      if (it == by_id.end()) throw bad("cand before ticket");
      out[it->second].candidates.push_back(
          TicketCandidate{f[2], tsv_unescape(f[3]), tsv_unescape(f[4]), tsv_unescape(f[5])});
    } else if (f[0] == "resolve") {
      if (f.size() != 3) throw bad("malformed resolve record");
      auto it = by_id.find(f[1]);
      if (it == by_id.end()) throw bad("resolve before ticket");
      out[it->second].resolved = true;
      out[it->second].chosen = f[2];
    } else {
      throw bad("unknown record kind");
    }
  }
  return out;
}

std::vector<Ticket> ReviewStore::open_tickets() const {
  std::vector<Ticket> all = tickets();
  std::vector<Ticket> open;
  for (auto& t : all) {
    if (!t.resolved) open.push_back(std::move(t));
  }
  return open;
}

std::optional<Ticket> ReviewStore::find(const std::string& ticket_id) const {
  for (auto& t : tickets()) {
    if (t.id == ticket_id) return t;
  }
  return std::nullopt;
}

ReviewStore::ResolveOutcome ReviewStore::resolve(const std::string& ticket_id,
                                                 const std::string& candidate_id) {
  auto ticket = find(ticket_id);
  if (!ticket) throw Error(Errc::InvalidTicket, "no ticket " + ticket_id);
  if (ticket->resolved) {
    return ResolveOutcome{*ticket, true};  // idempotent no-op
  }
  bool known = std::any_of(ticket->candidates.begin(), ticket->candidates.end(),
                           [&](const TicketCandidate& c) { return c.id == candidate_id; });
  if (!known) {
    throw Error(Errc::InvalidTicket,
                "ticket " + ticket_id + " has no candidate " + candidate_id);
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    if (!out) {
      throw Error(Errc::ReviewStoreError, "cannot append to review store " + file_.string());
    }
    out << "resolve\t" << ticket_id << "\t" << candidate_id << "\n";
    out.flush();
    if (!out.good()) {
      throw Error(Errc::ReviewStoreError, "short write to review store " + file_.string());
    }
  }
  ticket->resolved = true;
  ticket->chosen = candidate_id;
  return ResolveOutcome{*ticket, false};
}

std::string make_ticket_id(const std::string& figure, int sentence_index,
                           const std::string& fact) {
  return "t" + fnv1a_hex(figure + "\x1f" + std::to_string(sentence_index) + "\x1f" + fact);
}

Resolution solve_ref_conflict(const AtomicFact& fact, const std::string& sentence,
                              const std::vector<EvidenceItem>& evidence,
                              const std::string& figure, int sentence_index,
                              const std::string& run_dir, const EraTable& table,
                              ReviewStore& store) {
  if (evidence.size() < 2) {
    throw Error(Errc::InvalidData, "ref-conflict needs at least two evidence snippets");
  }
  Ticket ticket;
  ticket.id = make_ticket_id(figure, sentence_index, fact.text);
  ticket.figure = figure;
  ticket.sentence_index = sentence_index;
  ticket.fact = fact.text;
  ticket.run_dir = run_dir;
  std::string cand_id = "a";
  for (const auto& e : evidence) {
    TicketCandidate c;
    c.id = cand_id;
    cand_id[0] = static_cast<char>(cand_id[0] + 1);
    c.chunk_id = e.chunk_id;
    c.snippet = e.snippet;
    // When both sides date the fact, the candidate is the sentence with the
    // snippet's year patched in; otherwise the snippet itself stands in.
    c.replacement = sentence;
    auto ev = read_date(e.snippet, table);
    auto in_sentence = read_date(sentence, table);
    if (ev && in_sentence && ev->year != in_sentence->year) {
      auto fixed = solve_era_conflict(fact, sentence, {e}, table);
      if (fixed && fixed->action == Resolution::Action::ReplaceSentence) {
        c.replacement = fixed->text;
      }
    } else if (!in_sentence) {
      c.replacement = e.snippet;
    }
    ticket.candidates.push_back(std::move(c));
  }
  store.append(ticket);  // ReviewStoreError propagates: pipeline must abort

  Resolution r;
  r.action = Resolution::Action::PendingHuman;
  r.solver = SolverKind::RefConflict;
  r.ticket_id = ticket.id;
  r.rationale = "references disagree; queued for expert review";
  return r;
}

// --- external lookup ----------------------------------------------------------

SnapshotLookup::SnapshotLookup(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open snapshot " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split_fields(line, '\t');
    if (f.size() != 2) {
      throw Error(Errc::InvalidData, "snapshot lines are key<TAB>text");
    }
    entries_.emplace_back(f[0], tsv_unescape(f[1]));
  }
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.first.size() != b.first.size() ? a.first.size() > b.first.size()
                                            : a.first < b.first;
  });
}

std::optional<std::string> SnapshotLookup::lookup(const std::string& query) {
  for (const auto& [key, text] : entries_) {
    if (query.find(key) != std::string::npos) return text;
  }
  return std::nullopt;
}

HttpLookup::HttpLookup(std::string endpoint, int timeout_sec)
    : endpoint_(std::move(endpoint)), timeout_sec_(timeout_sec) {}

std::optional<std::string> HttpLookup::lookup(const std::string& query) {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(timeout_sec_);
  client.set_read_timeout(timeout_sec_);
  httplib::Params params{{"q", query}};
  auto res = client.Get("/lookup", params, httplib::Headers{});
  if (!res) {
    throw Error(Errc::Transport, "lookup connection failed");
  }
  if (res->status != 200 || res->body.empty()) return std::nullopt;
  return res->body;
}

std::optional<Resolution> solve_knowledge_lack(const AtomicFact& fact,
                                               const std::string& sentence,
                                               ExternalLookup& external,
                                               LlmGateway& gateway,
                                               const PromptLibrary& prompts,
                                               const VerifyFn& verify, int rounds,
                                               std::vector<std::string>* consulted) {
  std::optional<std::string> info;
  try {
    info = external.lookup(fact.text);
  } catch (const Error&) {
    return std::nullopt;  // lookup unreachable: escalate, recorded by caller
  }
  if (!info || trim(*info).empty()) return std::nullopt;  // nothing found: escalate
  if (consulted != nullptr) consulted->push_back(*info);

  for (int round = 0; round < rounds; ++round) {
    ChatResponse resp;
    try {
      resp = gateway.chat(ChatRequest::user(
          "correct",
          "",
          prompts.render("correct_knowledge", {{"sentence", sentence},
                                               {"fact", fact.text},
                                               {"background", *info}})));
    } catch (const Error& e) {
      if (e.code() != Errc::GatewayUnavailable) throw;
      break;
    }
    std::string rewritten = trim(resp.content);
    if (rewritten.empty() || rewritten == sentence) continue;
    if (verify(rewritten)) {
      Resolution r;
      r.action = Resolution::Action::ReplaceSentence;
      r.solver = SolverKind::Knowledge;
      r.text = rewritten;
      r.rationale = "rewritten with external background and re-verified";
      return r;
    }
  }
  Resolution r;
  r.action = Resolution::Action::PendingHuman;
  r.solver = SolverKind::Knowledge;
  r.rationale = "rewrites kept failing verification";
  return r;
}

Resolution solve_other(const AtomicFact& fact, const Verdict& verdict,
                       const std::string& sentence, LlmGateway& gateway,
                       const PromptLibrary& prompts, const VerifyFn& verify, int rounds) {
  std::string error_text = format_verdict(verdict);
  for (int round = 0; round < rounds; ++round) {
    ChatResponse resp;
    try {
      resp = gateway.chat(ChatRequest::user(
          "correct",
          "",
          prompts.render("correct_generic", {{"sentence", sentence},
                                             {"fact", fact.text},
                                             {"verdict", error_text}})));
    } catch (const Error& e) {
      if (e.code() != Errc::GatewayUnavailable) throw;
      break;  // gateway down -> PendingHuman
    }
    std::string rewritten = trim(resp.content);
    if (rewritten.empty() || rewritten == sentence) continue;
    if (verify(rewritten)) {
      Resolution r;
      r.action = Resolution::Action::ReplaceSentence;
      r.solver = SolverKind::Generic;
      r.text = rewritten;
      r.rationale = "rewritten from error message and re-verified";
      return r;
    }
  }
  Resolution r;
  r.action = Resolution::Action::PendingHuman;
  r.solver = SolverKind::Generic;
  r.rationale = "rewrites kept failing verification";
  return r;
}

}  // namespace chronicler

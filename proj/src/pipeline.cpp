#include "chronicler/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

constexpr const char* kEndMarker = "<END>";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool starts_with_cjk(const std::string& s) {
  if (s.empty()) return false;
  return is_cjk(utf8_decode(utf8_slice(s, 0, std::min<std::size_t>(1, utf8_length(s))))[0]);
}

bool ends_with_cjk_terminator(const std::string& s) {
  if (s.empty()) return false;
  std::u32string u = utf8_decode(s);
  char32_t last = u.back();
  return last == 0x3002 || last == 0xFF01 || last == 0xFF1F || last == 0xFF1B;
}

std::string join_sentences(const std::vector<SentenceOut>& sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::string& text = sentences[i].text;
    if (i > 0 && !out.empty() && !ends_with_cjk_terminator(out) && !starts_with_cjk(text)) {
      out += " ";
    }
    out += text;
  }
  return out;
}

std::string terminal_of(const std::string& sentence) {
  if (sentence.empty()) return ".";
  std::u32string u = utf8_decode(sentence);
  char32_t last = u.back();
  switch (last) {
    case U'.': case U'!': case U'?': case U';':
    case 0x3002: case 0xFF01: case 0xFF1F: case 0xFF1B:
      return utf8_encode(std::u32string(1, last));
    default:
      return ".";
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << content;
  if (!out.good()) throw Error(Errc::IoError, "short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string Biography::text() const { return join_sentences(sentences); }

StageTimings stage_timings(const AuditTrail& trail) {
  StageTimings t;
  t.retrieval = trail.t_retrieval;
  for (const auto& s : trail.sentences) {
    t.generation += s.t_generate;
    t.verification += s.t_verify;
    t.remediation += s.t_remediate;
  }
  t.total = trail.t_total;
  return t;
}

Engine::Engine(const RunConfig& config, const KnowledgeGraph& graph, LlmGateway& gateway,
               const PromptLibrary& prompts, const EraTable& era_table,
               ReviewStore& review, ExternalLookup* lookup)
    : config_(config),
      graph_(graph),
      gateway_(gateway),
      prompts_(prompts),
      era_table_(era_table),
      review_(review),
      lookup_(lookup) {}

std::size_t Engine::per_sentence_call_bound() const {
  // Worst case per remediation round: one decompose, one verdict per fact
  // (each retried on malformed output), plus the costliest solver: `rounds`
  // rewrites each re-verified with a full pass. Regeneration adds one
  // generation call per attempt. The +1 round is the initial verify pass.
  std::size_t per_pass = 1 + config_.max_facts_per_sentence *
                                 static_cast<std::size_t>(1 + config_.verify_retry);
  std::size_t solver_rounds = static_cast<std::size_t>(
      std::max(config_.generic_rounds, config_.knowledge_rounds));
  std::size_t per_solver = solver_rounds * (1 + per_pass);
  std::size_t rounds = static_cast<std::size_t>(config_.max_steps_per_sentence) + 1;
  return 1 + rounds * (per_pass + per_solver + 1);
}

Engine::VerifyPass Engine::verify_sentence(const std::string& sentence, int sentence_index,
                                           const std::vector<Chunk>& refs,
                                           const std::vector<std::string>& overridden,
                                           std::vector<std::string>* consulted_chunks) {
  VerifyPass pass;
  auto facts = decompose_atomic_facts(sentence, sentence_index, gateway_, prompts_,
                                      config_.max_facts_per_sentence);
  pass.facts = facts.size();
  for (auto& fact : facts) {
    FactOutcome outcome;
    outcome.fact = fact;
    if (std::find(overridden.begin(), overridden.end(), fact.text) != overridden.end()) {
      // earlier solver round pronounced this fact fine (era double-check)
      outcome.verdict.fact = fact;
      outcome.verdict.status = VerdictStatus::Supported;
      outcome.verdict.evidence.push_back(EvidenceItem{"override", "solver double-check"});
      pass.outcomes.push_back(std::move(outcome));
      continue;
    }
    std::map<std::string, double> scores;
    auto kept = filter_references(fact, refs, config_.filter_top_k, config_.filter_floor,
                                  &scores);
    Verdict v = check_support(fact, kept, gateway_, prompts_, config_.verify_retry);
    v.jaccard_scores = std::move(scores);
    if (consulted_chunks != nullptr) {
      for (const auto& c : kept) consulted_chunks->push_back(c.id);
    }
    outcome.verdict = std::move(v);
    if (outcome.verdict.status != VerdictStatus::Supported && pass.first_failing < 0) {
      pass.first_failing = static_cast<int>(pass.outcomes.size());
    }
    pass.outcomes.push_back(std::move(outcome));
  }
  return pass;
}

PipelineResult Engine::generate(const BiographyQuery& query) {
  auto t_start = std::chrono::steady_clock::now();
  if (query.figure_name.empty()) {
    throw Error(Errc::InvalidData, "figure name must not be empty");
  }

  PipelineResult result;
  AuditTrail& trail = result.trail;
  Biography& bio = result.biography;
  trail.figure_name = query.figure_name;
  bio.figure_name = query.figure_name;

  // --- retrieval ---
  auto t_retr = std::chrono::steady_clock::now();
  RetrievalResult retrieved = graph_.retrieve(query.figure_name, query.hops);
  trail.t_retrieval = seconds_since(t_retr);
  if (retrieved.match == MatchKind::None) {
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& name : graph_.all_names()) {
      ranked.emplace_back(edit_distance(query.figure_name, name), name);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> suggestions;
    for (const auto& [d, name] : ranked) {
      if (suggestions.size() >= 3) break;
      if (std::find(suggestions.begin(), suggestions.end(), name) == suggestions.end()) {
        suggestions.push_back(name);
      }
    }
    throw Error(Errc::NoSuchFigure, "no figure named '" + query.figure_name + "'")
        .with_candidates(std::move(suggestions));
  }
  trail.figure = *retrieved.matched_node;
  trail.match_kind = retrieved.match == MatchKind::Canonical ? "canonical" : "alias";
  bio.figure = *retrieved.matched_node;
  for (const auto& c : retrieved.chunks) trail.retrieved_chunk_ids.push_back(c.id);

  const std::vector<Chunk>& refs = retrieved.chunks;
  std::string refs_text;
  for (const auto& c : refs) refs_text += "[" + c.id + "] " + c.text + "\n";
  std::string style = prompts_.render(query.style_prompt, {{"figure", query.figure_name}});

  std::set<std::string> consulted;  // chunk ids actually used in checks

  auto call_count = [&] { return gateway_.call_log().size(); };

  // --- sentence loop ---
  for (int index = 0; index < config_.max_sentences; ++index) {
    SentenceRecord record;
    record.index = index;
    std::size_t calls_before = call_count();

    // one sentence per request, frozen prefix in the prompt
    auto t_gen = std::chrono::steady_clock::now();
    std::string so_far = bio.text();
    ChatResponse draft_resp;
    try {
      draft_resp = gateway_.chat(ChatRequest::user(
          "generate", style,
          prompts_.render("generate_sentence", {{"figure", query.figure_name},
                                                {"references", refs_text},
                                                {"biography", so_far}}),
          query.temperature, config_.max_tokens));
    } catch (const Error& e) {
      if (e.code() == Errc::GatewayUnavailable) {
        trail.failed = true;
        trail.failure = "gateway unavailable during generation; partial output kept";
        break;
      }
      throw;
    }
    record.t_generate += seconds_since(t_gen);

    std::string content = trim(draft_resp.content);
    if (content == kEndMarker || content.empty()) break;
    auto pieces = split_sentences(content);
    std::string sentence = trim(pieces.empty() ? content : pieces.front());
    if (pieces.size() > 1) {
      record.notes.push_back("draft carried " + std::to_string(pieces.size() - 1) +
                             " extra sentence(s); kept the first");
    }
    record.draft = sentence;

    // --- verify / remediate loop ---
    std::vector<std::string> overridden;
    std::string current = sentence;
    std::string status = "accepted";
    std::string ticket_id;
    int regen_used = 0;
    bool dropped = false;

    auto file_ticket = [&](const std::string& why,
                           const std::vector<TicketCandidate>& cands) -> std::string {
      Ticket t;
      t.id = make_ticket_id(query.figure_name, index, current + "|" + why);
      t.figure = query.figure_name;
      t.sentence_index = index;
      t.fact = why;
      t.run_dir = query.run_dir;
      t.candidates = cands.empty()
                         ? std::vector<TicketCandidate>{TicketCandidate{
                               "a", "", "keep sentence as drafted", current}}
                         : cands;
      review_.append(t);
      return t.id;
    };

    for (int round = 0;; ++round) {
      record.rounds = round;
      if (round > config_.max_steps_per_sentence) {
        // budget exhausted: hand the sentence to a human rather than loop
        ticket_id = file_ticket("remediation budget exhausted", {});
        status = "provisional";
        break;
      }

      auto t_ver = std::chrono::steady_clock::now();
      std::vector<std::string> used_chunks;
      VerifyPass pass = verify_sentence(current, index, refs, overridden, &used_chunks);
      record.t_verify += seconds_since(t_ver);
      for (auto& id : used_chunks) consulted.insert(id);
      for (auto& o : pass.outcomes) record.fact_outcomes.push_back(o);

      if (pass.first_failing < 0) {
        status = "accepted";
        break;
      }

      auto t_rem = std::chrono::steady_clock::now();
      FactOutcome& failing = record.fact_outcomes[record.fact_outcomes.size() -
                                                  pass.outcomes.size() +
                                                  static_cast<std::size_t>(pass.first_failing)];
      const Verdict& verdict = failing.verdict;
      SolverKind kind = route(verdict);
      failing.routed = kind;

      auto verify_cb = [&](const std::string& candidate) {
        VerifyPass re = verify_sentence(candidate, index, refs, overridden, nullptr);
        return re.first_failing < 0;
      };

      std::optional<Resolution> resolution;
      switch (kind) {
        case SolverKind::Regenerator: {
          ++regen_used;
          record.regen_attempts = regen_used;
          if (regen_used > config_.regen_attempts) {
            // drop the fabricated fact, keep the rest of the sentence
            std::vector<std::string> keep;
            for (const auto& o : pass.outcomes) {
              if (o.fact.text != verdict.fact.text) keep.push_back(o.fact.text);
            }
            Resolution r;
            r.solver = SolverKind::Regenerator;
            if (keep.empty()) {
              dropped = true;
              record.notes.push_back("sentence dropped: every regeneration attempt "
                                     "fabricated unsupported content");
              r.action = Resolution::Action::Accept;
              r.rationale = "sentence dropped after exhausted regeneration";
              failing.resolution = r;
            } else {
              std::string rebuilt;
              for (std::size_t i = 0; i < keep.size(); ++i) {
                if (i) rebuilt += " ";
                rebuilt += keep[i];
              }
              rebuilt += terminal_of(current);
              r.action = Resolution::Action::ReplaceSentence;
              r.text = rebuilt;
              r.rationale = "unsupported fact dropped after exhausted regeneration";
              failing.resolution = r;
              record.notes.push_back("fact dropped after " +
                                     std::to_string(config_.regen_attempts) +
                                     " regeneration attempts: " + verdict.fact.text);
              current = rebuilt;
              overridden.clear();
              record.t_remediate += seconds_since(t_rem);
              continue;
            }
            record.t_remediate += seconds_since(t_rem);
            break;  // dropped: leave the loop via the check below
          }
          Resolution r;
          r.action = Resolution::Action::Regenerate;
          r.regenerate_from = index;
          r.solver = SolverKind::Regenerator;
          r.rationale = "fact not found in references";
          failing.resolution = r;
          ChatResponse regen;
          try {
            regen = gateway_.chat(ChatRequest::user(
                "generate", style,
                prompts_.render("regenerate_sentence",
                                {{"figure", query.figure_name},
                                 {"references", refs_text},
                                 {"biography", so_far},
                                 {"offending", verdict.fact.text}}),
                query.temperature, config_.max_tokens));
          } catch (const Error& e) {
            if (e.code() != Errc::GatewayUnavailable) throw;
            trail.failed = true;
            trail.failure = "gateway unavailable during regeneration";
            ticket_id = file_ticket("regeneration unavailable", {});
            status = "provisional";
            record.t_remediate += seconds_since(t_rem);
            break;
          }
          auto regen_pieces = split_sentences(trim(regen.content));
          std::string next = trim(regen_pieces.empty() ? trim(regen.content)
                                                       : regen_pieces.front());
          if (next.empty()) next = current;
          current = next;
          overridden.clear();
          record.t_remediate += seconds_since(t_rem);
          continue;
        }
        case SolverKind::Era:
          resolution = solve_era_conflict(verdict.fact, current, verdict.evidence,
                                          era_table_);
          break;
        case SolverKind::Alias:
          resolution = solve_alias_conflict(verdict.fact, current,
                                            graph_.node(*retrieved.matched_node));
          break;
        case SolverKind::RefConflict: {
          std::vector<EvidenceItem> evidence = verdict.evidence;
          if (evidence.size() < 2) {
            resolution = std::nullopt;  // cannot adjudicate: generic path
            break;
          }
          resolution = solve_ref_conflict(verdict.fact, current, evidence,
                                          query.figure_name, index, query.run_dir,
                                          era_table_, review_);
          break;
        }
        case SolverKind::Knowledge:
          if (lookup_ == nullptr) {
            resolution = std::nullopt;
          } else {
            std::vector<std::string> used;
            resolution = solve_knowledge_lack(verdict.fact, current, *lookup_, gateway_,
                                              prompts_, verify_cb,
                                              config_.knowledge_rounds, &used);
            for (auto& u : used) trail.external_consulted.push_back(u);
          }
          break;
        case SolverKind::Generic:
          break;  // handled below
      }

      if (!resolution && kind != SolverKind::Regenerator) {
        if (kind != SolverKind::Generic) {
          record.notes.push_back(std::string(solver_name(kind)) +
                                 " solver escalated to generic");
        }
        resolution = solve_other(verdict.fact, verdict, current, gateway_, prompts_,
                                 verify_cb, config_.generic_rounds);
        if (resolution) resolution->solver = kind == SolverKind::Generic
                                                ? SolverKind::Generic
                                                : resolution->solver;
      }

      if (dropped) break;
      if (status == "provisional") break;  // regeneration gateway failure path

      if (resolution) {
        failing.resolution = resolution;
        switch (resolution->action) {
          case Resolution::Action::Accept:
            overridden.push_back(verdict.fact.text);
            record.t_remediate += seconds_since(t_rem);
            continue;
          case Resolution::Action::ReplaceSentence:
            current = resolution->text;
            overridden.clear();
            record.t_remediate += seconds_since(t_rem);
            // a rewrite produced by a verified solver still re-verifies as a
            // whole sentence on the next round
            continue;
          case Resolution::Action::PendingHuman: {
            if (resolution->ticket_id.empty()) {
              resolution->ticket_id =
                  file_ticket(std::string(solver_name(resolution->solver)) +
                                  " could not fix: " + verdict.fact.text,
                              {});
              failing.resolution = resolution;
            }
            ticket_id = resolution->ticket_id;
            status = "provisional";
            record.t_remediate += seconds_since(t_rem);
            break;
          }
          case Resolution::Action::Regenerate:
            break;  // unreachable: handled in its own arm
        }
        if (status == "provisional") break;
      }
    }

    // --- record + freeze ---
    if (dropped) {
      record.status = "dropped";
      record.final_text = "";
      record.prefix_hash = fnv1a(bio.text());
      record.gateway_calls = call_count() - calls_before;
      trail.sentences.push_back(std::move(record));
      continue;
    }
    SentenceOut out;
    out.text = current;
    out.status = status == "provisional" ? SentenceOut::Status::Provisional
                                         : SentenceOut::Status::Accepted;
    out.ticket_id = ticket_id;
    bio.sentences.push_back(out);

    record.status = status;
    record.ticket_id = ticket_id;
    record.final_text = current;
    record.prefix_hash = fnv1a(bio.text());
    record.gateway_calls = call_count() - calls_before;
    trail.sentences.push_back(std::move(record));
    if (trail.failed) break;
  }

  for (const auto& id : consulted) bio.references.push_back(id);
  trail.t_total = seconds_since(t_start);
  return result;
}

// --- run directory -----------------------------------------------------------

void write_run_dir(const std::filesystem::path& dir, const PipelineResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  write_text_file(dir / "biography.txt", result.biography.text() + "\n");

  std::string sentences;
  sentences += "# index\tstatus\tticket\ttext\n";
  for (std::size_t i = 0; i < result.biography.sentences.size(); ++i) {
    const auto& s = result.biography.sentences[i];
    sentences += std::to_string(i) + "\t" +
                 (s.status == SentenceOut::Status::Accepted ? "accepted" : "provisional") +
                 "\t" + (s.ticket_id.empty() ? "-" : s.ticket_id) + "\t" +
                 tsv_escape(s.text) + "\n";
  }
  write_text_file(dir / "sentences.tsv", sentences);

  const AuditTrail& trail = result.trail;
  std::string t;
  t += "meta\t" + tsv_escape(trail.figure_name) + "\t" + std::to_string(trail.figure) +
       "\t" + trail.match_kind + "\t" + (trail.failed ? "failed" : "complete") + "\n";
  if (trail.failed) t += "failure\t" + tsv_escape(trail.failure) + "\n";
  for (const auto& id : trail.retrieved_chunk_ids) t += "retrieved\t" + tsv_escape(id) + "\n";
  for (const auto& s : trail.sentences) {
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(s.prefix_hash));
    t += "sentence\t" + std::to_string(s.index) + "\t" + s.status + "\t" +
         (s.ticket_id.empty() ? "-" : s.ticket_id) + "\t" + tsv_escape(s.draft) + "\t" +
         tsv_escape(s.final_text) + "\t" + std::to_string(s.rounds) + "\t" +
         std::to_string(s.regen_attempts) + "\t" + hash_hex + "\n";
    for (const auto& f : s.fact_outcomes) {
      std::string verdict_token;
      switch (f.verdict.status) {
        case VerdictStatus::Supported: verdict_token = "SUPPORTED"; break;
        case VerdictStatus::NotIncluded: verdict_token = "NOT_INCLUDED"; break;
        case VerdictStatus::NotSupported: verdict_token = "NOT_SUPPORTED"; break;
      }
      std::string subtype = f.verdict.subtype
                                ? std::string(subtype_name(*f.verdict.subtype))
                                : std::string("-");
      std::string routed = f.routed ? std::string(solver_name(*f.routed)) : std::string("-");
      std::string action = "-";
      std::string detail;
      if (f.resolution) {
        switch (f.resolution->action) {
          case Resolution::Action::Accept: action = "accept"; break;
          case Resolution::Action::ReplaceSentence: action = "replace"; break;
          case Resolution::Action::Regenerate: action = "regenerate"; break;
          case Resolution::Action::PendingHuman: action = "pending_human"; break;
        }
        detail = f.resolution->rationale;
        if (!f.resolution->ticket_id.empty()) detail += " [" + f.resolution->ticket_id + "]";
      }
      t += "fact\t" + std::to_string(s.index) + "\t" + tsv_escape(f.fact.text) + "\t" +
           verdict_token + "\t" + subtype + "\t" + routed + "\t" + action + "\t" +
           tsv_escape(detail) + "\n";
    }
    for (const auto& note : s.notes) {
      t += "note\t" + std::to_string(s.index) + "\t" + tsv_escape(note) + "\n";
    }
  }
  for (const auto& ext : trail.external_consulted) {
    t += "external\t" + tsv_escape(ext) + "\n";
  }
  for (const auto& id : result.biography.references) {
    t += "reference\t" + tsv_escape(id) + "\n";
  }
  write_text_file(dir / "trail.tsv", t);

  StageTimings timing = stage_timings(trail);
  char buf[256];
  std::string tt;
  std::snprintf(buf, sizeof buf, "retrieval\t%.6f\n", timing.retrieval);
  tt += buf;
  std::snprintf(buf, sizeof buf, "generation\t%.6f\n", timing.generation);
  tt += buf;
  std::snprintf(buf, sizeof buf, "verification\t%.6f\n", timing.verification);
  tt += buf;
  std::snprintf(buf, sizeof buf, "remediation\t%.6f\n", timing.remediation);
  tt += buf;
  std::snprintf(buf, sizeof buf, "total\t%.6f\n", timing.total);
  tt += buf;
  write_text_file(dir / "timings.txt", tt);
}

void patch_run_dir(const Ticket& ticket, const TicketCandidate& choice) {
  namespace fs = std::filesystem;
  fs::path dir(ticket.run_dir);
  fs::path sentences_file = dir / "sentences.tsv";
  if (!fs::exists(sentences_file)) {
    throw Error(Errc::IoError, "run directory has no sentences.tsv: " + dir.string());
  }
  std::istringstream in(read_text_file(sentences_file));
  std::string line;
  std::string rebuilt;
  std::vector<SentenceOut> sentences;
  bool patched = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      rebuilt += line + "\n";
      continue;
    }
    auto f = split_fields(line, '\t');
    if (f.size() != 4) throw Error(Errc::IoError, "malformed sentences.tsv line");
    int idx = std::stoi(f[0]);
    SentenceOut s;
    s.text = tsv_unescape(f[3]);
    s.status = f[1] == "provisional" ? SentenceOut::Status::Provisional
                                     : SentenceOut::Status::Accepted;
    s.ticket_id = f[2] == "-" ? "" : f[2];
    if (idx == ticket.sentence_index && s.ticket_id == ticket.id) {
      s.text = choice.replacement;
      s.status = SentenceOut::Status::Accepted;
      s.ticket_id = "";
      rebuilt += f[0] + "\taccepted\tresolved:" + ticket.id + ":" + choice.id + "\t" +
                 tsv_escape(s.text) + "\n";
      patched = true;
    } else {
      rebuilt += line + "\n";
    }
    sentences.push_back(std::move(s));
  }
  if (!patched) {
    throw Error(Errc::InvalidTicket,
                "ticket " + ticket.id + " does not match any provisional sentence in " +
                    dir.string());
  }
  write_text_file(sentences_file, rebuilt);
  write_text_file(dir / "biography.txt", join_sentences(sentences) + "\n");
}

}  // namespace chronicler

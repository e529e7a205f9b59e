// chronicler: build a biographical knowledge-graph index from a corpus,
// retrieve per-figure references, generate verified biographies, review
// pending conflicts, and evaluate results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "chronicler/config.hpp"
#include "chronicler/errors.hpp"
#include "chronicler/evalkit.hpp"
#include "chronicler/indexer.hpp"
#include "chronicler/pipeline.hpp"
#include "chronicler/synth.hpp"
#include "chronicler/text.hpp"

namespace fs = std::filesystem;
using namespace chronicler;

namespace {

// Exit codes: 0 ok, 2 usage, 3 config, 4 domain (unknown figure, bad
// ticket, empty corpus, ambiguous name), 5 gateway, 6 data/io.
int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
      return 3;
    case Errc::NoSuchFigure:
    case Errc::Ambiguous:
    case Errc::InvalidTicket:
    case Errc::EmptyCorpus:
      return 4;
    case Errc::GatewayUnavailable:
    case Errc::AuthError:
    case Errc::HttpError:
    case Errc::Transport:
      return 5;
    default:
      return 6;
  }
}

std::string sanitize_dir_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_' || static_cast<unsigned char>(c) >= 0x80;
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "figure" : out;
}

RunConfig load_config(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("CHRONICLER_CONFIG")) path = env;
  }
  if (path.empty()) {
    throw Error(Errc::ConfigError, "no config: pass --config or set CHRONICLER_CONFIG");
  }
  return RunConfig::load(path);
}

std::unique_ptr<LlmGateway> make_gateway(const RunConfig& config) {
  if (config.gateway_mode == "mock") {
    if (config.mock_script.empty()) {
      throw Error(Errc::ConfigError, "gateway.mode=mock requires gateway.script");
    }
    return std::make_unique<MockGateway>(MockScript::load(config.mock_script),
                                         config.retry_budget);
  }
  HttpGatewayConfig http;
  http.endpoint = config.endpoint;
  http.model = config.model;
  http.api_key_env = config.api_key_env;
  http.retry_budget = config.retry_budget;
  http.backoff_ms = config.backoff_ms;
  return std::make_unique<HttpGateway>(http);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_index_build(const std::string& config_path, const std::string& out_override) {
  RunConfig config = load_config(config_path);
  config.validate_paths(/*need_corpus=*/true, /*need_index=*/false);
  fs::path out = out_override.empty() ? config.index_path : fs::path(out_override);

  auto gateway = make_gateway(config);
  PromptLibrary prompts(config.prompts_dir);
  IndexBuildReport report;
  KnowledgeGraph graph = build_index(config, *gateway, prompts, &report);
  graph.save_file(out);

  std::string summary = report.summary();
  std::cout << summary;
  std::ofstream rep(out.string() + ".report.txt", std::ios::binary | std::ios::trunc);
  rep << summary;
  for (const auto& f : report.load.failures) {
    rep << "load_failure\t" << f.path << "\t" << f.error << "\n";
  }
  for (const auto& c : report.graph.collisions) {
    rep << "collision\t" << c.name << "\t" << c.action << "\n";
  }
  std::cout << "index\t" << out.string() << "\n";
  return 0;
}

int cmd_index_inspect(const std::string& index_path) {
  KnowledgeGraph graph = KnowledgeGraph::load_file(index_path);
  std::cout << "format_version\t" << kIndexFormatVersion << "\n";
  std::cout << "nodes\t" << graph.nodes().size() << "\n";
  std::cout << "edges\t" << graph.edges().size() << "\n";
  std::cout << "chunks\t" << graph.chunks().size() << "\n";
  std::cout << "orphan_chunks\t" << graph.orphan_chunks().size() << "\n";
  std::size_t aliases = 0;
  for (const auto& n : graph.nodes()) aliases += n.aliases.size();
  std::cout << "aliases\t" << aliases << "\n";
  return 0;
}

int cmd_retrieve(const std::string& config_path, const std::string& index_override,
                 const std::string& name, int hops, bool ids_only) {
  fs::path index_path;
  if (!index_override.empty()) {
    index_path = index_override;
  } else {
    RunConfig config = load_config(config_path);
    index_path = config.index_path;
  }
  KnowledgeGraph graph = KnowledgeGraph::load_file(index_path);
  RetrievalResult r = graph.retrieve(name, hops);
  if (r.match == MatchKind::None) {
    std::cout << "match\tnone\n";
    return 0;
  }
  std::cout << "match\t" << (r.match == MatchKind::Canonical ? "canonical" : "alias")
            << "\t" << graph.node(*r.matched_node).canonical_name << "\n";
  for (const auto& c : r.chunks) {
    if (ids_only) {
      std::cout << c.id << "\n";
    } else {
      std::string preview = c.text.size() > 80 ? utf8_slice(c.text, 0, 40) + "..." : c.text;
      for (auto& ch : preview) {
        if (ch == '\n' || ch == '\t') ch = ' ';
      }
      std::cout << c.id << "\t" << preview << "\n";
    }
  }
  return 0;
}

int cmd_generate(const std::string& config_path, const std::string& name, int hops,
                 const std::string& out_dir) {
  RunConfig config = load_config(config_path);
  config.validate_paths(/*need_corpus=*/false, /*need_index=*/true);
  KnowledgeGraph graph = KnowledgeGraph::load_file(config.index_path);
  auto gateway = make_gateway(config);
  PromptLibrary prompts(config.prompts_dir);
  EraTable era = EraTable::load(config.era_table);
  ReviewStore review(config.review_store);
  std::unique_ptr<ExternalLookup> lookup;
  if (!config.snapshot_path.empty()) {
    lookup = std::make_unique<SnapshotLookup>(config.snapshot_path);
  }

  BiographyQuery query;
  query.figure_name = name;
  query.hops = hops >= 0 ? hops : config.default_hops;
  query.temperature = config.temp_generate;
  fs::path run_dir = out_dir.empty()
                         ? config.run_root / sanitize_dir_name(name)
                         : fs::path(out_dir);
  query.run_dir = run_dir.string();

  Engine engine(config, graph, *gateway, prompts, era, review, lookup.get());
  PipelineResult result;
  try {
    result = engine.generate(query);
  } catch (const Error& e) {
    if (e.code() == Errc::NoSuchFigure) {
      std::cerr << "error\tNoSuchFigure\t" << e.message() << "\n";
      if (!e.candidates().empty()) {
        std::cerr << "did you mean:\n";
        for (const auto& c : e.candidates()) std::cerr << "  " << c << "\n";
      }
      return 4;
    }
    throw;
  }
  write_run_dir(run_dir, result);

  std::cout << "run_dir\t" << run_dir.string() << "\n";
  std::cout << "sentences\t" << result.biography.sentences.size() << "\n";
  std::size_t provisional = 0;
  for (const auto& s : result.biography.sentences) {
    if (s.status == SentenceOut::Status::Provisional) ++provisional;
  }
  std::cout << "provisional\t" << provisional << "\n";
  if (result.trail.failed) {
    std::cout << "failed\t" << result.trail.failure << "\n";
    return 5;
  }
  return 0;
}

int cmd_review_list(const std::string& config_path) {
  RunConfig config = load_config(config_path);
  ReviewStore store(config.review_store);
  auto open = store.open_tickets();
  if (open.empty()) {
    std::cout << "no pending tickets\n";
    return 0;
  }
  for (const auto& t : open) {
    std::cout << t.id << "\t" << t.figure << "\tsentence " << t.sentence_index << "\t"
              << t.fact << "\n";
    for (const auto& c : t.candidates) {
      std::cout << "  " << c.id << "\t[" << c.chunk_id << "]\t" << c.snippet << "\n";
    }
  }
  return 0;
}

int cmd_review_resolve(const std::string& config_path, const std::string& ticket_id,
                       const std::string& choice) {
  RunConfig config = load_config(config_path);
  ReviewStore store(config.review_store);
  auto outcome = store.resolve(ticket_id, choice);
  if (outcome.already_resolved) {
    std::cout << "ticket " << ticket_id << " was already resolved (choice "
              << outcome.ticket.chosen << "); nothing to do\n";
    return 0;
  }
  const TicketCandidate* chosen = nullptr;
  for (const auto& c : outcome.ticket.candidates) {
    if (c.id == choice) chosen = &c;
  }
  if (chosen != nullptr && !outcome.ticket.run_dir.empty() &&
      fs::exists(outcome.ticket.run_dir)) {
    patch_run_dir(outcome.ticket, *chosen);
    std::cout << "patched\t" << outcome.ticket.run_dir << "\n";
  }
  std::cout << "resolved\t" << ticket_id << "\t" << choice << "\n";
  return 0;
}

int cmd_eval_rouge(const std::string& cand_file, const std::string& ref_file) {
  std::string cand = read_file(cand_file);
  std::string ref = read_file(ref_file);
  auto print = [](const char* name, const RougeScore& s) {
    std::printf("%s\tP %.4f\tR %.4f\tF1 %.4f%s\n", name, s.precision, s.recall, s.f1,
                s.degenerate ? "\t(degenerate input)" : "");
  };
  print("rouge-1", rouge_n_text(cand, ref, 1));
  print("rouge-2", rouge_n_text(cand, ref, 2));
  print("rouge-L", rouge_l_text(cand, ref));
  return 0;
}

int cmd_eval_report(const std::string& labels_file, const std::string& gold_file,
                    const std::string& results_dir) {
  auto labels = load_labels(labels_file);
  std::printf("biographies_labeled\t%zu\n", labels.size());
  std::printf("hallucination_rate\t%.4f\n", hallucination_rate(labels));
  std::printf("avg_atomic_fact_error\t%.4f\n", avg_atomic_fact_error(labels));

  if (gold_file.empty() || results_dir.empty()) return 0;
  RetrievalGold gold = load_retrieval_gold(gold_file);
  std::map<std::string, std::vector<std::string>> results;
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    if (!entry.is_directory()) continue;
    fs::path trail = entry.path() / "trail.tsv";
    if (!fs::exists(trail)) continue;
    std::istringstream in(read_file(trail));
    std::string line, figure;
    std::vector<std::string> retrieved;
    while (std::getline(in, line)) {
      auto f = split_fields(line, '\t');
      if (f.size() >= 2 && f[0] == "meta") figure = tsv_unescape(f[1]);
      if (f.size() == 2 && f[0] == "retrieved") retrieved.push_back(tsv_unescape(f[1]));
    }
    if (!figure.empty()) results[figure] = std::move(retrieved);
  }
  if (results.empty()) {
    throw Error(Errc::InvalidData, "no run directories with trail.tsv under " + results_dir);
  }
  auto agg = retrieval_metrics(results, gold);
  std::printf("queries\t%zu\n", agg.per_query.size());
  std::printf("retrieval_precision\t%.4f\n", agg.precision);
  std::printf("retrieval_recall\t%.4f\n", agg.recall);
  std::printf("retrieval_f1\t%.4f\n", agg.f1);
  return 0;
}

int cmd_synth(int figures, int distractors, std::uint64_t seed, const std::string& out,
              const std::string& era_table, const std::string& prompts_dir) {
  SynthSpec spec;
  spec.figures = figures;
  spec.distractors = distractors;
  spec.seed = seed;
  if (!era_table.empty()) spec.era_table = era_table;
  if (!prompts_dir.empty()) spec.prompts_dir = prompts_dir;
  SynthResult r = generate_synthetic_corpus(spec, out);
  std::cout << "corpus\t" << r.corpus_dir.string() << "\n";
  std::cout << "figures\t" << r.figures.size() << "\n";
  std::cout << "gold_retrieval\t" << r.gold_retrieval.string() << "\n";
  std::cout << "gold_triples\t" << r.gold_triples.string() << "\n";
  std::cout << "mock_script\t" << r.script.string() << "\n";
  std::cout << "config\t" << r.config.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph indexed, verification-gated biography engine"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "config file (or CHRONICLER_CONFIG)");

  // index
  auto* index = app.add_subcommand("index", "build or inspect the KG index");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "ingest corpus and build the index");
  std::string build_out;
  build->add_option("--out", build_out, "override [paths] index_path");
  auto* inspect = index->add_subcommand("inspect", "print index statistics");
  std::string inspect_path;
  inspect->add_option("--index", inspect_path, "index file")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "look a figure up and list references");
  std::string retrieve_name, retrieve_index;
  int retrieve_hops = 1;
  bool retrieve_ids = false;
  retrieve->add_option("name", retrieve_name, "figure name or alias")->required();
  retrieve->add_option("--hops", retrieve_hops, "neighbor expansion depth (default 1)");
  retrieve->add_option("--index", retrieve_index, "index file (else from config)");
  retrieve->add_flag("--ids", retrieve_ids, "print chunk ids only");

  // generate
  auto* generate = app.add_subcommand("generate", "generate a verified biography");
  std::string generate_name, generate_out;
  int generate_hops = -1;
  generate->add_option("name", generate_name, "figure name or alias")->required();
  generate->add_option("--hops", generate_hops, "neighbor expansion depth");
  generate->add_option("--out", generate_out, "run directory (default runs/<name>)");

  // review
  auto* review = app.add_subcommand("review", "handle pending expert-review tickets");
  review->require_subcommand(1);
  auto* review_list = review->add_subcommand("list", "list open tickets");
  auto* review_resolve = review->add_subcommand("resolve", "resolve a ticket");
  std::string ticket_id, choose;
  review_resolve->add_option("ticket", ticket_id, "ticket id")->required();
  review_resolve->add_option("--choose", choose, "candidate id to apply")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluation metrics");
  eval->require_subcommand(1);
  auto* eval_rouge = eval->add_subcommand("rouge", "ROUGE-1/2/L between two text files");
  std::string cand_file, ref_file;
  eval_rouge->add_option("--cand", cand_file, "candidate text file")->required();
  eval_rouge->add_option("--ref", ref_file, "reference text file")->required();
  auto* eval_report = eval->add_subcommand("report", "aggregate labels and retrieval runs");
  std::string labels_file, gold_file, results_dir;
  eval_report->add_option("--labels", labels_file, "human label file")->required();
  eval_report->add_option("--gold", gold_file, "gold retrieval file");
  eval_report->add_option("--results", results_dir, "directory of generate run dirs");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with gold files");
  int synth_figures = 10, synth_distractors = 5;
  std::uint64_t synth_seed = 1;
  std::string synth_out, synth_era, synth_prompts;
  synth->add_option("--figures", synth_figures, "number of figures (default 10)");
  synth->add_option("--distractors", synth_distractors, "distractor passages (default 5)");
  synth->add_option("--seed", synth_seed, "RNG seed (default 1)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--era-table", synth_era, "era table recorded in the emitted config");
  synth->add_option("--prompts", synth_prompts, "prompts dir recorded in the emitted config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) return cmd_index_build(config_path, build_out);
    if (inspect->parsed()) return cmd_index_inspect(inspect_path);
    if (retrieve->parsed())
      return cmd_retrieve(config_path, retrieve_index, retrieve_name, retrieve_hops,
                          retrieve_ids);
    if (generate->parsed())
      return cmd_generate(config_path, generate_name, generate_hops, generate_out);
    if (review_list->parsed()) return cmd_review_list(config_path);
    if (review_resolve->parsed())
      return cmd_review_resolve(config_path, ticket_id, choose);
    if (eval_rouge->parsed()) return cmd_eval_rouge(cand_file, ref_file);
    if (eval_report->parsed())
      return cmd_eval_report(labels_file, gold_file, results_dir);
    if (synth->parsed())
      return cmd_synth(synth_figures, synth_distractors, synth_seed, synth_out, synth_era,
                       synth_prompts);
  } catch (const Error& e) {
    std::cerr << "error\t" << errc_name(e.code()) << "\t" << e.message() << "\n";
    for (const auto& c : e.candidates()) std::cerr << "candidate\t" << c << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error\tInternal\t" << e.what() << "\n";
    return 6;
  }
  return 2;
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chronicler/config.hpp"
#include "chronicler/corpus.hpp"
#include "chronicler/era.hpp"
#include "chronicler/errors.hpp"
#include "chronicler/evalkit.hpp"
#include "chronicler/extraction.hpp"
#include "chronicler/gateway.hpp"
#include "chronicler/graph.hpp"
#include "chronicler/indexer.hpp"
#include "chronicler/text.hpp"
#include "chronicler/verifier.hpp"

namespace py = pybind11;
using namespace chronicler;

PYBIND11_MODULE(_core, m) {
  m.doc() = "KG-indexed retrieval and verification engine for biography "
            "generation: text metrics, era conversion, regex extraction and "
            "graph retrieval exposed to Python.";

  py::register_exception<Error>(m, "ChroniclerError");

  // --- text / metrics ---
  m.def("tokenize", [](const std::string& s) { return tokenize(s); },
        "CJK characters, lowercased Latin words and digit runs");
  m.def("split_sentences", [](const std::string& s) { return split_sentences(s); });
  m.def("normalize_name", [](const std::string& s) { return normalize_name(s); });
  m.def("jaccard", &jaccard_text, py::arg("a"), py::arg("b"),
        "token-level Jaccard similarity of two strings");

  py::class_<RougeScore>(m, "RougeScore")
      .def_readonly("precision", &RougeScore::precision)
      .def_readonly("recall", &RougeScore::recall)
      .def_readonly("f1", &RougeScore::f1)
      .def_readonly("degenerate", &RougeScore::degenerate)
      .def("__repr__", [](const RougeScore& s) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "RougeScore(p=%.4f, r=%.4f, f1=%.4f)", s.precision,
                      s.recall, s.f1);
        return std::string(buf);
      });
  m.def("rouge_n", &rouge_n_text, py::arg("candidate"), py::arg("reference"), py::arg("n"));
  m.def("rouge_l", &rouge_l_text, py::arg("candidate"), py::arg("reference"));
  m.def("hallucination_rate", [](const std::vector<std::pair<bool, int>>& labels) {
    std::vector<LabelEntry> entries;
    for (auto& [flag, count] : labels) entries.push_back(LabelEntry{"", flag, count});
    return hallucination_rate(entries);
  });
  m.def("avg_atomic_fact_error", [](const std::vector<std::pair<bool, int>>& labels) {
    std::vector<LabelEntry> entries;
    for (auto& [flag, count] : labels) entries.push_back(LabelEntry{"", flag, count});
    return avg_atomic_fact_error(entries);
  });
  m.def(
      "retrieval_metrics",
      [](const std::map<std::string, std::vector<std::string>>& results,
         const std::map<std::string, std::set<std::string>>& gold) {
        auto agg = retrieval_metrics(results, gold);
        return py::make_tuple(agg.precision, agg.recall, agg.f1);
      },
      "macro-averaged (precision, recall, f1)");

  // --- era conversion ---
  py::class_<EraTable>(m, "EraTable")
      .def_static("load", &EraTable::load)
      .def("__len__", [](const EraTable& t) { return t.entries().size(); })
      .def("to_gregorian",
           [](const EraTable& t, const std::string& era, int ordinal) {
             return era_to_gregorian(t, EraDate{era, ordinal, ""});
           },
           py::arg("era"), py::arg("ordinal"))
      .def("from_gregorian", [](const EraTable& t, int year) {
        std::vector<std::pair<std::string, int>> out;
        for (auto& [entry, ordinal] : gregorian_to_era(t, year)) {
          out.emplace_back(entry.era_name, ordinal);
        }
        return out;
      });

  // --- chunking / extraction ---
  py::class_<Chunk>(m, "Chunk")
      .def_readonly("id", &Chunk::id)
      .def_readonly("doc_id", &Chunk::doc_id)
      .def_readonly("start", &Chunk::start)
      .def_readonly("end", &Chunk::end)
      .def_readonly("text", &Chunk::text)
      .def_readonly("preamble", &Chunk::preamble);

  m.def(
      "chunk_fallback",
      [](const std::string& doc_id, const std::string& text, const std::string& regex) {
        Document d;
        d.id = doc_id;
        d.text = text;
        return chunk_fallback(d, regex);
      },
      py::arg("doc_id"), py::arg("text"), py::arg("boundary_regex"),
      "split text at every match start of the boundary regex");

  py::class_<Triple>(m, "Triple")
      .def_readonly("head", &Triple::head)
      .def_readonly("relation", &Triple::relation)
      .def_readonly("tail", &Triple::tail)
      .def_readonly("chunk_id", &Triple::chunk_id)
      .def("__repr__", [](const Triple& t) {
        return "Triple(" + t.head + ", " + t.relation + ", " + t.tail + ")";
      });

  m.def(
      "apply_regex",
      [](const std::string& pattern, const std::vector<std::string>& roles,
         const std::string& chunk_id, const std::string& text) {
        ExtractionRegex r;
        r.pattern = pattern;
        r.capture_roles = roles;
        Chunk c;
        c.id = chunk_id;
        c.text = text;
        c.end = static_cast<std::uint32_t>(utf8_length(text));
        return apply_regex(r, c, "", 2'000'000);
      },
      py::arg("pattern"), py::arg("roles"), py::arg("chunk_id"), py::arg("text"),
      "run an extraction regex (linear-time dialect) over a chunk");

  // --- graph ---
  py::class_<EntityNode>(m, "EntityNode")
      .def_readonly("id", &EntityNode::id)
      .def_readonly("canonical_name", &EntityNode::canonical_name)
      .def_readonly("aliases", &EntityNode::aliases)
      .def_readonly("chunk_ids", &EntityNode::chunk_ids);

  py::class_<RetrievalResult>(m, "RetrievalResult")
      .def_readonly("query_name", &RetrievalResult::query_name)
      .def_readonly("chunks", &RetrievalResult::chunks)
      .def_property_readonly("match_kind", [](const RetrievalResult& r) {
        switch (r.match) {
          case MatchKind::Canonical: return "canonical";
          case MatchKind::Alias: return "alias";
          case MatchKind::None: return "none";
        }
        return "none";
      });

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def_static("load", &KnowledgeGraph::load_file, py::arg("path"))
      .def("save", &KnowledgeGraph::save_file, py::arg("path"))
      .def("retrieve", &KnowledgeGraph::retrieve, py::arg("name"), py::arg("hops") = 1)
      .def("lookup",
           [](const KnowledgeGraph& g, const std::string& name) -> py::object {
             auto id = g.lookup(name);
             if (!id) return py::none();
             return py::cast(g.node(*id));
           })
      .def_property_readonly("node_count",
                             [](const KnowledgeGraph& g) { return g.nodes().size(); })
      .def_property_readonly("edge_count",
                             [](const KnowledgeGraph& g) { return g.edges().size(); });

  m.def(
      "build_index",
      [](const std::filesystem::path& config_file) {
        RunConfig config = RunConfig::load(config_file);
        auto script = MockScript::load(config.mock_script);
        MockGateway gateway(script, config.retry_budget);
        PromptLibrary prompts(config.prompts_dir);
        return build_index(config, gateway, prompts, nullptr);
      },
      py::arg("config_file"),
      "offline index build driven by the config's scripted mock gateway");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}

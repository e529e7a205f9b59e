#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace chronicler {

struct RougeScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool degenerate = false;  // an input too short to score

  bool operator==(const RougeScore& other) const = default;
};

// Clipped n-gram overlap, n in {1,2}. Tokenization is the shared tokenizer
// (CJK characters, lowercased Latin words, digit runs).
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

// LCS-based F-measure; the LCS is computed exactly by dynamic programming.
RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

RougeScore rouge_n_text(const std::string& candidate, const std::string& reference, int n);
RougeScore rouge_l_text(const std::string& candidate, const std::string& reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Human evaluation labels; evalkit validates and aggregates, never computes
// these itself.
struct LabelEntry {
  std::string id;
  bool has_hallucination = false;
  int erroneous_atomic_facts = 0;
};

std::vector<LabelEntry> load_labels(const std::filesystem::path& file);

double hallucination_rate(const std::vector<LabelEntry>& labels);
double avg_atomic_fact_error(const std::vector<LabelEntry>& labels);

// Retrieval gold: per-query set of relevant chunk ids.
using RetrievalGold = std::map<std::string, std::set<std::string>>;
RetrievalGold load_retrieval_gold(const std::filesystem::path& file);

struct QueryMetrics {
  std::string query;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct RetrievalAggregate {
  double precision = 0;  // macro averages over queries
  double recall = 0;
  double f1 = 0;
  std::vector<QueryMetrics> per_query;
};

// Macro averaging: per-query P/R/F1 are averaged independently, so the
// reported F1 is generally not the harmonic mean of the reported P and R.
RetrievalAggregate retrieval_metrics(
    const std::map<std::string, std::vector<std::string>>& results,
    const RetrievalGold& gold);

}  // namespace chronicler

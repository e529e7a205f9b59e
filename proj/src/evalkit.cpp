#include "chronicler/evalkit.hpp"

#include <algorithm>
#include <fstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

double f1_of(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     int n) {
  std::map<std::vector<std::string>, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)]++;
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
  if (n != 1 && n != 2) throw Error(Errc::InvalidData, "rouge_n supports n in {1,2}");
  RougeScore s;
  if (static_cast<int>(candidate.size()) < n || static_cast<int>(reference.size()) < n) {
    s.degenerate = true;
    return s;
  }
  auto cand = ngram_counts(candidate, n);
  auto ref = ngram_counts(reference, n);
  std::size_t cand_total = candidate.size() - n + 1;
  std::size_t ref_total = reference.size() - n + 1;
  // clipped overlap: an n-gram counts at most min(candidate, reference) times
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  s.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), 0);
  }
  return prev[b.size()];
}

RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
  RougeScore s;
  if (candidate.empty() || reference.empty()) {
    s.degenerate = true;
    return s;
  }
  std::size_t lcs = lcs_length(candidate, reference);
  s.precision = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  s.recall = static_cast<double>(lcs) / static_cast<double>(reference.size());
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

RougeScore rouge_n_text(const std::string& candidate, const std::string& reference, int n) {
  return rouge_n(tokenize(candidate), tokenize(reference), n);
}

RougeScore rouge_l_text(const std::string& candidate, const std::string& reference) {
  return rouge_l(tokenize(candidate), tokenize(reference));
}

std::vector<LabelEntry> load_labels(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open label file " + file.string());
  std::vector<LabelEntry> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_fields(t, '\t');
    if (f.size() != 3) {
      throw Error(Errc::InvalidData, "label line " + std::to_string(lineno) +
                                         ": expected id<TAB>0|1<TAB>count");
    }
    LabelEntry e;
    e.id = f[0];
    if (f[1] != "0" && f[1] != "1") {
      throw Error(Errc::InvalidData, "label line " + std::to_string(lineno) +
                                         ": hallucination flag must be 0 or 1");
    }
    e.has_hallucination = f[1] == "1";
    try {
      e.erroneous_atomic_facts = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidData, "label line " + std::to_string(lineno) + ": bad count");
    }
    if (e.erroneous_atomic_facts < 0) {
      throw Error(Errc::InvalidData,
                  "label line " + std::to_string(lineno) + ": negative count");
    }
    labels.push_back(std::move(e));
  }
  return labels;
}

double hallucination_rate(const std::vector<LabelEntry>& labels) {
  if (labels.empty()) throw Error(Errc::InvalidData, "no labels to aggregate");
  std::size_t flagged = 0;
  for (const auto& l : labels) {
    if (l.has_hallucination) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(labels.size());
}

double avg_atomic_fact_error(const std::vector<LabelEntry>& labels) {
  if (labels.empty()) throw Error(Errc::InvalidData, "no labels to aggregate");
  double sum = 0;
  for (const auto& l : labels) sum += l.erroneous_atomic_facts;
  return sum / static_cast<double>(labels.size());
}

RetrievalGold load_retrieval_gold(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open gold file " + file.string());
  RetrievalGold gold;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_fields(t, '\t');
    if (f.size() != 2) {
      throw Error(Errc::InvalidData, "gold line " + std::to_string(lineno) +
                                         ": expected query<TAB>chunk,chunk,...");
    }
    std::set<std::string> chunks;
    for (auto& c : split_fields(f[1], ',')) {
      std::string id = trim(c);
      if (!id.empty()) chunks.insert(id);
    }
    if (chunks.empty()) {
      throw Error(Errc::InvalidData,
                  "gold line " + std::to_string(lineno) + ": empty chunk set");
    }
    gold[f[0]] = std::move(chunks);
  }
  return gold;
}

RetrievalAggregate retrieval_metrics(
    const std::map<std::string, std::vector<std::string>>& results,
    const RetrievalGold& gold) {
  if (results.empty()) throw Error(Errc::InvalidData, "no retrieval results");
  RetrievalAggregate agg;
  for (const auto& [query, retrieved_list] : results) {
    auto it = gold.find(query);
    if (it == gold.end()) {
      throw Error(Errc::InvalidData, "query '" + query + "' missing from gold");
    }
    std::set<std::string> retrieved(retrieved_list.begin(), retrieved_list.end());
    std::size_t hit = 0;
    for (const auto& id : retrieved) {
      if (it->second.count(id)) ++hit;
    }
    QueryMetrics qm;
    qm.query = query;
    qm.precision = retrieved.empty()
                       ? 0.0
                       : static_cast<double>(hit) / static_cast<double>(retrieved.size());
    qm.recall = static_cast<double>(hit) / static_cast<double>(it->second.size());
    qm.f1 = f1_of(qm.precision, qm.recall);
    agg.precision += qm.precision;
    agg.recall += qm.recall;
    agg.f1 += qm.f1;
    agg.per_query.push_back(std::move(qm));
  }
  double n = static_cast<double>(agg.per_query.size());
  agg.precision /= n;
  agg.recall /= n;
  agg.f1 /= n;
  return agg;
}

}  // namespace chronicler

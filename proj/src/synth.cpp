#include "chronicler/synth.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "chronicler/era.hpp"
#include "chronicler/errors.hpp"
#include "chronicler/gateway.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

// rng() % n instead of std::uniform_int_distribution: the distribution is
// implementation-defined, and reproducibility across standard libraries
// matters more here than bias.
std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

const std::vector<std::string> kSurnames = {
    "Shen", "Lu",  "Qian", "Zhou", "Yan", "Xu",  "Feng", "Cheng",
    "Tang", "Pan", "Gu",   "Mao",  "Fang", "Ren", "Kang", "Bao"};
const std::vector<std::string> kGivens = {
    "wei", "qian", "heng", "zhao", "lin", "yuan", "kai", "ming",
    "rong", "shu", "tai",  "xun",  "bo",  "jing", "han", "zhen"};
const std::vector<std::string> kStyledParts = {
    "Zhong", "Bo", "Shu", "Ji", "Yuan", "Jing", "Wen", "Wu", "Mu", "Xuan"};
const std::vector<std::string> kNickParts = {
    "Donglin", "Nanpo", "Xizhai", "Beiyan", "Qingxi", "Zhuxuan",
    "Songyin", "Meigang", "Lanting", "Heshan"};
const std::vector<std::string> kPlaces = {
    "Yuyao", "Shanyin", "Kuaiji", "Cixi", "Yinxian", "Fenghua", "Xiaoshan", "Zhuji"};
const std::vector<std::string> kClassics = {
    "Book of Documents", "Book of Changes", "Book of Rites", "Spring and Autumn Annals",
    "Book of Odes"};
const std::vector<std::string> kOffices = {
    "judicial officer", "registrar", "magistrate", "prefectural scholar", "archivist"};
const std::vector<std::string> kPrefectures = {
    "Songjiang", "Hangzhou", "Shaoxing", "Ningbo", "Jiaxing", "Huzhou"};
const std::vector<std::string> kRivers = {
    "Cao'e", "Puyang", "Yong", "Qiantang", "Tiaoxi"};

// Eras usable for synthetic dates; must agree with the shipped era table.
struct SynthEra {
  const char* name;
  int start;
  int end;
};
const std::vector<SynthEra> kEras = {
    {"Jiajing", 1522, 1566},  {"Wanli", 1573, 1620},   {"Chongzhen", 1628, 1644},
    {"Shunzhi", 1644, 1661},  {"Kangxi", 1662, 1722},  {"Qianlong", 1736, 1795}};

std::string two_digit(int n) {
  return n < 10 ? "0" + std::to_string(n) : std::to_string(n);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << content;
}

}  // namespace

SynthResult generate_synthetic_corpus(const SynthSpec& spec,
                                      const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (spec.figures < 1) throw Error(Errc::InvalidData, "need at least one figure");
  if (spec.distractors < 0) throw Error(Errc::InvalidData, "negative distractor count");
  if (spec.entries_per_doc < 1) throw Error(Errc::InvalidData, "entries_per_doc must be >= 1");

  std::mt19937_64 rng(spec.seed);
  fs::create_directories(out_dir);
  fs::path corpus = out_dir / "corpus";
  fs::create_directories(corpus);

  SynthResult result;
  result.corpus_dir = corpus;
  result.regex.pattern = R"((\S+), styled (\S+), nicknamed (\S+), a native of (\S+)\.)";
  result.regex.capture_roles = {"name", "styled_name", "nickname", "hometown"};
  result.regex.origin = ExtractionRegex::Origin::Handcrafted;

  // --- figures ---
  std::set<std::string> used_names;
  for (int i = 0; i < spec.figures; ++i) {
    SynthFigure f;
    do {
      f.name = kSurnames[pick(rng, kSurnames.size())] + kGivens[pick(rng, kGivens.size())];
      if (used_names.count(f.name)) {
        f.name += kGivens[pick(rng, kGivens.size())];
      }
    } while (used_names.count(f.name));
    used_names.insert(f.name);
    f.styled = kStyledParts[pick(rng, kStyledParts.size())] +
               kGivens[pick(rng, kGivens.size())];
    f.nickname = kNickParts[pick(rng, kNickParts.size())];
    f.hometown = kPlaces[pick(rng, kPlaces.size())];
    result.figures.push_back(std::move(f));
  }

  // --- entry texts ---
  std::vector<std::string> entries;
  for (auto& f : result.figures) {
    const SynthEra& born = kEras[pick(rng, kEras.size())];
    int born_ord = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(
                                                      born.end - born.start + 1)));
    int born_year = born.start + born_ord - 1;
    const SynthEra& office_era = kEras[pick(rng, kEras.size())];
    int office_ord = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(
                                                        office_era.end - office_era.start + 1)));
    int office_year = office_era.start + office_ord - 1;
    int rank = 1 + static_cast<int>(pick(rng, 99));

    std::string entry = f.name + ", styled " + f.styled + ", nicknamed " + f.nickname +
                        ", a native of " + f.hometown + ". Born in the " +
                        ordinal_words(born_ord) + " year of " + born.name + " (" +
                        std::to_string(born_year) + "). Studied the " +
                        kClassics[pick(rng, kClassics.size())] + ". Ranked " +
                        std::to_string(rank) +
                        " in the second class of the palace examination. In the " +
                        ordinal_words(office_ord) + " year of " + office_era.name + " (" +
                        std::to_string(office_year) + "), appointed " +
                        kOffices[pick(rng, kOffices.size())] + " of " +
                        kPrefectures[pick(rng, kPrefectures.size())] + " Prefecture.";
    entries.push_back(std::move(entry));
  }

  // --- documents + boundary script ---
  MockScript script;
  struct DocPlan {
    std::string id;
    std::string text;
    std::vector<std::uint32_t> starts;
  };
  std::vector<DocPlan> docs;

  for (int d = 0; d < spec.distractors; ++d) {
    const std::string& place = kPlaces[pick(rng, kPlaces.size())];
    const std::string& river = kRivers[pick(rng, kRivers.size())];
    const SynthEra& era = kEras[pick(rng, kEras.size())];
    int ord = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(era.end - era.start + 1)));
    DocPlan doc;
    doc.id = "distractor_" + two_digit(d + 1);
    doc.text = "The gazetteer of " + place + " records grain shipments along the " + river +
               " canal. Locks were rebuilt in the " + ordinal_words(ord) + " year of " +
               era.name + " after the spring floods. Ferry tolls funded the repair of the "
               "northern dike and the drum tower granary.";
    doc.starts = {0};
    docs.push_back(std::move(doc));
  }

  int volume = 0;
  for (int i = 0; i < spec.figures; i += spec.entries_per_doc) {
    ++volume;
    DocPlan doc;
    doc.id = "volume_" + two_digit(volume);
    for (int j = i; j < spec.figures && j < i + spec.entries_per_doc; ++j) {
      doc.starts.push_back(static_cast<std::uint32_t>(utf8_length(doc.text)));
      doc.text += entries[static_cast<std::size_t>(j)];
      if (j + 1 < spec.figures && j + 1 < i + spec.entries_per_doc) doc.text += "\n\n";
      result.figures[static_cast<std::size_t>(j)].chunk_id =
          doc.id + "#" + std::to_string(j - i);
    }
    docs.push_back(std::move(doc));
  }

  std::sort(docs.begin(), docs.end(),
            [](const DocPlan& a, const DocPlan& b) { return a.id < b.id; });
  for (const auto& doc : docs) {
    write_file(corpus / (doc.id + ".txt"), doc.text);
    MockEntry e;
    e.tag = "chunk";
    for (std::size_t i = 0; i < doc.starts.size(); ++i) {
      if (i) e.content += "\n";
      e.content += std::to_string(doc.starts[i]);
    }
    script.entries.push_back(std::move(e));
  }

  // Sticky index-path entries: the writing-pattern regex for entry chunks
  // (it simply fails validation on distractors, which then fall through to
  // an empty direct extraction).
  {
    MockEntry regex_entry;
    regex_entry.tag = "regex";
    regex_entry.sticky = true;
    regex_entry.content = result.regex.pattern + "\n";
    for (std::size_t i = 0; i < result.regex.capture_roles.size(); ++i) {
      if (i) regex_entry.content += "\t";
      regex_entry.content += result.regex.capture_roles[i];
    }
    script.entries.push_back(std::move(regex_entry));

    MockEntry extract_entry;
    extract_entry.tag = "extract";
    extract_entry.sticky = true;
    extract_entry.content = "";
    script.entries.push_back(std::move(extract_entry));
  }

  // Generation demo for the first figure: one supported sentence, then end.
  {
    const SynthFigure& f = result.figures.front();
    MockEntry gen1;
    gen1.tag = "generate";
    gen1.content = f.name + ", styled " + f.styled + ", a native of " + f.hometown + ".";
    script.entries.push_back(gen1);

    MockEntry dec;
    dec.tag = "decompose";
    dec.content = f.name + " is styled " + f.styled + ".\n" + f.name + " is a native of " +
                  f.hometown + ".";
    script.entries.push_back(dec);

    MockEntry v1;
    v1.tag = "verify";
    v1.content = "SUPPORTED\t" + f.chunk_id + "\tstyled " + f.styled;
    script.entries.push_back(v1);
    MockEntry v2;
    v2.tag = "verify";
    v2.content = "SUPPORTED\t" + f.chunk_id + "\ta native of " + f.hometown;
    script.entries.push_back(v2);

    MockEntry fin;
    fin.tag = "generate";
    fin.content = "<END>";
    script.entries.push_back(fin);
  }

  result.script = out_dir / "mock_script.json";
  write_file(result.script, script.to_json());

  // --- gold files ---
  {
    std::string gold;
    for (const auto& f : result.figures) {
      gold += f.name + "\t" + f.chunk_id + "\n";
    }
    result.gold_retrieval = out_dir / "gold_retrieval.tsv";
    write_file(result.gold_retrieval, gold);
  }
  {
    std::string gold;
    for (const auto& f : result.figures) {
      gold += f.name + "\tstyled_name\t" + f.styled + "\t" + f.chunk_id + "\n";
      gold += f.name + "\tnickname\t" + f.nickname + "\t" + f.chunk_id + "\n";
      gold += f.name + "\thometown\t" + f.hometown + "\t" + f.chunk_id + "\n";
    }
    result.gold_triples = out_dir / "gold_triples.tsv";
    write_file(result.gold_triples, gold);
  }
  {
    std::string labels;
    for (const auto& f : result.figures) {
      labels += f.name + "\t0\t0\n";
    }
    result.labels = out_dir / "labels.tsv";
    write_file(result.labels, labels);
  }

  // --- ready-to-run config ---
  {
    RunConfig cfg;
    cfg.corpus_root = corpus;
    cfg.index_path = out_dir / "index.kg";
    if (!spec.era_table.empty()) cfg.era_table = spec.era_table;
    if (!spec.prompts_dir.empty()) cfg.prompts_dir = spec.prompts_dir;
    cfg.review_store = out_dir / "review.ledger";
    cfg.run_root = out_dir / "runs";
    cfg.mock_script = result.script;
    cfg.gateway_mode = "mock";
    cfg.fallback_regex = R"(\S+, styled )";
    ChunkDemo demo1;
    demo1.excerpt = entries.front();
    demo1.boundaries = {0};
    cfg.chunk_demos.push_back(demo1);
    if (entries.size() > 1) {
      ChunkDemo demo2;
      demo2.excerpt = entries[0] + "\n\n" + entries[1];
      demo2.boundaries = {0, static_cast<std::uint32_t>(utf8_length(entries[0] + "\n\n"))};
      cfg.chunk_demos.push_back(demo2);
      ChunkDemo demo3;
      demo3.excerpt = "Volume preface.\n\n" + entries[1];
      demo3.boundaries = {static_cast<std::uint32_t>(utf8_length("Volume preface.\n\n"))};
      cfg.chunk_demos.push_back(demo3);
    }
    ExtractionDemo xdemo;
    xdemo.excerpt = entries.front();
    xdemo.pattern = result.regex.pattern;
    xdemo.roles = result.regex.capture_roles;
    cfg.extraction_demos.push_back(xdemo);
    result.config = out_dir / "chronicler.ini";
    write_file(result.config, cfg.to_ini().serialize());
  }

  return result;
}

}  // namespace chronicler

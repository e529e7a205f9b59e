#include "chronicler/era.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler {

namespace {

const std::array<const char*, 20> kOrdinals = {
    "first",      "second",     "third",     "fourth",    "fifth",
    "sixth",      "seventh",    "eighth",    "ninth",     "tenth",
    "eleventh",   "twelfth",    "thirteenth", "fourteenth", "fifteenth",
    "sixteenth",  "seventeenth", "eighteenth", "nineteenth", "twentieth"};

const std::map<int, std::pair<const char*, const char*>> kTens = {
    {20, {"twenty", "twentieth"}},
    {30, {"thirty", "thirtieth"}},
    {40, {"forty", "fortieth"}},
    {50, {"fifty", "fiftieth"}},
    {60, {"sixty", "sixtieth"}},
    {70, {"seventy", "seventieth"}},
    {80, {"eighty", "eightieth"}},
    {90, {"ninety", "ninetieth"}},
};

const char32_t kCnDigits[] = {U'一', U'二', U'三', U'四', U'五',
                              U'六', U'七', U'八', U'九'};

bool is_ascii_alpha(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

}  // namespace

std::string ordinal_words(int n) {
  if (n < 1 || n > 99) throw Error(Errc::InvalidData, "ordinal out of supported range");
  if (n <= 20) return kOrdinals[n - 1];
  int tens = (n / 10) * 10;
  int ones = n % 10;
  auto it = kTens.find(tens);
  if (ones == 0) return it->second.second;
  return std::string(it->second.first) + "-" + kOrdinals[ones - 1];
}

std::optional<int> parse_ordinal_words(const std::string& words) {
  static const std::map<std::string, int>* table = [] {
    auto* m = new std::map<std::string, int>;
    for (int i = 1; i <= 99; ++i) (*m)[ordinal_words(i)] = i;
    return m;
  }();
  auto it = table->find(lower_ascii(trim(words)));
  if (it == table->end()) return std::nullopt;
  return it->second;
}

std::string chinese_numeral(int n) {
  if (n < 1 || n > 99) throw Error(Errc::InvalidData, "numeral out of supported range");
  std::u32string out;
  int tens = n / 10;
  int ones = n % 10;
  if (tens >= 2) out.push_back(kCnDigits[tens - 1]);
  if (tens >= 1) out.push_back(U'十');
  if (ones > 0) out.push_back(kCnDigits[ones - 1]);
  return utf8_encode(out);
}

std::optional<int> parse_chinese_numeral(const std::string& s) {
  static const std::map<std::string, int>* table = [] {
    auto* m = new std::map<std::string, int>;
    for (int i = 1; i <= 99; ++i) (*m)[chinese_numeral(i)] = i;
    (*m)[utf8_encode(U"元")] = 1;
    return m;
  }();
  auto it = table->find(trim(s));
  if (it == table->end()) return std::nullopt;
  return it->second;
}

EraTable EraTable::from_entries(std::vector<EraEntry> entries) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    if (e.era_name.empty() || e.dynasty.empty()) {
      throw Error(Errc::InvalidData, "era entry with empty name or dynasty");
    }
    if (e.start_year > e.end_year) {
      throw Error(Errc::InvalidData, "era " + e.era_name + " has start > end");
    }
    if (!seen.insert({e.era_name, e.dynasty}).second) {
      throw Error(Errc::InvalidData,
                  "duplicate era " + e.era_name + " in dynasty " + e.dynasty);
    }
  }
  EraTable t;
  t.entries_ = std::move(entries);
  return t;
}

EraTable EraTable::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open era table " + file.string());
  std::vector<EraEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = split_fields(t, '\t');
    if (f.size() != 4) {
      throw Error(Errc::InvalidData,
                  "era table line " + std::to_string(lineno) + ": expected 4 fields");
    }
    EraEntry e;
    e.era_name = trim(f[0]);
    e.dynasty = trim(f[1]);
    try {
      e.start_year = std::stoi(f[2]);
      e.end_year = std::stoi(f[3]);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidData,
                  "era table line " + std::to_string(lineno) + ": bad year");
    }
    entries.push_back(std::move(e));
  }
  return from_entries(std::move(entries));
}

std::vector<const EraEntry*> EraTable::find(const std::string& era_name) const {
  std::vector<const EraEntry*> out;
  for (const auto& e : entries_) {
    if (e.era_name == era_name) out.push_back(&e);
  }
  return out;
}

int era_to_gregorian(const EraTable& table, const EraDate& date) {
  if (date.ordinal_year < 1) {
    throw Error(Errc::InvalidData, "ordinal year must be >= 1");
  }
  auto candidates = table.find(date.era_name);
  if (candidates.empty()) {
    throw Error(Errc::UnknownEra, "era '" + date.era_name + "' not in table");
  }
  for (const EraEntry* e : candidates) {
    if (date.ordinal_year <= e->length()) {
      return e->start_year + date.ordinal_year - 1;
    }
  }
  throw Error(Errc::OrdinalOutOfRange,
              "year " + std::to_string(date.ordinal_year) + " exceeds era '" +
                  date.era_name + "'");
}

std::vector<std::pair<EraEntry, int>> gregorian_to_era(const EraTable& table, int year) {
  std::vector<std::pair<EraEntry, int>> out;
  for (const auto& e : table.entries()) {
    if (year >= e.start_year && year <= e.end_year) {
      out.emplace_back(e, year - e.start_year + 1);
    }
  }
  return out;
}

namespace {

// Attaches "(1630)" / "（1630）" following `from`, skipping a short run of
// connective words such as "of the Ming dynasty".
void attach_stated_year(const std::u32string& text, std::size_t from, EraMention& m) {
  std::size_t i = from;
  std::size_t skipped = 0;
  while (i < text.size() && skipped < 40) {
    char32_t c = text[i];
    if (c == U'(' || c == 0xFF08) {
      std::size_t j = i + 1;
      std::size_t digit_begin = j;
      int year = 0, digits = 0;
      while (j < text.size() && is_digit(text[j]) && digits < 5) {
        year = year * 10 + static_cast<int>(text[j] - U'0');
        ++digits;
        ++j;
      }
      if (digits < 3 || digits > 4) return;
      if (j >= text.size() || (text[j] != U')' && text[j] != 0xFF09)) return;
      m.stated_year = year;
      m.year_begin = digit_begin;
      m.year_end = j;
      return;
    }
    // connective text: letters, spaces and CJK only; a terminator or digit
    // ends the scan
    if (is_digit(c) || c == U'.' || c == 0x3002 || c == U',' || c == 0xFF0C) return;
    if (!is_ascii_alpha(c) && !is_space_char(c) && !is_cjk(c)) return;
    ++i;
    ++skipped;
  }
}

}  // namespace

std::vector<EraMention> find_era_mentions(const EraTable& table, const std::string& text) {
  std::u32string utext = utf8_decode(text);
  std::vector<EraMention> mentions;
  std::set<std::pair<std::size_t, std::size_t>> taken;

  // longest era names first so e.g. a two-char name wins over a one-char prefix
  std::vector<std::u32string> names;
  for (const auto& e : table.entries()) names.push_back(utf8_decode(e.era_name));
  std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  names.erase(std::unique(names.begin(), names.end()), names.end());

  for (const auto& name : names) {
    if (name.empty()) continue;
    std::size_t pos = 0;
    while ((pos = utext.find(name, pos)) != std::u32string::npos) {
      std::size_t era_begin = pos;
      std::size_t era_end = pos + name.size();
      pos = era_end;

      bool overlaps = false;
      for (const auto& [b, e] : taken) {
        if (era_begin < e && b < era_end) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;

      EraMention m;
      m.date.era_name = utf8_encode(name);

      // Chinese style: <era><numeral>年
      {
        std::size_t j = era_end;
        std::u32string numeral;
        while (j < utext.size() && numeral.size() < 4 &&
               (is_digit(utext[j]) || utext[j] == U'元' || utext[j] == U'十' ||
                std::find(std::begin(kCnDigits), std::end(kCnDigits), utext[j]) !=
                    std::end(kCnDigits))) {
          numeral.push_back(utext[j]);
          ++j;
        }
        if (!numeral.empty() && j < utext.size() && utext[j] == U'年') {
          std::string ns = utf8_encode(numeral);
          std::optional<int> ord;
          if (std::all_of(ns.begin(), ns.end(),
                          [](char c) { return c >= '0' && c <= '9'; })) {
            ord = std::stoi(ns);
          } else {
            ord = parse_chinese_numeral(ns);
          }
          if (ord && *ord >= 1) {
            m.date.ordinal_year = *ord;
            m.phrase_begin = era_begin;
            m.phrase_end = j + 1;  // include 年
            attach_stated_year(utext, m.phrase_end, m);
            taken.insert({m.phrase_begin, m.phrase_end});
            mentions.push_back(std::move(m));
            continue;
          }
        }
      }

      // English style: [the] <ordinal words> year of [the] <era>
      {
        static const std::u32string kYearOf = U" year of ";
        std::size_t b = era_begin;
        std::u32string prefix = utext.substr(0, b);
        std::size_t anchor = b;
        static const std::u32string kThe = U"the ";
        if (anchor >= kThe.size() &&
            prefix.compare(anchor - kThe.size(), kThe.size(), kThe) == 0) {
          anchor -= kThe.size();
        }
        if (anchor >= kYearOf.size() &&
            prefix.compare(anchor - kYearOf.size(), kYearOf.size(), kYearOf) == 0) {
          std::size_t words_end = anchor - kYearOf.size();
          // scan back over ordinal words (letters and hyphens, possibly two
          // words like "twenty-third")
          std::size_t ws = words_end;
          while (ws > 0 && (is_ascii_alpha(utext[ws - 1]) || utext[ws - 1] == U'-')) {
            --ws;
          }
          if (ws < words_end) {
            std::string words = utf8_encode(utext.substr(ws, words_end - ws));
            if (auto ord = parse_ordinal_words(words)) {
              std::size_t phrase_begin = ws;
              static const std::u32string kThe2 = U"the ";
              if (phrase_begin >= kThe2.size() &&
                  utext.compare(phrase_begin - kThe2.size(), kThe2.size(), kThe2) == 0) {
                phrase_begin -= kThe2.size();
              }
              m.date.ordinal_year = *ord;
              m.phrase_begin = phrase_begin;
              m.phrase_end = era_end;
              attach_stated_year(utext, m.phrase_end, m);
              taken.insert({m.phrase_begin, m.phrase_end});
              mentions.push_back(std::move(m));
              continue;
            }
          }
        }
      }
    }
  }

  std::sort(mentions.begin(), mentions.end(),
            [](const EraMention& a, const EraMention& b) {
              return a.phrase_begin < b.phrase_begin;
            });
  return mentions;
}

std::vector<YearMention> find_bare_years(const std::string& text,
                                         const std::vector<EraMention>& skip) {
  std::u32string utext = utf8_decode(text);
  std::vector<YearMention> out;
  std::size_t i = 0;
  while (i < utext.size()) {
    if (!is_digit(utext[i])) {
      ++i;
      continue;
    }
    std::size_t b = i;
    int value = 0;
    while (i < utext.size() && is_digit(utext[i]) && i - b < 6) {
      value = value * 10 + static_cast<int>(utext[i] - U'0');
      ++i;
    }
    std::size_t e = i;
    if (e - b != 4 || value < 1000 || value > 2200) continue;
    bool inside = false;
    for (const auto& m : skip) {
      std::size_t mb = m.phrase_begin;
      std::size_t me = m.stated_year ? std::max(m.year_end + 1, m.phrase_end) : m.phrase_end;
      if (b >= mb && e <= me) {
        inside = true;
        break;
      }
    }
    if (!inside) out.push_back(YearMention{value, b, e});
  }
  return out;
}

}  // namespace chronicler

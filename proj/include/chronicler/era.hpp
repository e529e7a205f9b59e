#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chronicler {

// Regnal era calendar: a year is written as (era name, ordinal) and converts
// to the Gregorian calendar as era start + ordinal - 1.

struct EraEntry {
  std::string era_name;
  std::string dynasty;
  int start_year = 0;
  int end_year = 0;

  int length() const { return end_year - start_year + 1; }
  bool operator==(const EraEntry& other) const = default;
};

class EraTable {
 public:
  static EraTable from_entries(std::vector<EraEntry> entries);
  // One era per line: era<TAB>dynasty<TAB>start<TAB>end. '#' comments allowed.
  static EraTable load(const std::filesystem::path& file);

  const std::vector<EraEntry>& entries() const { return entries_; }
  std::vector<const EraEntry*> find(const std::string& era_name) const;

 private:
  std::vector<EraEntry> entries_;
};

struct EraDate {
  std::string era_name;
  int ordinal_year = 1;     // >= 1
  std::string month_day;    // carried verbatim when present, not interpreted
};

// start + ordinal - 1. Throws UnknownEra / OrdinalOutOfRange.
int era_to_gregorian(const EraTable& table, const EraDate& date);

// All (era, ordinal) pairs whose span covers the year (eras can overlap at
// succession years).
std::vector<std::pair<EraEntry, int>> gregorian_to_era(const EraTable& table, int year);

// A dated phrase found in running text, e.g. "崇祯三年（1630）" or
// "the third year of Chongzhen (1630)". Spans are code-point offsets.
struct EraMention {
  EraDate date;
  std::size_t phrase_begin = 0;  // era + ordinal words
  std::size_t phrase_end = 0;
  std::optional<int> stated_year;       // parenthesized Gregorian year, if any
  std::size_t year_begin = 0;           // digit-run span when stated_year set
  std::size_t year_end = 0;
};

// Recognized forms: "<era><numeral>年", "<era>元年" (Chinese numerals or
// ASCII digits) and "[the] <ordinal words> year of [the] <era>". A
// parenthesized Gregorian year up to ~40 characters after the phrase is
// attached when present.
std::vector<EraMention> find_era_mentions(const EraTable& table, const std::string& text);

// Standalone 4-digit years (1000..2200) outside any era mention.
struct YearMention {
  int year = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::vector<YearMention> find_bare_years(const std::string& text,
                                         const std::vector<EraMention>& skip = {});

// Numeral helpers (1..99).
std::string ordinal_words(int n);                       // 18 -> "eighteenth"
std::optional<int> parse_ordinal_words(const std::string& words);
std::string chinese_numeral(int n);                     // 18 -> 十八
std::optional<int> parse_chinese_numeral(const std::string& s);

}  // namespace chronicler

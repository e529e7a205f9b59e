#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// A small linear-time regex engine (Thompson NFA simulated with a Pike VM).
// Extraction patterns are authored by an LLM, so the engine must not be able
// to backtrack exponentially and every match call charges against an explicit
// step budget.
//
// Dialect:
//   literals, '.', '^', '$', '|', capturing '(...)', non-capturing '(?:...)',
//   classes '[...]' / '[^...]' with ranges, quantifiers '*' '+' '?' '{m}'
//   '{m,}' '{m,n}' plus lazy variants, escapes \d \D \w \W \s \S \n \t \r
//   and identity escapes of punctuation. Matching is over Unicode scalar
//   values; '.' matches anything except '\n'.
// Rejected at compile time (keeps matching linear): backreferences,
// lookaround, named groups, unknown letter escapes, repetition counts > 64,
// programs > 4096 instructions.

namespace chronicler::rx {

struct ClassRange {
  char32_t lo;
  char32_t hi;
};

struct CharClass {
  bool negated = false;
  std::vector<ClassRange> ranges;
  bool contains(char32_t c) const;
};

enum class Op : std::uint8_t {
  Char,    // exact code point
  Class,   // character class
  Any,     // '.' (not newline)
  Match,
  Jmp,
  Split,
  Save,
  AssertBegin,
  AssertEnd,
};

struct Inst {
  Op op;
  char32_t ch = 0;
  std::int32_t x = 0;  // Jmp/Split target
  std::int32_t y = 0;  // Split alternative
  std::uint16_t idx = 0;  // class index or save slot
};

class Program {
 public:
  std::vector<Inst> code;
  std::vector<CharClass> classes;
  int group_count = 0;  // capturing groups, excluding whole match

  std::size_t slot_count() const { return 2 * (group_count + 1); }
};

// Throws Error(InvalidPattern) with a reason for dialect violations.
Program compile(std::string_view pattern);

struct Match {
  // Code-point offsets; group 0 is the whole match. Unset slots are -1.
  std::vector<std::int64_t> slots;

  std::int64_t begin() const { return slots[0]; }
  std::int64_t end() const { return slots[1]; }
  bool group_set(int g) const {
    return slots[2 * g] >= 0 && slots[2 * g + 1] >= 0;
  }
};

struct SearchResult {
  std::optional<Match> match;
  bool budget_exceeded = false;
  std::uint64_t steps_used = 0;
};

// Leftmost match at or after `from` (code-point offset). `budget` caps VM
// steps; exceeding it aborts with budget_exceeded set.
SearchResult search(const Program& prog, std::u32string_view text,
                    std::size_t from, std::uint64_t budget);

struct FindAllResult {
  std::vector<Match> matches;  // non-overlapping, left to right
  bool budget_exceeded = false;
  std::uint64_t steps_used = 0;
};

FindAllResult find_all(const Program& prog, std::u32string_view text,
                       std::uint64_t budget);

}  // namespace chronicler::rx

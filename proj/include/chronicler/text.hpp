#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text utilities shared across the engine. All character offsets in the
// public data model are Unicode scalar-value offsets, never bytes: the
// corpus is CJK-heavy and byte offsets would split code points.

namespace chronicler {

// --- UTF-8 -----------------------------------------------------------------

bool utf8_valid(std::string_view bytes);

// Decodes UTF-8; invalid sequences throw Error(InvalidData).
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view points);

// Number of code points.
std::size_t utf8_length(std::string_view bytes);

// Substring [start, end) in code-point offsets, returned as UTF-8.
std::string utf8_slice(std::string_view bytes, std::size_t start, std::size_t end);

// --- character classes -----------------------------------------------------

// Han ideographs, kana and hangul: scripts tokenized per character.
bool is_cjk(char32_t c);
bool is_space_char(char32_t c);  // ASCII whitespace + U+3000

// --- tokenization ----------------------------------------------------------

// Tokenizer used by both the verifier's Jaccard filter and the ROUGE
// metrics: CJK code points become single-character tokens, runs of other
// letters become lowercased word tokens, runs of ASCII digits stay whole.
// Whitespace and punctuation separate tokens.
std::vector<std::string> tokenize(std::string_view text);

// --- names -----------------------------------------------------------------

// Lookup key for entity names: trim, collapse internal whitespace to one
// space, case-fold Latin letters; CJK is left as-is.
std::string normalize_name(std::string_view name);

// Trim ASCII whitespace and U+3000 from both ends.
std::string trim(std::string_view s);

// --- sentences ---------------------------------------------------------------

// Splits on terminal punctuation for CJK (U+3002 U+FF01 U+FF1F U+FF1B) and
// Latin (. ! ? ;), keeping the delimiter with the sentence. Concatenating
// the result always reproduces the input.
std::vector<std::string> split_sentences(std::string_view text);

// --- records ---------------------------------------------------------------

// Escaping for tab-separated record files: \t, \n, \r and backslash.
std::string tsv_escape(std::string_view field);
std::string tsv_unescape(std::string_view field);
std::vector<std::string> split_fields(std::string_view line, char delim = '\t');

// --- misc --------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string fnv1a_hex(std::string_view bytes);

// Levenshtein distance over code points; used for near-name suggestions.
std::size_t edit_distance(std::string_view a, std::string_view b);

std::string lower_ascii(std::string_view s);

}  // namespace chronicler

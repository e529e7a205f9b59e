#include "chronicler/text.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "chronicler/errors.hpp"

namespace chronicler {

namespace {

// Returns sequence length for a UTF-8 lead byte, 0 if invalid.
int lead_len(unsigned char b) {
  if (b < 0x80) return 1;
  if ((b & 0xE0) == 0xC0) return 2;
  if ((b & 0xF0) == 0xE0) return 3;
  if ((b & 0xF8) == 0xF0) return 4;
  return 0;
}

bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

// Decodes one code point at s[i]; returns false on malformed input.
bool decode_one(std::string_view s, std::size_t& i, char32_t& out) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  int len = lead_len(b0);
  if (len == 0 || i + len > s.size()) return false;
  char32_t cp = 0;
  switch (len) {
    case 1:
      cp = b0;
      break;
    case 2:
      if (!is_cont(s[i + 1])) return false;
      cp = (b0 & 0x1F) << 6 | (s[i + 1] & 0x3F);
      if (cp < 0x80) return false;  // overlong
      break;
    case 3:
      if (!is_cont(s[i + 1]) || !is_cont(s[i + 2])) return false;
      cp = (b0 & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
      if (cp < 0x800) return false;
      if (cp >= 0xD800 && cp <= 0xDFFF) return false;  // surrogate
      break;
    case 4:
      if (!is_cont(s[i + 1]) || !is_cont(s[i + 2]) || !is_cont(s[i + 3])) return false;
      cp = (char32_t)(b0 & 0x07) << 18 | (char32_t)(s[i + 1] & 0x3F) << 12 |
           (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F);
      if (cp < 0x10000 || cp > 0x10FFFF) return false;
      break;
  }
  i += len;
  out = cp;
  return true;
}

void encode_one(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

// Latin case fold: ASCII plus Latin-1 letters. CJK is never folded.
char32_t fold_latin(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

bool is_separator(char32_t c) {
  if (is_space_char(c)) return true;
  if (c < 0x80) return !(c >= U'0' && c <= U'9') && !(c >= U'a' && c <= U'z') &&
                       !(c >= U'A' && c <= U'Z');
  // general punctuation, CJK symbols/punctuation, fullwidth punctuation
  if (c >= 0x2000 && c <= 0x206F) return true;
  if (c >= 0x3000 && c <= 0x303F) return true;
  if (c >= 0xFF00 && c <= 0xFF0F) return true;
  if (c >= 0xFF1A && c <= 0xFF20) return true;
  if (c >= 0xFF3B && c <= 0xFF40) return true;
  if (c >= 0xFF5B && c <= 0xFF65) return true;
  return false;
}

}  // namespace

bool utf8_valid(std::string_view bytes) {
  std::size_t i = 0;
  char32_t cp;
  while (i < bytes.size()) {
    if (!decode_one(bytes, i, cp)) return false;
  }
  return true;
}

std::u32string utf8_decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < bytes.size()) {
    if (!decode_one(bytes, i, cp)) {
      throw Error(Errc::InvalidData, "invalid UTF-8 at byte " + std::to_string(i));
    }
    out.push_back(cp);
  }
  return out;
}

std::string utf8_encode(std::u32string_view points) {
  std::string out;
  out.reserve(points.size());
  for (char32_t cp : points) encode_one(cp, out);
  return out;
}

std::size_t utf8_length(std::string_view bytes) {
  std::size_t i = 0, n = 0;
  char32_t cp;
  while (i < bytes.size()) {
    if (!decode_one(bytes, i, cp)) {
      throw Error(Errc::InvalidData, "invalid UTF-8 at byte " + std::to_string(i));
    }
    ++n;
  }
  return n;
}

std::string utf8_slice(std::string_view bytes, std::size_t start, std::size_t end) {
  if (start > end) throw Error(Errc::InvalidData, "slice start > end");
  std::size_t i = 0, n = 0;
  std::size_t byte_start = bytes.size(), byte_end = bytes.size();
  bool have_start = start == 0 ? (byte_start = 0, true) : false;
  bool have_end = end == 0 ? (byte_end = 0, true) : false;
  char32_t cp;
  while (i < bytes.size() && !have_end) {
    if (!decode_one(bytes, i, cp)) {
      throw Error(Errc::InvalidData, "invalid UTF-8 at byte " + std::to_string(i));
    }
    ++n;
    if (!have_start && n == start) {
      byte_start = i;
      have_start = true;
    }
    if (n == end) {
      byte_end = i;
      have_end = true;
    }
  }
  if (!have_start || (!have_end && end > n)) {
    throw Error(Errc::InvalidData, "slice out of range");
  }
  return std::string(bytes.substr(byte_start, byte_end - byte_start));
}

bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) ||    // CJK unified
         (c >= 0x3400 && c <= 0x4DBF) ||    // extension A
         (c >= 0xF900 && c <= 0xFAFF) ||    // compatibility ideographs
         (c >= 0x20000 && c <= 0x2A6DF) ||  // extension B
         (c >= 0x3040 && c <= 0x30FF) ||    // kana
         (c >= 0xAC00 && c <= 0xD7AF);      // hangul
}

bool is_space_char(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x3000;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string word;
  std::u32string digits;
  auto flush_word = [&] {
    if (!word.empty()) {
      tokens.push_back(utf8_encode(word));
      word.clear();
    }
  };
  auto flush_digits = [&] {
    if (!digits.empty()) {
      tokens.push_back(utf8_encode(digits));
      digits.clear();
    }
  };
  std::size_t i = 0;
  char32_t cp;
  while (i < text.size()) {
    std::size_t before = i;
    if (!decode_one(text, i, cp)) {
      throw Error(Errc::InvalidData, "invalid UTF-8 at byte " + std::to_string(before));
    }
    if (is_ascii_digit(cp)) {
      flush_word();
      digits.push_back(cp);
    } else if (is_cjk(cp)) {
      flush_word();
      flush_digits();
      tokens.push_back(utf8_encode(std::u32string(1, cp)));
    } else if (is_separator(cp)) {
      flush_word();
      flush_digits();
    } else {
      flush_digits();
      word.push_back(fold_latin(cp));
    }
  }
  flush_word();
  flush_digits();
  return tokens;
}

std::string normalize_name(std::string_view name) {
  std::u32string in = utf8_decode(name);
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : in) {
    if (is_space_char(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(fold_latin(c));
  }
  return utf8_encode(out);
}

std::string trim(std::string_view s) {
  std::u32string in = utf8_decode(s);
  std::size_t b = 0, e = in.size();
  while (b < e && is_space_char(in[b])) ++b;
  while (e > b && is_space_char(in[e - 1])) --e;
  return utf8_encode(std::u32string_view(in).substr(b, e - b));
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0, piece_start = 0;
  char32_t cp;
  while (i < text.size()) {
    std::size_t before = i;
    if (!decode_one(text, i, cp)) {
      throw Error(Errc::InvalidData, "invalid UTF-8 at byte " + std::to_string(before));
    }
    bool terminal = cp == U'.' || cp == U'!' || cp == U'?' || cp == U';' ||
                    cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F || cp == 0xFF1B;
    if (terminal) {
      out.emplace_back(text.substr(piece_start, i - piece_start));
      piece_start = i;
    }
  }
  if (piece_start < text.size()) out.emplace_back(text.substr(piece_start));
  return out;
}

std::string tsv_escape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string tsv_unescape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\' || i + 1 == field.size()) {
      out.push_back(field[i]);
      continue;
    }
    switch (field[++i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default:
        out.push_back('\\');
        out.push_back(field[i]);
    }
  }
  return out;
}

std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      fields.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return std::string(buf);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::u32string ua = utf8_decode(a), ub = utf8_decode(b);
  std::vector<std::size_t> prev(ub.size() + 1), cur(ub.size() + 1);
  for (std::size_t j = 0; j <= ub.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ua.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ub.size(); ++j) {
      std::size_t sub = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[ub.size()];
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : static_cast<char>(c);
  });
  return out;
}

}  // namespace chronicler

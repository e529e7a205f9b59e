#include "chronicler/regex.hpp"

#include <algorithm>
#include <cassert>
#include <memory>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"

namespace chronicler::rx {

namespace {

constexpr std::size_t kMaxProgram = 4096;
constexpr int kMaxRepeat = 64;
constexpr int kMaxGroups = 30;

[[noreturn]] void fail(std::string_view why, std::size_t pos) {
  throw Error(Errc::InvalidPattern,
              std::string(why) + " at pattern offset " + std::to_string(pos));
}

// --- AST ---------------------------------------------------------------------

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  enum Kind { Literal, AnyChar, Klass, Concat, Alt, Repeat, Group, Begin, End } kind;
  char32_t ch = 0;
  CharClass cls;
  std::vector<NodePtr> kids;
  int min = 0, max = 0;  // Repeat; max == -1 is unbounded
  bool lazy = false;
  int group_index = -1;  // Group; -1 when non-capturing
};

NodePtr make(Node::Kind k) {
  auto n = std::make_unique<Node>();
  n->kind = k;
  return n;
}

class Parser {
 public:
  explicit Parser(std::u32string_view pattern) : p_(pattern) {}

  NodePtr parse(int& group_count) {
    NodePtr n = parse_alt();
    if (pos_ < p_.size()) fail("unbalanced ')'", pos_);
    group_count = next_group_ - 1;
    return n;
  }

 private:
  std::u32string_view p_;
  std::size_t pos_ = 0;
  int next_group_ = 1;

  bool eof() const { return pos_ >= p_.size(); }
  char32_t peek() const { return p_[pos_]; }
  char32_t take() { return p_[pos_++]; }
  bool eat(char32_t c) {
    if (!eof() && peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_alt() {
    NodePtr first = parse_concat();
    if (eof() || peek() != U'|') return first;
    auto alt = make(Node::Alt);
    alt->kids.push_back(std::move(first));
    while (eat(U'|')) alt->kids.push_back(parse_concat());
    return alt;
  }

  NodePtr parse_concat() {
    auto cat = make(Node::Concat);
    while (!eof() && peek() != U'|' && peek() != U')') {
      cat->kids.push_back(parse_repeat());
    }
    if (cat->kids.size() == 1) return std::move(cat->kids[0]);
    return cat;
  }

  NodePtr parse_repeat() {
    NodePtr atom = parse_atom();
    while (!eof()) {
      int min, max;
      if (peek() == U'*') {
        min = 0; max = -1; ++pos_;
      } else if (peek() == U'+') {
        min = 1; max = -1; ++pos_;
      } else if (peek() == U'?') {
        min = 0; max = 1; ++pos_;
      } else if (peek() == U'{') {
        std::size_t save = pos_;
        if (!parse_counts(min, max)) {
          pos_ = save;
          break;  // literal '{'
        }
      } else {
        break;
      }
      if (atom->kind == Node::Begin || atom->kind == Node::End) {
        fail("quantifier on anchor", pos_);
      }
      auto rep = make(Node::Repeat);
      rep->min = min;
      rep->max = max;
      rep->lazy = eat(U'?');
      rep->kids.push_back(std::move(atom));
      atom = std::move(rep);
    }
    return atom;
  }

  // '{m}' '{m,}' '{m,n}'. Returns false when not a counted repeat (treat as
  // a literal brace, matching common engines).
  bool parse_counts(int& min, int& max) {
    assert(peek() == U'{');
    ++pos_;
    if (eof() || !is_digit(peek())) return false;
    min = parse_int();
    if (eat(U'}')) {
      max = min;
    } else if (eat(U',')) {
      if (eat(U'}')) {
        max = -1;
      } else {
        if (eof() || !is_digit(peek())) return false;
        max = parse_int();
        if (!eat(U'}')) return false;
        if (max < min) fail("repeat range inverted", pos_);
      }
    } else {
      return false;
    }
    if (min > kMaxRepeat || (max > kMaxRepeat)) fail("repeat count too large", pos_);
    return true;
  }

  static bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

  int parse_int() {
    long v = 0;
    while (!eof() && is_digit(peek())) {
      v = v * 10 + static_cast<long>(take() - U'0');
      if (v > 1'000'000) v = 1'000'000;  // keep consuming digits, cap the value
    }
    return static_cast<int>(v);
  }

  NodePtr parse_atom() {
    if (eof()) fail("pattern ends unexpectedly", pos_);
    char32_t c = take();
    switch (c) {
      case U'(': {
        bool capturing = true;
        if (!eof() && peek() == U'?') {
          ++pos_;
          if (eat(U':')) {
            capturing = false;
          } else {
            fail("unsupported group construct (lookaround/named groups are outside the dialect)", pos_);
          }
        }
        auto g = make(Node::Group);
        if (capturing) {
          if (next_group_ > kMaxGroups) fail("too many capture groups", pos_);
          g->group_index = next_group_++;
        }
        g->kids.push_back(parse_alt());
        if (!eat(U')')) fail("missing ')'", pos_);
        return g;
      }
      case U')':
        fail("unbalanced ')'", pos_ - 1);
      case U'[':
        return parse_class();
      case U'.':
        return make(Node::AnyChar);
      case U'^':
        return make(Node::Begin);
      case U'$':
        return make(Node::End);
      case U'*':
      case U'+':
      case U'?':
        fail("quantifier with nothing to repeat", pos_ - 1);
      case U'\\':
        return parse_escape(false);
      default: {
        auto n = make(Node::Literal);
        n->ch = c;
        return n;
      }
    }
  }

  static void add_range(CharClass& cls, char32_t lo, char32_t hi) {
    cls.ranges.push_back({lo, hi});
  }

  static void add_perl_class(CharClass& cls, char32_t kind) {
    switch (kind) {
      case U'd': add_range(cls, U'0', U'9'); break;
      case U'w':
        add_range(cls, U'a', U'z');
        add_range(cls, U'A', U'Z');
        add_range(cls, U'0', U'9');
        add_range(cls, U'_', U'_');
        break;
      case U's':
        add_range(cls, U' ', U' ');
        add_range(cls, U'\t', U'\t');
        add_range(cls, U'\n', U'\n');
        add_range(cls, U'\r', U'\r');
        add_range(cls, U'\f', U'\f');
        add_range(cls, U'\v', U'\v');
        add_range(cls, 0x3000, 0x3000);
        break;
      default:
        assert(false);
    }
  }

  // Escapes valid both inside and outside classes. Letter escapes not in the
  // dialect are rejected rather than silently treated as literals.
  NodePtr parse_escape(bool in_class) {
    if (eof()) fail("trailing backslash", pos_);
    char32_t c = take();
    auto lit = [&](char32_t ch) {
      auto n = make(Node::Literal);
      n->ch = ch;
      return n;
    };
    switch (c) {
      case U'n': return lit(U'\n');
      case U't': return lit(U'\t');
      case U'r': return lit(U'\r');
      case U'f': return lit(U'\f');
      case U'v': return lit(U'\v');
      case U'0': return lit(U'\0');
      case U'd': case U'D':
      case U'w': case U'W':
      case U's': case U'S': {
        auto n = make(Node::Klass);
        n->cls.negated = (c == U'D' || c == U'W' || c == U'S');
        add_perl_class(n->cls, static_cast<char32_t>(c | 0x20));
        return n;
      }
      default:
        if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) {
          fail("unsupported escape (backreferences/anchor escapes are outside the dialect)", pos_ - 1);
        }
        if (c >= U'1' && c <= U'9') {
          fail("backreferences are outside the dialect", pos_ - 1);
        }
        (void)in_class;
        return lit(c);
    }
  }

  NodePtr parse_class() {
    auto n = make(Node::Klass);
    CharClass& cls = n->cls;
    if (eat(U'^')) cls.negated = true;
    bool first = true;
    while (true) {
      if (eof()) fail("missing ']'", pos_);
      if (peek() == U']' && !first) {
        ++pos_;
        break;
      }
      first = false;
      char32_t lo;
      if (peek() == U'\\') {
        ++pos_;
        NodePtr e = parse_escape(true);
        if (e->kind == Node::Klass) {
          if (e->cls.negated) fail("negated class escape inside a class", pos_);
          for (auto r : e->cls.ranges) cls.ranges.push_back(r);
          continue;
        }
        lo = e->ch;
      } else {
        lo = take();
      }
      char32_t hi = lo;
      if (!eof() && peek() == U'-' && pos_ + 1 < p_.size() && p_[pos_ + 1] != U']') {
        ++pos_;  // '-'
        if (peek() == U'\\') {
          ++pos_;
          NodePtr e = parse_escape(true);
          if (e->kind == Node::Klass) fail("class escape as range bound", pos_);
          hi = e->ch;
        } else {
          hi = take();
        }
        if (hi < lo) fail("class range inverted", pos_);
      }
      add_range(cls, lo, hi);
    }
    return n;
  }
};

// --- compiler ----------------------------------------------------------------

class Compiler {
 public:
  Program run(const Node& root, int group_count) {
    prog_.group_count = group_count;
    emit(Op::Save, 0);
    compile(root);
    emit(Op::Save, 1);
    emit(Op::Match);
    return std::move(prog_);
  }

 private:
  Program prog_;

  std::int32_t here() const { return static_cast<std::int32_t>(prog_.code.size()); }

  std::int32_t emit(Op op, std::uint16_t idx = 0) {
    if (prog_.code.size() >= kMaxProgram) {
      throw Error(Errc::InvalidPattern, "compiled program too large");
    }
    Inst i;
    i.op = op;
    i.idx = idx;
    prog_.code.push_back(i);
    return here() - 1;
  }

  void compile(const Node& n) {
    switch (n.kind) {
      case Node::Literal: {
        std::int32_t pc = emit(Op::Char);
        prog_.code[pc].ch = n.ch;
        break;
      }
      case Node::AnyChar:
        emit(Op::Any);
        break;
      case Node::Klass: {
        std::int32_t pc = emit(Op::Class, static_cast<std::uint16_t>(prog_.classes.size()));
        (void)pc;
        prog_.classes.push_back(n.cls);
        break;
      }
      case Node::Begin:
        emit(Op::AssertBegin);
        break;
      case Node::End:
        emit(Op::AssertEnd);
        break;
      case Node::Concat:
        for (const auto& k : n.kids) compile(*k);
        break;
      case Node::Group:
        if (n.group_index >= 0) {
          emit(Op::Save, static_cast<std::uint16_t>(2 * n.group_index));
          compile(*n.kids[0]);
          emit(Op::Save, static_cast<std::uint16_t>(2 * n.group_index + 1));
        } else {
          compile(*n.kids[0]);
        }
        break;
      case Node::Alt: {
        // split chain; preferred branch first
        std::vector<std::int32_t> jumps;
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
          if (i + 1 < n.kids.size()) {
            std::int32_t sp = emit(Op::Split);
            prog_.code[sp].x = here();
            compile(*n.kids[i]);
            jumps.push_back(emit(Op::Jmp));
            prog_.code[sp].y = here();
          } else {
            compile(*n.kids[i]);
          }
        }
        for (std::int32_t j : jumps) prog_.code[j].x = here();
        break;
      }
      case Node::Repeat:
        compile_repeat(n);
        break;
    }
  }

  void compile_star(const Node& body, bool lazy) {
    std::int32_t sp = emit(Op::Split);
    std::int32_t body_start = here();
    compile(body);
    std::int32_t jm = emit(Op::Jmp);
    prog_.code[jm].x = sp;
    std::int32_t after = here();
    if (lazy) {
      prog_.code[sp].x = after;
      prog_.code[sp].y = body_start;
    } else {
      prog_.code[sp].x = body_start;
      prog_.code[sp].y = after;
    }
  }

  void compile_opt(const Node& body, bool lazy) {
    std::int32_t sp = emit(Op::Split);
    std::int32_t body_start = here();
    compile(body);
    std::int32_t after = here();
    if (lazy) {
      prog_.code[sp].x = after;
      prog_.code[sp].y = body_start;
    } else {
      prog_.code[sp].x = body_start;
      prog_.code[sp].y = after;
    }
  }

  // Counted repeats expand at compile time; kMaxRepeat bounds program growth.
  void compile_repeat(const Node& n) {
    const Node& body = *n.kids[0];
    for (int i = 0; i < n.min; ++i) compile(body);
    if (n.max < 0) {
      compile_star(body, n.lazy);
    } else {
      for (int i = n.min; i < n.max; ++i) compile_opt(body, n.lazy);
    }
  }
};

// --- Pike VM -------------------------------------------------------------------

using Slots = std::vector<std::int64_t>;

struct Thread {
  std::int32_t pc;
  Slots slots;
};

class ThreadList {
 public:
  explicit ThreadList(std::size_t prog_size) : seen_(prog_size, 0) {}

  void clear(std::uint32_t gen) {
    gen_ = gen;
    threads.clear();
  }

  bool mark(std::int32_t pc) {
    if (seen_[pc] == gen_) return false;
    seen_[pc] = gen_;
    return true;
  }

  std::vector<Thread> threads;

 private:
  std::vector<std::uint32_t> seen_;
  std::uint32_t gen_ = 0;
};

class Vm {
 public:
  Vm(const Program& prog, std::u32string_view text, std::uint64_t budget)
      : prog_(prog), text_(text), budget_(budget),
        clist_(prog.code.size()), nlist_(prog.code.size()) {}

  SearchResult run(std::size_t from) {
    SearchResult result;
    Slots match_slots;
    bool matched = false;

    std::uint32_t gen = 1;
    clist_.clear(gen++);
    std::size_t pos = from;
    // seed initial thread; while unmatched, keep seeding at every position
    // (unanchored leftmost search)
    add_thread(clist_, 0, initial_slots(), pos);
    for (;; ++pos) {
      if (steps_ > budget_) {
        result.budget_exceeded = true;
        result.steps_used = steps_;
        return result;
      }
      nlist_.clear(gen++);
      bool cut = false;
      for (std::size_t t = 0; t < clist_.threads.size() && !cut; ++t) {
        const Thread& th = clist_.threads[t];
        const Inst& in = prog_.code[th.pc];
        if (++steps_ > budget_) {
          result.budget_exceeded = true;
          result.steps_used = steps_;
          return result;
        }
        switch (in.op) {
          case Op::Char:
            if (pos < text_.size() && text_[pos] == in.ch) {
              add_thread(nlist_, th.pc + 1, th.slots, pos + 1);
            }
            break;
          case Op::Any:
            if (pos < text_.size() && text_[pos] != U'\n') {
              add_thread(nlist_, th.pc + 1, th.slots, pos + 1);
            }
            break;
          case Op::Class:
            if (pos < text_.size() && prog_.classes[in.idx].contains(text_[pos])) {
              add_thread(nlist_, th.pc + 1, th.slots, pos + 1);
            }
            break;
          case Op::Match:
            match_slots = th.slots;
            matched = true;
            cut = true;  // lower-priority threads can no longer win
            break;
          default:
            break;  // epsilon ops resolved in add_thread
        }
      }
      if (!matched && pos < text_.size()) {
        // seed a fresh attempt at the next position, lowest priority
        add_thread(nlist_, 0, initial_slots(), pos + 1);
      }
      std::swap(clist_, nlist_);
      if (pos >= text_.size()) break;
      if (matched && clist_.threads.empty()) break;
    }

    result.steps_used = steps_;
    if (matched) {
      Match m;
      m.slots = std::move(match_slots);
      result.match = std::move(m);
    }
    return result;
  }

 private:
  const Program& prog_;
  std::u32string_view text_;
  std::uint64_t budget_;
  std::uint64_t steps_ = 0;
  ThreadList clist_, nlist_;

  Slots initial_slots() const { return Slots(prog_.slot_count(), -1); }

  // Adds a thread, resolving epsilon transitions eagerly so lists only hold
  // consuming instructions (plus Match).
  void add_thread(ThreadList& list, std::int32_t pc, Slots slots, std::size_t pos) {
    ++steps_;
    if (!list.mark(pc)) return;
    const Inst& in = prog_.code[pc];
    switch (in.op) {
      case Op::Jmp:
        add_thread(list, in.x, std::move(slots), pos);
        break;
      case Op::Split:
        add_thread(list, in.x, slots, pos);
        add_thread(list, in.y, std::move(slots), pos);
        break;
      case Op::Save:
        slots[in.idx] = static_cast<std::int64_t>(pos);
        add_thread(list, pc + 1, std::move(slots), pos);
        break;
      case Op::AssertBegin:
        if (pos == 0) add_thread(list, pc + 1, std::move(slots), pos);
        break;
      case Op::AssertEnd:
        if (pos == text_.size()) add_thread(list, pc + 1, std::move(slots), pos);
        break;
      default:
        list.threads.push_back(Thread{pc, std::move(slots)});
        break;
    }
  }
};

}  // namespace

bool CharClass::contains(char32_t c) const {
  bool in = false;
  for (const auto& r : ranges) {
    if (c >= r.lo && c <= r.hi) {
      in = true;
      break;
    }
  }
  return negated ? !in : in;
}

Program compile(std::string_view pattern) {
  std::u32string upat;
  try {
    upat = utf8_decode(pattern);
  } catch (const Error&) {
    throw Error(Errc::InvalidPattern, "pattern is not valid UTF-8");
  }
  if (upat.size() > 1000) {
    throw Error(Errc::InvalidPattern, "pattern too long");
  }
  Parser parser(upat);
  int group_count = 0;
  NodePtr root = parser.parse(group_count);
  Compiler compiler;
  return compiler.run(*root, group_count);
}

SearchResult search(const Program& prog, std::u32string_view text,
                    std::size_t from, std::uint64_t budget) {
  if (from > text.size()) {
    SearchResult r;
    return r;
  }
  Vm vm(prog, text, budget);
  return vm.run(from);
}

FindAllResult find_all(const Program& prog, std::u32string_view text,
                       std::uint64_t budget) {
  FindAllResult out;
  std::uint64_t used = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (used >= budget) {
      out.budget_exceeded = true;
      break;
    }
    SearchResult r = search(prog, text, pos, budget - used);
    used += r.steps_used;
    if (r.budget_exceeded) {
      out.budget_exceeded = true;
      break;
    }
    if (!r.match) break;
    std::size_t end = static_cast<std::size_t>(r.match->end());
    std::size_t begin = static_cast<std::size_t>(r.match->begin());
    out.matches.push_back(std::move(*r.match));
    pos = end > begin ? end : begin + 1;  // never loop on empty matches
  }
  out.steps_used = used;
  return out;
}

}  // namespace chronicler::rx

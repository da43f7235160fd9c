#include "taskgen/program.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <map>

#include "common/vocab.hpp"

namespace s2g::task {

using boost::multiprecision::cpp_int;

namespace {

// --- interpreter ---

struct Lexer {
  std::string_view src;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("program line " + std::to_string(line) + ", column " + std::to_string(pos + 1) + ": " + what);
  }
  void skip_space() {
    while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t')) ++pos;
  }
  bool at_end() {
    skip_space();
    return pos >= src.size();
  }
  char peek() {
    skip_space();
    return pos < src.size() ? src[pos] : '\0';
  }
  bool accept(std::string_view tok) {
    skip_space();
    if (src.substr(pos, tok.size()) != tok) return false;
    if (std::isalpha(static_cast<unsigned char>(tok.back())) && pos + tok.size() < src.size() &&
        std::isalnum(static_cast<unsigned char>(src[pos + tok.size()]))) {
      return false;
    }
    pos += tok.size();
    return true;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }
  std::string ident() {
    skip_space();
    std::size_t start = pos;
    while (pos < src.size() && (std::isalpha(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) ++pos;
    if (start == pos) fail("expected identifier");
    return std::string(src.substr(start, pos - start));
  }
};

bool is_keyword(const std::string& s) {
  return s == "for" || s == "in" || s == "range" || s == "print" || s == "if" || s == "else";
}

struct Interpreter {
  std::map<std::string, cpp_int> vars;
  std::string output;

  cpp_int factor(Lexer& lx) {
    if (lx.accept("-")) return -factor(lx);
    const char c = lx.peek();
    if (c == '(') {
      lx.expect("(");
      cpp_int v = expr(lx);
      lx.expect(")");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = lx.pos;
      while (lx.pos < lx.src.size() && std::isdigit(static_cast<unsigned char>(lx.src[lx.pos]))) ++lx.pos;
      return cpp_int(std::string(lx.src.substr(start, lx.pos - start)));
    }
    const std::string name = lx.ident();
    if (is_keyword(name)) lx.fail("unexpected keyword '" + name + "'");
    auto it = vars.find(name);
    if (it == vars.end()) lx.fail("undefined variable '" + name + "'");
    return it->second;
  }
  cpp_int term(Lexer& lx) {
    cpp_int v = factor(lx);
    while (lx.accept("*")) v *= factor(lx);
    return v;
  }
  cpp_int arith(Lexer& lx) {
    cpp_int v = term(lx);
    for (;;) {
      if (lx.accept("+")) {
        v += term(lx);
      } else if (lx.peek() == '-' && lx.src.substr(lx.pos, 2) != "-=") {
        lx.expect("-");
        v -= term(lx);
      } else {
        return v;
      }
    }
  }
  bool comparison(Lexer& lx) {
    const cpp_int a = arith(lx);
    if (lx.accept("<=")) return a <= arith(lx);
    if (lx.accept(">=")) return a >= arith(lx);
    if (lx.accept("==")) return a == arith(lx);
    if (lx.accept("!=")) return a != arith(lx);
    if (lx.accept("<")) return a < arith(lx);
    if (lx.accept(">")) return a > arith(lx);
    lx.fail("expected a comparison");
  }
  cpp_int expr(Lexer& lx) {
    cpp_int v = arith(lx);
    if (lx.accept("if")) {
      const bool cond = comparison(lx);
      lx.expect("else");
      cpp_int other = expr(lx);
      return cond ? v : other;
    }
    return v;
  }

  // Runs an update statement `repeat` times (zero just parses it).
  void simple(Lexer& lx, int repeat) {
    const std::string name = lx.ident();
    if (is_keyword(name)) lx.fail("unexpected keyword '" + name + "'");
    enum { Assign, Add, Sub, Mul } kind;
    if (lx.accept("+=")) kind = Add;
    else if (lx.accept("-=")) kind = Sub;
    else if (lx.accept("*=")) kind = Mul;
    else if (lx.accept("=")) kind = Assign;
    else lx.fail("expected an assignment");
    const std::size_t rhs = lx.pos;
    for (int i = 0; i < repeat; ++i) {
      lx.pos = rhs;
      cpp_int v = expr(lx);
      if (kind == Assign) {
        vars[name] = v;
        continue;
      }
      auto it = vars.find(name);
      if (it == vars.end()) lx.fail("undefined variable '" + name + "'");
      if (kind == Add) it->second += v;
      else if (kind == Sub) it->second -= v;
      else it->second *= v;
    }
    if (repeat == 0) {
      // body of an empty loop still has to parse
      Interpreter dry = *this;
      dry.vars[name];
      dry.expr(lx);
    }
  }

  void statement(Lexer& lx) {
    if (lx.accept("print")) {
      lx.expect("(");
      const cpp_int v = expr(lx);
      lx.expect(")");
      output += v.str();
      output += '\n';
    } else if (lx.accept("for")) {
      const std::string var = lx.ident();
      lx.expect("in");
      lx.expect("range");
      lx.expect("(");
      const cpp_int n = expr(lx);
      lx.expect(")");
      lx.expect(":");
      if (n > 100000) lx.fail("loop bound too large");
      const int count = n < 0 ? 0 : static_cast<int>(n);
      const std::size_t body = lx.pos;
      if (count == 0) {
        simple(lx, 0);
      }
      for (int i = 0; i < count; ++i) {
        vars[var] = i;
        lx.pos = body;
        simple(lx, 1);
      }
    } else {
      simple(lx, 1);
    }
    if (!lx.at_end()) lx.fail("trailing characters");
  }
};

// --- generator ---

struct ProgramGen {
  ad::Rng& rng;
  int length;
  std::vector<std::string> vars;
  int widest = 0;

  std::string literal(int max_digits) {
    const int d = static_cast<int>(rng.uniform_int(1, max_digits));
    widest = std::max(widest, d);
    std::string s;
    for (int i = 0; i < d; ++i) s.push_back(static_cast<char>('0' + rng.uniform_int(i == 0 && d > 1 ? 1 : 0, 9)));
    return s;
  }
  std::string atom() {
    if (!vars.empty() && rng.bernoulli(0.3)) return vars[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vars.size()) - 1))];
    return literal(length);
  }
  std::string expr(int depth) {
    if (depth <= 0) return atom();
    switch (rng.uniform_int(0, 4)) {
      case 0: return atom();
      case 1: return "(" + expr(depth - 1) + "+" + expr(depth - 1) + ")";
      case 2: return "(" + expr(depth - 1) + "-" + expr(depth - 1) + ")";
      case 3: return "(" + expr(depth - 1) + "*" + expr(depth - 1) + ")";
      default: {
        const char* cmp = rng.bernoulli(0.5) ? "<" : ">";
        const std::string a = expr(depth - 1);
        const std::string c1 = atom();
        const std::string c2 = atom();
        return "(" + a + " if " + c1 + cmp + c2 + " else " + expr(depth - 1) + ")";
      }
    }
  }
  std::string fresh_var() {
    static constexpr std::string_view kNames = "abcdefghij";
    for (;;) {
      std::string v(1, kNames[static_cast<std::size_t>(rng.uniform_int(0, kNames.size() - 1))]);
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) return v;
    }
  }
  std::string loop_update() {
    const std::string v = vars[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vars.size()) - 1))];
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    return "for x in range(" + std::to_string(n) + "):" + v + (rng.bernoulli(0.5) ? "+=" : "-=") + literal(length);
  }
};

}  // namespace

std::string gen_program_text(const std::vector<int>& params, ad::Rng& rng) {
  if (params.size() != 2 || params[0] < 0 || params[1] < 1) throw ConfigError("program: params are {nesting >= 0, length >= 1}");
  const int nesting = params[0];
  const int length = params[1];
  for (;;) {
    ProgramGen g{rng, length, {}, 0};
    std::vector<std::string> lines;
    const int statements = static_cast<int>(rng.uniform_int(0, nesting));
    for (int s = 0; s < statements; ++s) {
      if (!g.vars.empty() && rng.bernoulli(0.5)) {
        lines.push_back(g.loop_update());
      } else {
        const std::string rhs = g.expr(static_cast<int>(rng.uniform_int(0, nesting)));
        const std::string v = g.fresh_var();
        lines.push_back(v + "=" + rhs);
        g.vars.push_back(v);
      }
    }
    lines.push_back("print(" + g.expr(static_cast<int>(rng.uniform_int(0, nesting))) + ")");
    if (g.widest != length) continue;
    std::string text;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) text += '\n';
      text += lines[i];
    }
    return text;
  }
}

Example program_from(const std::string& snippet, const std::vector<int>& difficulty) {
  std::string out = eval_program(snippet);
  if (!out.empty() && out.back() == '\n') out.pop_back();
  Example ex;
  ex.input = char_tokens(snippet);
  ex.input.push_back("$");
  ex.target = char_tokens(out);
  ex.target.push_back("$");
  ex.difficulty = difficulty;
  return ex;
}

Example gen_program(const std::vector<int>& params, ad::Rng& rng) { return program_from(gen_program_text(params, rng), params); }

std::string eval_program(const std::string& snippet) {
  Interpreter interp;
  std::size_t start = 0;
  int line = 1;
  while (start <= snippet.size()) {
    auto end = snippet.find('\n', start);
    if (end == std::string::npos) end = snippet.size();
    std::string_view text(snippet.data() + start, end - start);
    Lexer lx{text, 0, line};
    if (!lx.at_end()) interp.statement(lx);
    start = end + 1;
    ++line;
  }
  if (interp.output.empty()) throw ParseError("program: no print statement");
  return interp.output;
}

std::string eval_program(const std::vector<std::string>& tokens) {
  std::string text;
  for (const auto& t : tokens) {
    if (t == "$") break;
    text += t;
  }
  return eval_program(text);
}

std::vector<std::string> instruction_types(const std::string& snippet) {
  std::vector<std::string> out;
  if (snippet.find(" if ") != std::string::npos) out.push_back("if-else");
  if (snippet.find("for ") != std::string::npos) out.push_back("for");
  if (snippet.find('*') != std::string::npos) out.push_back("*");
  return out;
}

}  // namespace s2g::task

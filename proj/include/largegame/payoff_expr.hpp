#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "largegame/error.hpp"

namespace largegame {

// Payoff expression syntax tree.
//
//   expr   := term (('+' | '-') term)*
//   term   := power (('*' | '/') power)*
//   power  := unary ('^' power)?
//   unary  := '-' unary | primary
//   primary:= number | '(' expr ')' | call
//   call   := coord(int) | isact(label) | mu(label) | avg(expr)
//           | min(expr, expr) | max(expr, expr) | pow(expr, expr)
//           | exp(expr) | log(expr) | abs(expr)
//   label  := identifier | number | "quoted"
//
// Unary minus binds tighter than '^', so -x^2 is (-x)^2. `avg` blocks nest
// at most two deep.
enum class Op {
  kConst,
  kCoord,
  kIsAct,
  kMu,
  kAvg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kMin,
  kMax,
  kExp,
  kLog,
  kAbs,
  kPow,
};

inline constexpr int kMaxAvgDepth = 2;

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::kConst;
  double value = 0.0;      // kConst
  std::size_t index = 0;   // kCoord
  std::string label;       // kIsAct, kMu
  std::vector<ExprPtr> args;
  // source location (1-based); not part of structural identity
  int line = 0;
  int column = 0;
};

namespace expr {

inline ExprPtr make(Op op, std::vector<ExprPtr> args = {}, int line = 0, int column = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  n->line = line;
  n->column = column;
  return n;
}
// Constants are finite and nonnegative, as the grammar produces them;
// negative values are written as neg(constant(...)).
inline ExprPtr constant(double v) {
  if (!std::isfinite(v) || std::signbit(v)) throw DomainError("constant must be finite and nonnegative");
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}
inline ExprPtr coord(std::size_t k) {
  auto n = std::make_shared<Node>();
  n->op = Op::kCoord;
  n->index = k;
  return n;
}
inline ExprPtr isact(std::string label) {
  auto n = std::make_shared<Node>();
  n->op = Op::kIsAct;
  n->label = std::move(label);
  return n;
}
inline ExprPtr mu(std::string label) {
  auto n = std::make_shared<Node>();
  n->op = Op::kMu;
  n->label = std::move(label);
  return n;
}
inline ExprPtr avg(ExprPtr e) { return make(Op::kAvg, {std::move(e)}); }
inline ExprPtr neg(ExprPtr e) { return make(Op::kNeg, {std::move(e)}); }
inline ExprPtr binary(Op op, ExprPtr a, ExprPtr b) { return make(op, {std::move(a), std::move(b)}); }
inline ExprPtr unary(Op op, ExprPtr a) { return make(op, {std::move(a)}); }

}  // namespace expr

inline int arity(Op op) {
  switch (op) {
    case Op::kConst:
    case Op::kCoord:
    case Op::kIsAct:
    case Op::kMu:
      return 0;
    case Op::kAvg:
    case Op::kNeg:
    case Op::kExp:
    case Op::kLog:
    case Op::kAbs:
      return 1;
    default:
      return 2;
  }
}

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  switch (a.op) {
    case Op::kConst:
      if (a.value != b.value) return false;
      break;
    case Op::kCoord:
      if (a.index != b.index) return false;
      break;
    case Op::kIsAct:
    case Op::kMu:
      if (a.label != b.label) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  return structurally_equal(*a, *b);
}

inline int avg_depth(const Node& n) {
  int d = 0;
  for (const auto& c : n.args) d = std::max(d, avg_depth(*c));
  return d + (n.op == Op::kAvg ? 1 : 0);
}

namespace detail {

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline std::string format_label(const std::string& label) {
  bool bare = !label.empty() && is_ident_start(label.front());
  for (char c : label) bare = bare && is_ident_char(c);
  if (bare) return label;
  std::string out = "\"";
  for (char c : label) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    default: return "";
  }
}

}  // namespace detail

// Canonical fully parenthesized text. parse(format(e)) is structurally e.
inline std::string format(const Node& n) {
  auto f = [](const ExprPtr& e) { return format(*e); };
  switch (n.op) {
    case Op::kConst: return detail::format_number(n.value);
    case Op::kCoord: return "coord(" + std::to_string(n.index) + ")";
    case Op::kIsAct: return "isact(" + detail::format_label(n.label) + ")";
    case Op::kMu: return "mu(" + detail::format_label(n.label) + ")";
    case Op::kAvg: return "avg(" + f(n.args[0]) + ")";
    case Op::kNeg: return "(-(" + f(n.args[0]) + "))";
    case Op::kAdd: return "(" + f(n.args[0]) + "+" + f(n.args[1]) + ")";
    case Op::kSub: return "(" + f(n.args[0]) + "-" + f(n.args[1]) + ")";
    case Op::kMul: return "(" + f(n.args[0]) + "*" + f(n.args[1]) + ")";
    case Op::kDiv: return "(" + f(n.args[0]) + "/" + f(n.args[1]) + ")";
    case Op::kPow: return "(" + f(n.args[0]) + "^" + f(n.args[1]) + ")";
    case Op::kMin:
    case Op::kMax:
      return std::string(detail::function_name(n.op)) + "(" + f(n.args[0]) + "," + f(n.args[1]) + ")";
    case Op::kExp:
    case Op::kLog:
    case Op::kAbs:
      return std::string(detail::function_name(n.op)) + "(" + f(n.args[0]) + ")";
  }
  return "";
}

inline std::string format(const ExprPtr& e) { return format(*e); }

namespace detail {

enum class Tok { kNumber, kIdent, kString, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(t);
    if (is_ident_start(c)) {
      t.kind = Tok::kIdent;
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) t.text.push_back(advance());
      return t;
    }
    if (c == '"') {
      t.kind = Tok::kString;
      advance();
      for (;;) {
        if (pos_ >= src_.size()) throw ParseError("unterminated string", t.line, t.column);
        char ch = advance();
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= src_.size()) throw ParseError("unterminated string", t.line, t.column);
          ch = advance();
        }
        t.text.push_back(ch);
      }
      return t;
    }
    if (std::string_view("+-*/^(),").find(c) != std::string_view::npos) {
      t.kind = Tok::kPunct;
      t.text = std::string(1, advance());
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
  }

 private:
  Token number(Token t) {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int save_col = column_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        column_ = save_col;
      }
    }
    t.kind = Tok::kNumber;
    t.text = std::string(src_.substr(start, pos_ - start));
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() ||
        !std::isfinite(t.number))
      throw ParseError("invalid number '" + t.text + "'", t.line, t.column);
    return t;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

  ExprPtr parse_all() {
    ExprPtr e = expr();
    if (tok_.kind != Tok::kEnd) fail("unexpected '" + tok_.text + "' after expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, tok_.line, tok_.column);
  }

  bool is_punct(char c) const { return tok_.kind == Tok::kPunct && tok_.text[0] == c; }

  void expect(char c) {
    if (!is_punct(c)) {
      fail(std::string("expected '") + c + "' but found " +
           (tok_.kind == Tok::kEnd ? std::string("end of input") : "'" + tok_.text + "'"));
    }
    tok_ = lex_.next();
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (is_punct('+') || is_punct('-')) {
      const Token op = tok_;
      tok_ = lex_.next();
      lhs = expr::make(op.text[0] == '+' ? Op::kAdd : Op::kSub, {lhs, term()}, op.line, op.column);
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = power();
    while (is_punct('*') || is_punct('/')) {
      const Token op = tok_;
      tok_ = lex_.next();
      lhs = expr::make(op.text[0] == '*' ? Op::kMul : Op::kDiv, {lhs, power()}, op.line, op.column);
    }
    return lhs;
  }

  ExprPtr power() {
    ExprPtr base = unary();
    if (is_punct('^')) {
      const Token op = tok_;
      tok_ = lex_.next();
      return expr::make(Op::kPow, {base, power()}, op.line, op.column);
    }
    return base;
  }

  ExprPtr unary() {
    if (is_punct('-')) {
      const Token op = tok_;
      tok_ = lex_.next();
      return expr::make(Op::kNeg, {unary()}, op.line, op.column);
    }
    return primary();
  }

  ExprPtr primary() {
    const Token t = tok_;
    if (t.kind == Tok::kNumber) {
      tok_ = lex_.next();
      auto n = std::make_shared<Node>();
      n->value = t.number;
      n->line = t.line;
      n->column = t.column;
      return n;
    }
    if (is_punct('(')) {
      tok_ = lex_.next();
      ExprPtr e = expr();
      expect(')');
      return e;
    }
    if (t.kind == Tok::kIdent) return call();
    if (t.kind == Tok::kEnd) fail("unexpected end of input");
    fail("unexpected '" + t.text + "'");
  }

  std::string label() {
    if (tok_.kind != Tok::kIdent && tok_.kind != Tok::kNumber && tok_.kind != Tok::kString)
      fail("expected a point label");
    std::string l = tok_.text;
    tok_ = lex_.next();
    return l;
  }

  ExprPtr call() {
    const Token name = tok_;
    tok_ = lex_.next();
    static const std::pair<const char*, Op> kFunctions[] = {
        {"coord", Op::kCoord}, {"isact", Op::kIsAct}, {"mu", Op::kMu},   {"avg", Op::kAvg},
        {"min", Op::kMin},     {"max", Op::kMax},     {"pow", Op::kPow}, {"exp", Op::kExp},
        {"log", Op::kLog},     {"abs", Op::kAbs},
    };
    Op op{};
    bool known = false;
    for (const auto& [fname, fop] : kFunctions) {
      if (name.text == fname) {
        op = fop;
        known = true;
      }
    }
    if (!known) throw ParseError("unknown function '" + name.text + "'", name.line, name.column);
    if (!is_punct('('))
      fail("expected '(' after '" + name.text + "'");
    tok_ = lex_.next();

    auto n = std::make_shared<Node>();
    n->op = op;
    n->line = name.line;
    n->column = name.column;
    switch (op) {
      case Op::kCoord: {
        if (tok_.kind != Tok::kNumber || tok_.text.find_first_not_of("0123456789") != std::string::npos)
          fail("coord expects a nonnegative integer index");
        n->index = std::stoul(tok_.text);
        tok_ = lex_.next();
        break;
      }
      case Op::kIsAct:
      case Op::kMu:
        n->label = label();
        break;
      case Op::kAvg: {
        if (++avg_depth_ > kMaxAvgDepth)
          throw ParseError("avg nested deeper than " + std::to_string(kMaxAvgDepth), name.line,
                           name.column);
        n->args.push_back(expr());
        --avg_depth_;
        break;
      }
      default: {
        n->args.push_back(expr());
        if (arity(op) == 2) {
          expect(',');
          n->args.push_back(expr());
        }
        break;
      }
    }
    expect(')');
    return n;
  }

  Lexer lex_;
  Token tok_;
  int avg_depth_ = 0;
};

}  // namespace detail

inline ExprPtr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

}  // namespace largegame

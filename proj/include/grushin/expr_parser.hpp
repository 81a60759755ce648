#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/linalg.hpp"
#include "grushin/poly.hpp"

namespace grushin::expr {

enum class Mode { ExactPoly, NumericSymbol };

enum class Op { Const, Imag, Var, AbsEta, Add, Sub, Mul, Div, Neg, Pow, Re, Im, Conj };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  Rational value;   // Const
  char var = 0;     // Var: 'x', 'y' or 'e'
  int index = 0;    // Var: 1-based; 0 for bare x
  Rational exponent;  // Pow
  NodePtr lhs;
  NodePtr rhs;
  std::size_t offset = 0;
};

// Parsed expression; immutable and shareable.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, Mode mode, int dim, std::string text)
      : root_(std::move(root)), mode_(mode), dim_(dim), text_(std::move(text)) {}

  const NodePtr& root() const { return root_; }
  Mode mode() const { return mode_; }
  int dim() const { return dim_; }
  const std::string& text() const { return text_; }
  const std::optional<Poly>& poly() const { return poly_; }
  void set_poly(Poly p) { poly_ = std::move(p); }
  bool uses_eta() const { return uses(root_, 'e') || uses_abs(root_); }

 private:
  static bool uses(const NodePtr& n, char v) {
    if (!n) return false;
    if (n->op == Op::Var && n->var == v) return true;
    return uses(n->lhs, v) || uses(n->rhs, v);
  }
  static bool uses_abs(const NodePtr& n) {
    if (!n) return false;
    return n->op == Op::AbsEta || uses_abs(n->lhs) || uses_abs(n->rhs);
  }

  NodePtr root_;
  Mode mode_ = Mode::NumericSymbol;
  int dim_ = 1;
  std::string text_;
  std::optional<Poly> poly_;
};

namespace detail {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t offset = 0;
};

inline std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t k = 0;
  while (k < s.size()) {
    const unsigned char ch = static_cast<unsigned char>(s[k]);
    if (std::isspace(ch)) {
      ++k;
      continue;
    }
    const std::size_t start = k;
    if (std::isdigit(ch) || (ch == '.' && k + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[k + 1])))) {
      bool dot = false;
      while (k < s.size() && (std::isdigit(static_cast<unsigned char>(s[k])) || (s[k] == '.' && !dot))) {
        if (s[k] == '.') dot = true;
        ++k;
      }
      out.push_back({Tok::Number, std::string(s.substr(start, k - start)), start});
      continue;
    }
    if (std::isalpha(ch) || ch == '_') {
      while (k < s.size() && (std::isalnum(static_cast<unsigned char>(s[k])) || s[k] == '_')) ++k;
      out.push_back({Tok::Ident, std::string(s.substr(start, k - start)), start});
      continue;
    }
    Tok kind;
    switch (ch) {
      case '+':
        kind = Tok::Plus;
        break;
      case '-':
        kind = Tok::Minus;
        break;
      case '*':
        kind = Tok::Star;
        break;
      case '/':
        kind = Tok::Slash;
        break;
      case '^':
        kind = Tok::Caret;
        break;
      case '(':
        kind = Tok::LParen;
        break;
      case ')':
        kind = Tok::RParen;
        break;
      default:
        throw ParseError("unexpected character", start, {"number", "identifier", "operator", "'('"},
                         std::string(1, static_cast<char>(ch)));
    }
    out.push_back({kind, std::string(1, static_cast<char>(ch)), start});
    ++k;
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

inline Rational parse_decimal(const std::string& text) {
  const auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(BigInt(text));
  const std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
  BigInt num(whole.empty() ? std::string("0") : whole);
  BigInt den = 1;
  for (char c : frac) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  return Rational(num, den);
}

inline NodePtr make(Op op, std::size_t offset, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->offset = offset;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

// Exact value of a subtree built only from literals, if any.
inline std::optional<Rational> constant_value(const NodePtr& n) {
  switch (n->op) {
    case Op::Const:
      return n->value;
    case Op::Neg: {
      auto v = constant_value(n->lhs);
      if (v) return Rational(-*v);
      return std::nullopt;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul: {
      auto a = constant_value(n->lhs), b = constant_value(n->rhs);
      if (!a || !b) return std::nullopt;
      if (n->op == Op::Add) return Rational(*a + *b);
      if (n->op == Op::Sub) return Rational(*a - *b);
      return Rational(*a * *b);
    }
    default:
      return std::nullopt;
  }
}

class Parser {
 public:
  Parser(std::string_view text, Mode mode, int dim) : text_(text), toks_(lex(text)), mode_(mode), dim_(dim) {}

  NodePtr parse() {
    NodePtr e = expr();
    if (peek().kind != Tok::End) fail("unexpected token after expression", {"'+'", "'-'", "'*'", "'/'", "end of input"});
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    const Token& t = peek();
    throw ParseError(msg, t.offset, std::move(expected), t.kind == Tok::End ? "<end>" : t.text);
  }

  [[noreturn]] void violate(const std::string& msg, const Token& t) const {
    throw ModeViolationError(msg, t.offset, {}, t.text);
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what, {what});
    ++pos_;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Token& t = next();
      lhs = make(t.kind == Tok::Plus ? Op::Add : Op::Sub, t.offset, lhs, term());
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = factor();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Token& t = next();
      NodePtr rhs = factor();
      if (t.kind == Tok::Slash) {
        auto v = constant_value(rhs);
        if (v && *v == 0) throw ParseError("division by zero", t.offset, {"nonzero divisor"}, "/");
      }
      lhs = make(t.kind == Tok::Star ? Op::Mul : Op::Div, t.offset, lhs, rhs);
    }
    return lhs;
  }

  // Unary signs bind looser than '^': -x^2 is -(x^2).
  NodePtr factor() {
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) {
      const Token& t = next();
      NodePtr inner = factor();
      return t.kind == Tok::Minus ? make(Op::Neg, t.offset, inner) : inner;
    }
    NodePtr b = base();
    if (peek().kind == Tok::Caret) {
      const Token& caret = next();
      const Token& at = peek();
      Rational p = exponent();
      if (denominator(p) != 1) {
        if (mode_ == Mode::ExactPoly) violate("non-integer power in exact polynomial", at);
        if (b->op != Op::AbsEta)
          throw ParseError("rational exponents are only allowed on abs_eta", at.offset, {"integer"}, at.text);
      }
      if (mode_ == Mode::ExactPoly && p < 0) violate("negative power in exact polynomial", at);
      auto n = std::make_shared<Node>();
      n->op = Op::Pow;
      n->offset = caret.offset;
      n->lhs = b;
      n->exponent = p;
      return n;
    }
    return b;
  }

  Rational exponent() {
    if (peek().kind == Tok::Number) return integer();
    if (peek().kind != Tok::LParen) fail("expected exponent", {"integer", "'('"});
    ++pos_;
    bool neg = false;
    if (peek().kind == Tok::Minus) {
      neg = true;
      ++pos_;
    }
    Rational p = integer();
    if (peek().kind == Tok::Slash) {
      ++pos_;
      const Token& dt = peek();
      Rational d = integer();
      if (d == 0) throw ParseError("zero denominator in exponent", dt.offset, {"nonzero integer"}, dt.text);
      p /= d;
    }
    expect(Tok::RParen, "')'");
    return neg ? Rational(-p) : p;
  }

  Rational integer() {
    const Token& t = peek();
    if (t.kind != Tok::Number || t.text.find('.') != std::string::npos) fail("expected integer", {"integer"});
    ++pos_;
    return Rational(BigInt(t.text));
  }

  NodePtr base() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        ++pos_;
        auto n = std::make_shared<Node>();
        n->op = Op::Const;
        n->value = parse_decimal(t.text);
        n->offset = t.offset;
        return n;
      }
      case Tok::LParen: {
        ++pos_;
        NodePtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident:
        return ident();
      default:
        fail("expected operand", {"number", "'i'", "identifier", "function call", "'('"});
    }
  }

  NodePtr ident() {
    const Token& t = next();
    const std::string& s = t.text;
    if (s == "i") {
      if (mode_ == Mode::ExactPoly) violate("imaginary unit in exact polynomial", t);
      return make(Op::Imag, t.offset);
    }
    if (s == "re" || s == "im" || s == "conj" || s == "abs_eta") {
      if (mode_ == Mode::ExactPoly) violate("function '" + s + "' in exact polynomial", t);
      if (s == "abs_eta") {
        if (peek().kind == Tok::LParen) {
          ++pos_;
          if (peek().kind != Tok::RParen) fail("abs_eta takes no argument", {"')'"});
          ++pos_;
        }
        return make(Op::AbsEta, t.offset);
      }
      expect(Tok::LParen, "'('");
      if (peek().kind == Tok::RParen) fail(s + " needs an argument", {"expression"});
      NodePtr arg = expr();
      expect(Tok::RParen, "')'");
      return make(s == "re" ? Op::Re : (s == "im" ? Op::Im : Op::Conj), t.offset, arg);
    }
    const char head = s[0];
    const std::string digits = s.substr(1);
    const bool numeric_tail = std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if ((head == 'x' || head == 'y' || head == 'e') && numeric_tail && (head == 'x' || !digits.empty())) {
      auto n = std::make_shared<Node>();
      n->op = Op::Var;
      n->var = head;
      n->offset = t.offset;
      n->index = digits.empty() ? 0 : std::stoi(digits);
      if (mode_ == Mode::NumericSymbol) {
        if (head == 'x') violate("variable 'x' is reserved for exact polynomials; use y1..yN and e1..eN", t);
        if (n->index < 1 || n->index > dim_)
          throw ParseError("variable index out of range for dimension " + std::to_string(dim_), t.offset,
                           {"y1..y" + std::to_string(dim_), "e1..e" + std::to_string(dim_)}, s);
      }
      return n;
    }
    throw ParseError("unknown identifier", t.offset, {"i", "re", "im", "conj", "abs_eta", "x", "yN", "eN"}, s);
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Mode mode_;
  int dim_;
};

inline Poly lower(const NodePtr& n, std::optional<std::pair<char, int>>& var) {
  auto err = [&](const std::string& msg) -> ModeViolationError {
    return ModeViolationError(msg, n->offset, {}, "");
  };
  switch (n->op) {
    case Op::Const:
      return Poly::constant(n->value);
    case Op::Var: {
      const std::pair<char, int> key{n->var, n->index};
      if (var && *var != key) throw err("exact polynomial must use a single variable");
      var = key;
      return Poly::x();
    }
    case Op::Add:
      return lower(n->lhs, var) + lower(n->rhs, var);
    case Op::Sub:
      return lower(n->lhs, var) - lower(n->rhs, var);
    case Op::Mul:
      return lower(n->lhs, var) * lower(n->rhs, var);
    case Op::Neg:
      return -lower(n->lhs, var);
    case Op::Div: {
      const Poly den = lower(n->rhs, var);
      if (den.degree() != 0) throw err("division by a non-constant in exact polynomial");
      return Poly::constant(1 / den.leading()) * lower(n->lhs, var);
    }
    case Op::Pow:
      return lower(n->lhs, var).pow(static_cast<int>(numerator(n->exponent)));
    default:
      throw err("operation not allowed in exact polynomial");
  }
}

}  // namespace detail

inline Expr parse(const std::string& text, Mode mode, int dim = 1) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ParseError("empty expression", 0, {"expression"}, "<end>");
  if (dim < 1) throw ConfigurationError("expression dimension must be positive");
  detail::Parser p(text, mode, dim);
  Expr e(p.parse(), mode, dim, text);
  if (mode == Mode::ExactPoly) {
    std::optional<std::pair<char, int>> var;
    e.set_poly(detail::lower(e.root(), var));
  }
  return e;
}

inline Poly parse_poly(const std::string& text) { return *parse(text, Mode::ExactPoly, 1).poly(); }

namespace detail {

inline cplx ipow(cplx base, long long n) {
  if (n < 0) return cplx(1.0) / ipow(base, -n);
  cplx r(1.0);
  for (long long k = 0; k < n; ++k) r *= base;
  return r;
}

inline cplx eval(const Node& n, const RVector& y, const RVector& eta) {
  switch (n.op) {
    case Op::Const:
      return static_cast<double>(n.value);
    case Op::Imag:
      return cplx(0.0, 1.0);
    case Op::Var: {
      const RVector& v = n.var == 'e' ? eta : y;
      const std::size_t k = n.index == 0 ? 0 : static_cast<std::size_t>(n.index - 1);
      if (k >= v.size()) throw DomainError("evaluation point has too few components");
      return v[k];
    }
    case Op::AbsEta: {
      double s = 0.0;
      for (double v : eta) s += v * v;
      if (s == 0.0) throw DomainError("abs_eta evaluated at eta = 0");
      return std::sqrt(s);
    }
    case Op::Add:
      return eval(*n.lhs, y, eta) + eval(*n.rhs, y, eta);
    case Op::Sub:
      return eval(*n.lhs, y, eta) - eval(*n.rhs, y, eta);
    case Op::Mul:
      return eval(*n.lhs, y, eta) * eval(*n.rhs, y, eta);
    case Op::Div:
      return eval(*n.lhs, y, eta) / eval(*n.rhs, y, eta);
    case Op::Neg:
      return -eval(*n.lhs, y, eta);
    case Op::Pow: {
      const cplx b = eval(*n.lhs, y, eta);
      if (denominator(n.exponent) == 1) return ipow(b, static_cast<long long>(numerator(n.exponent)));
      return std::pow(b.real(), static_cast<double>(n.exponent));
    }
    case Op::Re:
      return eval(*n.lhs, y, eta).real();
    case Op::Im:
      return eval(*n.lhs, y, eta).imag();
    case Op::Conj:
      return std::conj(eval(*n.lhs, y, eta));
  }
  return 0.0;
}

inline std::string decimal(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  // Literals only carry denominators 2^a 5^b, so the expansion terminates.
  BigInt num = numerator(q), den = denominator(q);
  const bool neg = num < 0;
  if (neg) num = -num;
  std::string out = (neg ? "-" : "") + BigInt(num / den).str() + ".";
  num %= den;
  for (int guard = 0; num != 0 && guard < 4096; ++guard) {
    num *= 10;
    out += static_cast<char>('0' + static_cast<int>(num / den));
    num %= den;
  }
  return out;
}

inline std::string print(const NodePtr& n) {
  switch (n->op) {
    case Op::Const:
      return decimal(n->value);
    case Op::Imag:
      return "i";
    case Op::Var:
      return std::string(1, n->var) + (n->index ? std::to_string(n->index) : "");
    case Op::AbsEta:
      return "abs_eta";
    case Op::Add:
      return "(" + print(n->lhs) + " + " + print(n->rhs) + ")";
    case Op::Sub:
      return "(" + print(n->lhs) + " - " + print(n->rhs) + ")";
    case Op::Mul:
      return "(" + print(n->lhs) + "*" + print(n->rhs) + ")";
    case Op::Div:
      return "(" + print(n->lhs) + "/" + print(n->rhs) + ")";
    case Op::Neg:
      return "(-" + print(n->lhs) + ")";
    case Op::Pow: {
      std::string e;
      if (denominator(n->exponent) == 1 && n->exponent >= 0) {
        e = numerator(n->exponent).str();
      } else {
        e = "(" + numerator(n->exponent).str() +
            (denominator(n->exponent) == 1 ? "" : "/" + denominator(n->exponent).str()) + ")";
      }
      const std::string b = print(n->lhs);
      return (n->lhs->op == Op::Pow ? "(" + b + ")" : b) + "^" + e;
    }
    case Op::Re:
      return "re(" + print(n->lhs) + ")";
    case Op::Im:
      return "im(" + print(n->lhs) + ")";
    case Op::Conj:
      return "conj(" + print(n->lhs) + ")";
  }
  return "";
}

inline bool same(const NodePtr& a, const NodePtr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Op::Const:
      return a->value == b->value;
    case Op::Var:
      return a->var == b->var && a->index == b->index;
    case Op::Pow:
      return a->exponent == b->exponent && same(a->lhs, b->lhs);
    default:
      return same(a->lhs, b->lhs) && same(a->rhs, b->rhs);
  }
}

}  // namespace detail

inline cplx evaluate(const Expr& e, const RVector& y, const RVector& eta) {
  if (!e.root()) throw ConfigurationError("empty expression");
  return detail::eval(*e.root(), y, eta);
}

// Exact-mode polynomials evaluate at a single real point.
inline cplx evaluate(const Expr& e, double x) { return evaluate(e, RVector{x}, RVector{x}); }

// Canonical, fully parenthesized text.
inline std::string print(const Expr& e) { return e.root() ? detail::print(e.root()) : std::string(); }

inline bool structurally_equal(const Expr& a, const Expr& b) { return detail::same(a.root(), b.root()); }

}  // namespace grushin::expr

#pragma once

// Scalar arithmetic expressions: parsing, evaluation, symbolic differentiation
// and printing. Grammar:
//
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' integer)?
//   atom  := number | ident | ident '(' args ')' | '(' expr ')'
//
// Identifiers are the state variables x1..xn, the time t, or a named parameter.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace filcon {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (expression offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised by diff() on abs / sgn / min / max nodes that depend on the variable.
class NotDifferentiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered name -> value table. Expressions store parameter indices, so a copy
/// with different values can be evaluated against the same ASTs.
struct ParamTable {
  std::vector<std::string> names;
  std::vector<double> values;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }
  double at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
    return values[*i];
  }
  void set(std::string_view name, double value) {
    if (auto i = index_of(name)) {
      values[*i] = value;
    } else {
      names.emplace_back(name);
      values.push_back(value);
    }
  }
};

enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Abs, Sgn, Sqrt, Min, Max };

namespace detail {
struct FuncInfo {
  Func f;
  std::string_view name;
  int arity;
};
inline constexpr std::array<FuncInfo, 9> kFuncs{{{Func::Sin, "sin", 1},
                                                 {Func::Cos, "cos", 1},
                                                 {Func::Exp, "exp", 1},
                                                 {Func::Log, "log", 1},
                                                 {Func::Abs, "abs", 1},
                                                 {Func::Sgn, "sgn", 1},
                                                 {Func::Sqrt, "sqrt", 1},
                                                 {Func::Min, "min", 2},
                                                 {Func::Max, "max", 2}}};
inline const FuncInfo* find_func(std::string_view name) {
  for (const auto& fi : kFuncs)
    if (fi.name == name) return &fi;
  return nullptr;
}
inline std::string_view func_name(Func f) {
  for (const auto& fi : kFuncs)
    if (fi.f == f) return fi.name;
  return "?";
}
}  // namespace detail

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind : std::uint8_t { Number, State, Time, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

  Kind kind;
  double value = 0.0;      // Number
  std::size_t index = 0;   // State (0-based) / Param
  int exponent = 0;        // Pow
  Func func = Func::Sin;   // Call
  std::string name;        // Param name, kept for printing
  std::vector<Expr> args;  // operands
  std::size_t offset = 0;  // source byte offset
};

// --- construction helpers -------------------------------------------------

inline Expr make_number(double v, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->value = v;
  n->offset = offset;
  return n;
}
inline Expr make_state(std::size_t i, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::State;
  n->index = i;
  n->offset = offset;
  return n;
}
inline Expr make_time(std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Time;
  n->offset = offset;
  return n;
}
inline Expr make_param(std::size_t i, std::string name, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Param;
  n->index = i;
  n->name = std::move(name);
  n->offset = offset;
  return n;
}
inline Expr make_unary(Node::Kind k, Expr a, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = {std::move(a)};
  n->offset = offset;
  return n;
}
inline Expr make_binary(Node::Kind k, Expr a, Expr b, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = {std::move(a), std::move(b)};
  n->offset = offset;
  return n;
}
inline Expr make_pow(Expr base, int exponent, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Pow;
  n->exponent = exponent;
  n->args = {std::move(base)};
  n->offset = offset;
  return n;
}
inline Expr make_call(Func f, std::vector<Expr> args, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Call;
  n->func = f;
  n->args = std::move(args);
  n->offset = offset;
  return n;
}

// --- parsing --------------------------------------------------------------

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, std::size_t n, const ParamTable& params) : src_(src), n_(n), params_(params) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    Expr e = expr();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    if (pos_ >= src_.size()) throw ParseError(msg + " (unexpected end of input)", pos_);
    throw ParseError(msg, pos_);
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = make_binary(Node::Kind::Add, lhs, term(), at);
      } else if (accept('-')) {
        lhs = make_binary(Node::Kind::Sub, lhs, term(), at);
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = make_binary(Node::Kind::Mul, lhs, unary(), at);
      } else if (accept('/')) {
        lhs = make_binary(Node::Kind::Div, lhs, unary(), at);
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) return make_unary(Node::Kind::Neg, unary(), at);
    return power();
  }

  Expr power() {
    Expr base = atom();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
      if (start == pos_) fail("expected integer exponent after '^'");
      int k = 0;
      auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, k);
      if (ec != std::errc{} || p != src_.data() + pos_) throw ParseError("exponent out of range", start);
      return make_pow(base, k, at);
    }
    return base;
  }

  static bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  Expr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected operand");
    const std::size_t at = pos_;
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      const std::string_view id = src_.substr(at, pos_ - at);
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') return call(id, at);
      return identifier(id, at);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && ((src_[end] >= '0' && src_[end] <= '9') || src_[end] == '.')) ++end;
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && src_[e] >= '0' && src_[e] <= '9') {
        while (e < src_.size() && src_[e] >= '0' && src_[e] <= '9') ++e;
        end = e;
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(src_.data() + at, src_.data() + end, v);
    if (ec != std::errc{} || p != src_.data() + end) throw ParseError("malformed number", at);
    pos_ = end;
    if (pos_ < src_.size() && ident_start(src_[pos_]))
      throw ParseError("implicit multiplication is not allowed", pos_);
    return make_number(v, at);
  }

  Expr identifier(std::string_view id, std::size_t at) {
    if (id == "t") return make_time(at);
    if (id.size() > 1 && id[0] == 'x') {
      bool digits = true;
      for (std::size_t k = 1; k < id.size(); ++k) digits = digits && id[k] >= '0' && id[k] <= '9';
      if (digits) {
        std::size_t i = 0;
        std::from_chars(id.data() + 1, id.data() + id.size(), i);
        if (i >= 1 && i <= n_) return make_state(i - 1, at);
        throw ParseError("state variable '" + std::string(id) + "' outside x1..x" + std::to_string(n_), at);
      }
    }
    if (auto i = params_.index_of(id)) return make_param(*i, std::string(id), at);
    throw ParseError("unknown identifier '" + std::string(id) + "'", at);
  }

  Expr call(std::string_view id, std::size_t at) {
    const FuncInfo* fi = find_func(id);
    if (!fi) throw ParseError("unknown function '" + std::string(id) + "'", at);
    accept('(');
    std::vector<Expr> args;
    skip_ws();
    if (!accept(')')) {
      args.push_back(expr());
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("expected ')' or ','");
    }
    if (static_cast<int>(args.size()) != fi->arity)
      throw ParseError(std::string(fi->name) + " expects " + std::to_string(fi->arity) + " argument(s), got " +
                           std::to_string(args.size()),
                       at);
    return make_call(fi->f, std::move(args), at);
  }

  std::string_view src_;
  std::size_t n_;
  const ParamTable& params_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `src` over state dimension n. Throws ParseError with the byte offset.
inline Expr parse(std::string_view src, std::size_t n, const ParamTable& params = {}) {
  return detail::Parser(src, n, params).parse();
}

// --- evaluation -----------------------------------------------------------

/// sgn(0) is 0; set-valued handling of discontinuities belongs to the simulator.
inline double eval(const Expr& e, std::span<const double> x, double t, std::span<const double> params = {}) {
  const Node& n = *e;
  using K = Node::Kind;
  switch (n.kind) {
    case K::Number: return n.value;
    case K::State:
      if (n.index >= x.size()) throw EvalError("state index out of range", n.offset);
      return x[n.index];
    case K::Time: return t;
    case K::Param:
      if (n.index >= params.size()) throw EvalError("parameter '" + n.name + "' has no value", n.offset);
      return params[n.index];
    case K::Neg: return -eval(n.args[0], x, t, params);
    case K::Add: return eval(n.args[0], x, t, params) + eval(n.args[1], x, t, params);
    case K::Sub: return eval(n.args[0], x, t, params) - eval(n.args[1], x, t, params);
    case K::Mul: return eval(n.args[0], x, t, params) * eval(n.args[1], x, t, params);
    case K::Div: {
      const double den = eval(n.args[1], x, t, params);
      if (den == 0.0) throw EvalError("division by zero", n.offset);
      return eval(n.args[0], x, t, params) / den;
    }
    case K::Pow: {
      const double b = eval(n.args[0], x, t, params);
      double r = 1.0;
      for (int k = 0; k < n.exponent; ++k) r *= b;
      return r;
    }
    case K::Call: {
      const double a = eval(n.args[0], x, t, params);
      switch (n.func) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Log:
          if (!(a > 0.0)) throw EvalError("log of non-positive value", n.offset);
          return std::log(a);
        case Func::Abs: return std::abs(a);
        case Func::Sgn: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case Func::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of negative value", n.offset);
          return std::sqrt(a);
        case Func::Min: return std::min(a, eval(n.args[1], x, t, params));
        case Func::Max: return std::max(a, eval(n.args[1], x, t, params));
      }
    }
  }
  throw EvalError("corrupt expression node", n.offset);
}

// --- structure queries ----------------------------------------------------

inline bool depends_on_state(const Expr& e, std::size_t var) {
  if (e->kind == Node::Kind::State) return e->index == var;
  for (const auto& a : e->args)
    if (depends_on_state(a, var)) return true;
  return false;
}

inline bool depends_on_any_state(const Expr& e) {
  if (e->kind == Node::Kind::State) return true;
  for (const auto& a : e->args)
    if (depends_on_any_state(a)) return true;
  return false;
}

inline bool depends_on_time(const Expr& e) {
  if (e->kind == Node::Kind::Time) return true;
  for (const auto& a : e->args)
    if (depends_on_time(a)) return true;
  return false;
}

inline bool is_number(const Expr& e, double v) { return e->kind == Node::Kind::Number && e->value == v; }

/// Structural equality (source offsets ignored).
inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
  switch (a->kind) {
    case Node::Kind::Number:
      if (a->value != b->value) return false;
      break;
    case Node::Kind::State:
    case Node::Kind::Param:
      if (a->index != b->index) return false;
      break;
    case Node::Kind::Pow:
      if (a->exponent != b->exponent) return false;
      break;
    case Node::Kind::Call:
      if (a->func != b->func) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  return true;
}

// --- simplifying constructors used by diff ---------------------------------

namespace detail {

inline bool is_const(const Expr& e) { return e->kind == Node::Kind::Number; }

inline Expr folded(double v, const Expr& fallback) { return std::isfinite(v) ? make_number(v) : fallback; }

inline Expr s_neg(const Expr& a) {
  if (is_const(a)) return make_number(-a->value);
  if (a->kind == Node::Kind::Neg) return a->args[0];
  return make_unary(Node::Kind::Neg, a);
}

inline Expr s_add(const Expr& a, const Expr& b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return make_number(a->value + b->value);
  if (is_const(b) && b->value < 0.0) return make_binary(Node::Kind::Sub, a, make_number(-b->value));
  if (b->kind == Node::Kind::Neg) return make_binary(Node::Kind::Sub, a, b->args[0]);
  return make_binary(Node::Kind::Add, a, b);
}

inline Expr s_sub(const Expr& a, const Expr& b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return s_neg(b);
  if (is_const(a) && is_const(b)) return make_number(a->value - b->value);
  if (is_const(b) && b->value < 0.0) return make_binary(Node::Kind::Add, a, make_number(-b->value));
  if (b->kind == Node::Kind::Neg) return make_binary(Node::Kind::Add, a, b->args[0]);
  return make_binary(Node::Kind::Sub, a, b);
}

inline Expr s_mul(const Expr& a, const Expr& b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  if (is_number(a, -1.0)) return s_neg(b);
  if (is_number(b, -1.0)) return s_neg(a);
  if (is_const(a) && is_const(b)) return make_number(a->value * b->value);
  // keep constants on the left and merge c1*(c2*u)
  if (is_const(b)) return s_mul(b, a);
  if (is_const(a) && b->kind == Node::Kind::Mul && is_const(b->args[0]))
    return s_mul(make_number(a->value * b->args[0]->value), b->args[1]);
  if (is_const(a) && b->kind == Node::Kind::Neg) return s_mul(make_number(-a->value), b->args[0]);
  return make_binary(Node::Kind::Mul, a, b);
}

inline Expr s_div(const Expr& a, const Expr& b) {
  if (is_number(a, 0.0)) return make_number(0.0);
  if (is_number(b, 1.0)) return a;
  if (is_const(a) && is_const(b) && b->value != 0.0)
    return folded(a->value / b->value, make_binary(Node::Kind::Div, a, b));
  return make_binary(Node::Kind::Div, a, b);
}

inline Expr s_pow(const Expr& a, int k) {
  if (k == 0) return make_number(1.0);
  if (k == 1) return a;
  if (is_const(a)) return folded(std::pow(a->value, k), make_pow(a, k));
  return make_pow(a, k);
}

}  // namespace detail

/// Exact symbolic derivative with respect to state variable `var` (0-based),
/// lightly simplified. Subtrees not depending on the variable differentiate to 0.
inline Expr diff(const Expr& e, std::size_t var) {
  using namespace detail;
  using K = Node::Kind;
  if (!depends_on_state(e, var)) return make_number(0.0);
  const Node& n = *e;
  switch (n.kind) {
    case K::State: return make_number(1.0);
    case K::Neg: return s_neg(diff(n.args[0], var));
    case K::Add: return s_add(diff(n.args[0], var), diff(n.args[1], var));
    case K::Sub: return s_sub(diff(n.args[0], var), diff(n.args[1], var));
    case K::Mul: {
      const Expr& u = n.args[0];
      const Expr& v = n.args[1];
      return s_add(s_mul(diff(u, var), v), s_mul(u, diff(v, var)));
    }
    case K::Div: {
      const Expr& u = n.args[0];
      const Expr& v = n.args[1];
      if (!depends_on_state(v, var)) return s_div(diff(u, var), v);
      return s_div(s_sub(s_mul(diff(u, var), v), s_mul(u, diff(v, var))), s_pow(v, 2));
    }
    case K::Pow: {
      const Expr& u = n.args[0];
      return s_mul(s_mul(make_number(n.exponent), s_pow(u, n.exponent - 1)), diff(u, var));
    }
    case K::Call: {
      const Expr& u = n.args[0];
      const Expr du = diff(u, var);
      switch (n.func) {
        case Func::Sin: return s_mul(make_call(Func::Cos, {u}), du);
        case Func::Cos: return s_neg(s_mul(make_call(Func::Sin, {u}), du));
        case Func::Exp: return s_mul(e, du);
        case Func::Log: return s_div(du, u);
        case Func::Sqrt: return s_div(du, s_mul(make_number(2.0), e));
        case Func::Abs:
        case Func::Sgn:
        case Func::Min:
        case Func::Max:
          throw NotDifferentiable(std::string(func_name(n.func)) + "() at offset " + std::to_string(n.offset) +
                                  " is not differentiable; split it across modes");
      }
      break;
    }
    default: break;
  }
  throw NotDifferentiable("unexpected node in diff");
}

// --- printing -------------------------------------------------------------

namespace detail {

// 0 additive, 1 multiplicative, 2 unary, 3 power, 4 atom
inline int precedence(const Expr& e) {
  using K = Node::Kind;
  switch (e->kind) {
    case K::Add:
    case K::Sub: return 0;
    case K::Mul:
    case K::Div: return 1;
    case K::Neg: return 2;
    case K::Pow: return 3;
    case K::Number: return e->value < 0.0 || std::signbit(e->value) ? 2 : 4;
    default: return 4;
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

/// Renders an expression in the parse grammar with minimal parentheses.
/// Parsed trees re-parse to structurally identical trees.
inline std::string to_string(const Expr& e) {
  using namespace detail;
  using K = Node::Kind;
  const Node& n = *e;
  auto wrap = [](const Expr& a, bool paren) { return paren ? "(" + to_string(a) + ")" : to_string(a); };
  switch (n.kind) {
    case K::Number: return format_number(n.value);
    case K::State: return "x" + std::to_string(n.index + 1);
    case K::Time: return "t";
    case K::Param: return n.name;
    case K::Neg: return "-" + wrap(n.args[0], precedence(n.args[0]) < 2);
    case K::Add:
    case K::Sub:
      return wrap(n.args[0], precedence(n.args[0]) < 0) + (n.kind == K::Add ? " + " : " - ") +
             wrap(n.args[1], precedence(n.args[1]) <= 0);
    case K::Mul:
    case K::Div:
      return wrap(n.args[0], precedence(n.args[0]) < 1) + (n.kind == K::Mul ? "*" : "/") +
             wrap(n.args[1], precedence(n.args[1]) <= 1 && precedence(n.args[1]) != 2);
    case K::Pow: return wrap(n.args[0], precedence(n.args[0]) < 4) + "^" + std::to_string(n.exponent);
    case K::Call: {
      std::string s(func_name(n.func));
      s += "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) s += ", ";
        s += to_string(n.args[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace filcon

#include "exitlim/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <type_traits>
#include <utility>

namespace exitlim {

namespace {

// Scalar kernels shared between plain and dual evaluation. The double
// overloads carry the same domain checks as the Dual ones in dual.hpp.

double k_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}
Dual k_div(const Dual& a, const Dual& b) { return a / b; }

double k_pow(double a, double b) {
  if (b == std::floor(b) && std::abs(b) < 1e9) {
    if (a == 0.0 && b < 0.0) throw DomainError("0 raised to a negative power");
    return std::pow(a, b);
  }
  if (a < 0.0) throw DomainError("non-positive base with non-integer exponent");
  return std::pow(a, b);
}
Dual k_pow(const Dual& a, const Dual& b) { return pow(a, b); }

double k_log(double a) {
  if (a <= 0.0) throw DomainError("log of non-positive value");
  return std::log(a);
}
double k_sqrt(double a) {
  if (a < 0.0) throw DomainError("sqrt of negative value");
  return std::sqrt(a);
}
double k_sin(double a) { return std::sin(a); }
double k_cos(double a) { return std::cos(a); }
double k_exp(double a) { return std::exp(a); }
double k_tanh(double a) { return std::tanh(a); }
double k_abs(double a) { return std::fabs(a); }

Dual k_log(const Dual& a) { return log(a); }
Dual k_sqrt(const Dual& a) { return sqrt(a); }
Dual k_sin(const Dual& a) { return sin(a); }
Dual k_cos(const Dual& a) { return cos(a); }
Dual k_exp(const Dual& a) { return exp(a); }
Dual k_tanh(const Dual& a) { return tanh(a); }
Dual k_abs(const Dual& a) { return abs(a); }

const char* fn_name(int f) {
  static const char* names[] = {"sin", "cos", "exp", "log", "sqrt", "tanh", "abs"};
  return names[f];
}

}  // namespace

template <class T>
T Expression::eval_node(int idx, std::span<const double> x, int seed) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.op) {
    case Op::kConst:
      if constexpr (std::is_same_v<T, Dual>)
        return Dual(n.value, 0.0);
      else
        return n.value;
    case Op::kVar: {
      const double v = x[static_cast<std::size_t>(n.var)];
      if constexpr (std::is_same_v<T, Dual>)
        return Dual(v, n.var == seed ? 1.0 : 0.0);
      else
        return v;
    }
    case Op::kAdd:
      return eval_node<T>(n.a, x, seed) + eval_node<T>(n.b, x, seed);
    case Op::kSub:
      return eval_node<T>(n.a, x, seed) - eval_node<T>(n.b, x, seed);
    case Op::kMul:
      return eval_node<T>(n.a, x, seed) * eval_node<T>(n.b, x, seed);
    case Op::kDiv:
      return k_div(eval_node<T>(n.a, x, seed), eval_node<T>(n.b, x, seed));
    case Op::kPow:
      return k_pow(eval_node<T>(n.a, x, seed), eval_node<T>(n.b, x, seed));
    case Op::kNeg:
      return -eval_node<T>(n.a, x, seed);
    case Op::kFunc: {
      const T arg = eval_node<T>(n.a, x, seed);
      switch (n.fn) {
        case Fn::kSin: return k_sin(arg);
        case Fn::kCos: return k_cos(arg);
        case Fn::kExp: return k_exp(arg);
        case Fn::kLog: return k_log(arg);
        case Fn::kSqrt: return k_sqrt(arg);
        case Fn::kTanh: return k_tanh(arg);
        case Fn::kAbs: return k_abs(arg);
      }
    }
  }
  throw NumericalError("corrupt expression node");
}

double Expression::value(std::span<const double> x) const {
  if (root_ < 0) throw NumericalError("evaluating an empty expression");
  if (static_cast<int>(x.size()) < num_vars_)
    throw DomainError("evaluation point has too few coordinates");
  const double v = eval_node<double>(root_, x, -1);
  if (!std::isfinite(v))
    throw DomainError("expression evaluated to a non-finite value");
  return v;
}

Dual Expression::dual(std::span<const double> x, int seed) const {
  if (root_ < 0) throw NumericalError("evaluating an empty expression");
  if (static_cast<int>(x.size()) < num_vars_)
    throw DomainError("evaluation point has too few coordinates");
  const Dual v = eval_node<Dual>(root_, x, seed);
  if (!std::isfinite(v.val) || !std::isfinite(v.der))
    throw DomainError("expression derivative is non-finite");
  return v;
}

void Expression::print_node(int idx, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.op) {
    case Op::kConst: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case Op::kVar:
      out += 'x';
      out += std::to_string(n.var + 1);
      return;
    case Op::kNeg:
      out += "(-";
      print_node(n.a, out);
      out += ')';
      return;
    case Op::kFunc:
      out += fn_name(static_cast<int>(n.fn));
      out += '(';
      print_node(n.a, out);
      out += ')';
      return;
    default: {
      const char* ops = nullptr;
      switch (n.op) {
        case Op::kAdd: ops = "+"; break;
        case Op::kSub: ops = "-"; break;
        case Op::kMul: ops = "*"; break;
        case Op::kDiv: ops = "/"; break;
        case Op::kPow: ops = "^"; break;
        default: break;
      }
      out += '(';
      print_node(n.a, out);
      out += ops;
      print_node(n.b, out);
      out += ')';
      return;
    }
  }
}

std::string Expression::str() const {
  std::string out;
  if (root_ >= 0) print_node(root_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser.
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | variable | fn '(' expr ')' | '(' expr ')'
//
// '^' binds tighter than a unary minus applied outside it: -x1^2 == -(x1^2).

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, int eps_index)
      : src_(src), eps_index_(eps_index) {}

  Expression run() {
    skip_ws();
    if (at_end()) throw ParseError("syntax error: empty expression", pos_);
    expr_.root_ = parse_expr();
    skip_ws();
    if (!at_end())
      throw ParseError(std::string("syntax error: unexpected '") + src_[pos_] + "'", pos_);
    return std::move(expr_);
  }

 private:
  using Op = Expression::Op;
  using Fn = Expression::Fn;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  int push(Expression::Node n) {
    expr_.nodes_.push_back(n);
    return static_cast<int>(expr_.nodes_.size()) - 1;
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      const int rhs = parse_term();
      Expression::Node n;
      n.op = (c == '+') ? Op::kAdd : Op::kSub;
      n.a = lhs;
      n.b = rhs;
      lhs = push(n);
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      const int rhs = parse_unary();
      Expression::Node n;
      n.op = (c == '*') ? Op::kMul : Op::kDiv;
      n.a = lhs;
      n.b = rhs;
      lhs = push(n);
    }
  }

  int parse_unary() {
    skip_ws();
    if (peek() == '-') {
      ++pos_;
      const int a = parse_unary();
      Expression::Node n;
      n.op = Op::kNeg;
      n.a = a;
      return push(n);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    skip_ws();
    if (peek() != '^') return base;
    ++pos_;
    const int exponent = parse_unary();  // right-assoc; allows 2^-3
    Expression::Node n;
    n.op = Op::kPow;
    n.a = base;
    n.b = exponent;
    return push(n);
  }

  int parse_primary() {
    skip_ws();
    if (at_end()) throw ParseError("syntax error: unexpected end of input", pos_);
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      expect(')');
      return inner;
    }
    throw ParseError(std::string("syntax error: unexpected '") + c + "'", pos_);
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c)
      throw ParseError(std::string("syntax error: expected '") + c + "'", pos_);
    ++pos_;
  }

  int parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (!at_end() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string tok(src_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v))
      throw ParseError("invalid numeric literal '" + tok + "'", start);
    Expression::Node n;
    n.op = Op::kConst;
    n.value = v;
    return push(n);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    // Variables: x (alias for x1) or x<k>, 1-based.
    if (name[0] == 'x' &&
        (name.size() == 1 ||
         std::all_of(name.begin() + 1, name.end(),
                     [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))) {
      int index = 0;
      if (name.size() > 1) {
        const long k = std::strtol(name.c_str() + 1, nullptr, 10);
        if (k < 1 || k > 1024)
          throw ParseError("variables are numbered x1, x2, ...", start);
        index = static_cast<int>(k) - 1;
      }
      return make_var(index);
    }

    if (name == "eps") {
      if (eps_index_ < 0)
        throw ParseError("unknown identifier 'eps' (only allowed in epsilon-correction fields)", start);
      return make_var(eps_index_);
    }

    static const std::pair<const char*, Fn> fns[] = {
        {"sin", Fn::kSin}, {"cos", Fn::kCos},   {"exp", Fn::kExp}, {"log", Fn::kLog},
        {"sqrt", Fn::kSqrt}, {"tanh", Fn::kTanh}, {"abs", Fn::kAbs}};
    for (const auto& [fname, fid] : fns) {
      if (name == fname) {
        skip_ws();
        if (peek() != '(')
          throw ParseError("function '" + name + "' expects an argument list", pos_);
        ++pos_;
        const int arg = parse_expr();
        skip_ws();
        if (peek() == ',')
          throw ParseError("function '" + name + "' takes exactly one argument", pos_);
        expect(')');
        Expression::Node n;
        n.op = Op::kFunc;
        n.fn = fid;
        n.a = arg;
        return push(n);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  int make_var(int index) {
    Expression::Node n;
    n.op = Op::kVar;
    n.var = index;
    expr_.num_vars_ = std::max(expr_.num_vars_, index + 1);
    return push(n);
  }

  std::string_view src_;
  int eps_index_;
  std::size_t pos_ = 0;
  Expression expr_;
};

Expression Expression::parse(std::string_view src, int eps_index) {
  return ExpressionParser(src, eps_index).run();
}

Expression parse_expression(std::string_view src) { return Expression::parse(src); }

}  // namespace exitlim

#pragma once

// Small expression language for scalar fields: numeric literals, variables
// x1..xd, + - * / ^, unary minus, and the function catalog
// {sin, cos, exp, log, sqrt, tanh, abs}. Trees are immutable after parsing
// and safe to share across threads.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exitlim/dual.hpp"
#include "exitlim/errors.hpp"

namespace exitlim {

class Expression {
 public:
  Expression() = default;

  // Parses `src`. When eps_index >= 0 the identifier `eps` is accepted and
  // maps to that variable slot (used by the epsilon-correction fields, which
  // see the noise amplitude as one extra trailing input).
  static Expression parse(std::string_view src, int eps_index = -1);

  bool empty() const { return nodes_.empty(); }

  // Evaluates at x; throws DomainError if any step leaves a function's
  // domain or the result is non-finite.
  double value(std::span<const double> x) const;

  // Forward-mode evaluation: value plus derivative w.r.t. x[seed].
  Dual dual(std::span<const double> x, int seed) const;

  // 1 + highest variable index referenced (0 for constant expressions).
  int num_vars() const { return num_vars_; }

  // Canonical printed form; re-parses to an equivalent tree.
  std::string str() const;

 private:
  enum class Op : unsigned char {
    kConst,
    kVar,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
    kNeg,
    kFunc,
  };
  enum class Fn : unsigned char { kSin, kCos, kExp, kLog, kSqrt, kTanh, kAbs };

  struct Node {
    Op op = Op::kConst;
    Fn fn = Fn::kSin;
    int a = -1;
    int b = -1;
    int var = -1;
    double value = 0.0;
  };

  template <class T>
  T eval_node(int idx, std::span<const double> x, int seed) const;

  void print_node(int idx, std::string& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  int num_vars_ = 0;

  friend class ExpressionParser;
};

// Spec-level entry point; identical to Expression::parse(src).
Expression parse_expression(std::string_view src);

}  // namespace exitlim

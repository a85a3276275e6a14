#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pinf/ad/param_store.hpp"

namespace pinf::ad {

class Tape;

/// Handle to a scalar node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t index = -1;

  double value() const;
};

enum class Op : std::uint8_t {
  Constant,
  Input,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  AddScalar,
  MulScalar,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Reciprocal,
  Power,
  Clamp,
  Logistic,
  Softplus,
  Min,
  Max,
};

/// Append-only scalar tape for reverse-mode differentiation.
///
/// Operands always precede their consumers, so a single reverse sweep visits
/// each node once. Parameter leaves are bound to a ParamStore slot and
/// backward() accumulates into that store's gradient buffer. Input leaves
/// expose their adjoints through adjoint(), which is how fused network
/// kernels outside the tape receive output sensitivities.
class Tape {
 public:
  Tape();

  Var constant(double v);
  Var input(double v);
  Var param(ParamStore& store, std::size_t index);
  Var zero() const { return {const_cast<Tape*>(this), 0}; }
  Var one() const { return {const_cast<Tape*>(this), 1}; }
  /// Constant copy of v: the stop-gradient primitive.
  Var detach(Var v);

  Var unary(Op op, Var a, double p0 = 0.0, double p1 = 0.0);
  Var binary(Op op, Var a, Var b);

  double value(Var v) const { return nodes_[static_cast<std::size_t>(v.index)].value; }
  bool is_zero(Var v) const;
  bool owns(Var v) const;

  /// Reverse sweep from root. Adjoints are reset first, so the tape can be
  /// swept again for a different root. Throws StructuralError if root does not
  /// belong to this tape.
  void backward(Var root);
  double adjoint(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  void clear();
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    Op op;
    std::int32_t a;
    std::int32_t b;
    double value;
    double p0;
    double p1;
  };

  Var push(Op op, std::int32_t a, std::int32_t b, double value, double p0 = 0.0, double p1 = 0.0);

  std::vector<Node> nodes_;
  std::vector<double> adjoint_;
  std::vector<std::pair<std::int32_t, std::pair<ParamStore*, std::size_t>>> params_;
};

inline double Var::value() const { return tape->value(*this); }

// Arithmetic on Var. Mixed Var/double forms avoid materialising constants.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
inline Var& operator+=(Var& a, Var b) { return a = a + b; }
inline Var& operator-=(Var& a, Var b) { return a = a - b; }
inline Var& operator*=(Var& a, Var b) { return a = a * b; }

Var sin(Var a);
Var cos(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);
Var pow(Var a, double p);
/// Derivative is 1 on the closed interval [lo, hi] and 0 outside.
Var clamp(Var a, double lo, double hi);
Var logistic(Var a);
Var softplus(Var a);
Var min(Var a, Var b);
Var max(Var a, Var b);

// Plain-double counterparts so templated code can run on either scalar.
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double reciprocal(double x) { return 1.0 / x; }
inline double value_of(double x) { return x; }
inline double value_of(Var v) { return v.value(); }

}  // namespace pinf::ad

#include "pinf/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pinf/common.hpp"

namespace pinf::ad {

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw StructuralError("operands live on different tapes");
  return *a.tape;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tape::Tape() {
  nodes_.reserve(1024);
  push(Op::Constant, -1, -1, 0.0);
  push(Op::Constant, -1, -1, 1.0);
}

Var Tape::push(Op op, std::int32_t a, std::int32_t b, double value, double p0, double p1) {
  if (nodes_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw StructuralError("tape size limit reached");
  }
  nodes_.push_back(Node{op, a, b, value, p0, p1});
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(double v) {
  if (v == 0.0 && !std::signbit(v)) return zero();
  if (v == 1.0) return one();
  return push(Op::Constant, -1, -1, v);
}

Var Tape::input(double v) { return push(Op::Input, -1, -1, v); }

Var Tape::param(ParamStore& store, std::size_t index) {
  if (index >= store.size()) throw ArgumentError("parameter index out of range");
  Var v = push(Op::Param, -1, -1, store.values()[index]);
  params_.push_back({v.index, {&store, index}});
  return v;
}

Var Tape::detach(Var v) {
  if (!owns(v)) throw StructuralError("detach: node not on this tape");
  return constant(value(v));
}

bool Tape::owns(Var v) const {
  return v.tape == this && v.index >= 0 && static_cast<std::size_t>(v.index) < nodes_.size();
}

bool Tape::is_zero(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.index)];
  return n.op == Op::Constant && n.value == 0.0;
}

Var Tape::unary(Op op, Var a, double p0, double p1) {
  const double x = value(a);
  double y = 0.0;
  switch (op) {
    case Op::Neg: y = -x; break;
    case Op::AddScalar: y = x + p0; break;
    case Op::MulScalar: y = x * p0; break;
    case Op::Sin: y = std::sin(x); break;
    case Op::Cos: y = std::cos(x); break;
    case Op::Exp: y = std::exp(x); break;
    case Op::Log: y = std::log(x); break;
    case Op::Sqrt: y = std::sqrt(x); break;
    case Op::Reciprocal: y = 1.0 / x; break;
    case Op::Power: y = std::pow(x, p0); break;
    case Op::Clamp: y = std::clamp(x, p0, p1); break;
    case Op::Logistic: y = sigmoid(x); break;
    case Op::Softplus: y = softplus(x); break;
    default: throw StructuralError("not a unary op");
  }
  return push(op, a.index, -1, y, p0, p1);
}

Var Tape::binary(Op op, Var a, Var b) {
  const double x = value(a);
  const double z = value(b);
  double y = 0.0;
  switch (op) {
    case Op::Add: y = x + z; break;
    case Op::Sub: y = x - z; break;
    case Op::Mul: y = x * z; break;
    case Op::Div: y = x / z; break;
    case Op::Min: y = x <= z ? x : z; break;
    case Op::Max: y = x >= z ? x : z; break;
    default: throw StructuralError("not a binary op");
  }
  return push(op, a.index, b.index, y);
}

double Tape::adjoint(Var v) const {
  if (!owns(v)) throw StructuralError("adjoint: node not on this tape");
  if (adjoint_.size() != nodes_.size()) return 0.0;
  return adjoint_[static_cast<std::size_t>(v.index)];
}

void Tape::clear() {
  nodes_.resize(2);
  adjoint_.clear();
  params_.clear();
}

void Tape::backward(Var root) {
  if (!owns(root)) throw StructuralError("backward: root is not a node of this tape");
  adjoint_.assign(nodes_.size(), 0.0);
  adjoint_[static_cast<std::size_t>(root.index)] = 1.0;

  for (std::int64_t i = root.index; i >= 0; --i) {
    const double g = adjoint_[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    auto& ga = n.a >= 0 ? adjoint_[static_cast<std::size_t>(n.a)] : adjoint_[0];
    auto& gb = n.b >= 0 ? adjoint_[static_cast<std::size_t>(n.b)] : adjoint_[0];
    const double x = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value : 0.0;
    const double z = n.b >= 0 ? nodes_[static_cast<std::size_t>(n.b)].value : 0.0;
    switch (n.op) {
      case Op::Constant:
      case Op::Input:
      case Op::Param: break;
      case Op::Add: ga += g; gb += g; break;
      case Op::Sub: ga += g; gb -= g; break;
      case Op::Mul: ga += g * z; gb += g * x; break;
      case Op::Div: ga += g / z; gb -= g * x / (z * z); break;
      case Op::Neg: ga -= g; break;
      case Op::AddScalar: ga += g; break;
      case Op::MulScalar: ga += g * n.p0; break;
      case Op::Sin: ga += g * std::cos(x); break;
      case Op::Cos: ga -= g * std::sin(x); break;
      case Op::Exp: ga += g * n.value; break;
      case Op::Log: ga += g / x; break;
      case Op::Sqrt: ga += g * 0.5 / n.value; break;
      case Op::Reciprocal: ga -= g * n.value * n.value; break;
      case Op::Power: ga += g * n.p0 * std::pow(x, n.p0 - 1.0); break;
      case Op::Clamp:
        if (x >= n.p0 && x <= n.p1) ga += g;
        break;
      case Op::Logistic: ga += g * n.value * (1.0 - n.value); break;
      case Op::Softplus: ga += g * sigmoid(x); break;
      case Op::Min:
        if (x <= z) ga += g; else gb += g;
        break;
      case Op::Max:
        if (x >= z) ga += g; else gb += g;
        break;
    }
  }
  // Slot 0 doubles as the sink for leaf operands; constants never propagate.
  adjoint_[0] = 0.0;

  for (const auto& [node, slot] : params_) {
    if (node > root.index) continue;
    slot.first->grad()[slot.second] += adjoint_[static_cast<std::size_t>(node)];
  }
}

Var operator+(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (t.is_zero(a)) return b;
  if (t.is_zero(b)) return a;
  return t.binary(Op::Add, a, b);
}
Var operator-(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (t.is_zero(b)) return a;
  return t.binary(Op::Sub, a, b);
}
Var operator*(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (t.is_zero(a) || t.is_zero(b)) return t.zero();
  return t.binary(Op::Mul, a, b);
}
Var operator/(Var a, Var b) { return same_tape(a, b).binary(Op::Div, a, b); }
Var operator-(Var a) { return a.tape->unary(Op::Neg, a); }
Var operator+(Var a, double b) { return b == 0.0 ? a : a.tape->unary(Op::AddScalar, a, b); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, double b) { return a + (-b); }
Var operator-(double a, Var b) { return (-b) + a; }
Var operator*(Var a, double b) {
  if (b == 1.0) return a;
  if (b == 0.0 || a.tape->is_zero(a)) return a.tape->zero();
  return a.tape->unary(Op::MulScalar, a, b);
}
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, double b) { return a * (1.0 / b); }
Var operator/(double a, Var b) { return reciprocal(b) * a; }

Var sin(Var a) { return a.tape->unary(Op::Sin, a); }
Var cos(Var a) { return a.tape->unary(Op::Cos, a); }
Var exp(Var a) { return a.tape->unary(Op::Exp, a); }
Var log(Var a) { return a.tape->unary(Op::Log, a); }
Var sqrt(Var a) { return a.tape->unary(Op::Sqrt, a); }
Var reciprocal(Var a) { return a.tape->unary(Op::Reciprocal, a); }
Var pow(Var a, double p) { return a.tape->unary(Op::Power, a, p); }
Var clamp(Var a, double lo, double hi) { return a.tape->unary(Op::Clamp, a, lo, hi); }
Var logistic(Var a) { return a.tape->unary(Op::Logistic, a); }
Var softplus(Var a) { return a.tape->unary(Op::Softplus, a); }
Var min(Var a, Var b) { return same_tape(a, b).binary(Op::Min, a, b); }
Var max(Var a, Var b) { return same_tape(a, b).binary(Op::Max, a, b); }

}  // namespace pinf::ad

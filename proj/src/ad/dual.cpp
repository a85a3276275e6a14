#include "pinf/ad/dual.hpp"

#include <cmath>

#include "pinf/common.hpp"

namespace pinf::ad {

Dual make_constant(Tape& t, double v) { return {t.constant(v), t.zero()}; }

Dual make_seeded(Tape& t, double v, double seed) { return {t.constant(v), t.constant(seed)}; }

Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(const Dual& a, const Dual& b) {
  Var q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
Dual operator-(const Dual& a) { return {-a.v, a.v.tape->is_zero(a.d) ? a.d : -a.d}; }
Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }

Dual sin(const Dual& a) { return {sin(a.v), a.d.tape->is_zero(a.d) ? a.d : cos(a.v) * a.d}; }
Dual cos(const Dual& a) { return {cos(a.v), a.d.tape->is_zero(a.d) ? a.d : -(sin(a.v) * a.d)}; }
Dual exp(const Dual& a) {
  Var e = exp(a.v);
  return {e, e * a.d};
}
Dual log(const Dual& a) { return {log(a.v), a.d / a.v}; }
Dual sqrt(const Dual& a) {
  Var s = sqrt(a.v);
  return {s, a.d.tape->is_zero(a.d) ? a.d : a.d * reciprocal(s) * 0.5};
}
Dual reciprocal(const Dual& a) {
  Var r = reciprocal(a.v);
  return {r, a.d.tape->is_zero(a.d) ? a.d : -(r * r * a.d)};
}
Dual pow(const Dual& a, double p) {
  if (a.d.tape->is_zero(a.d)) return {pow(a.v, p), a.d};
  return {pow(a.v, p), pow(a.v, p - 1.0) * a.d * p};
}
Dual clamp(const Dual& a, double lo, double hi) {
  const double x = a.v.value();
  const bool inside = x >= lo && x <= hi;
  return {clamp(a.v, lo, hi), inside ? a.d : a.v.tape->zero()};
}
Dual logistic(const Dual& a) {
  Var l = logistic(a.v);
  if (a.d.tape->is_zero(a.d)) return {l, a.d};
  return {l, l * (1.0 - l) * a.d};
}
Dual softplus(const Dual& a) {
  if (a.d.tape->is_zero(a.d)) return {softplus(a.v), a.d};
  return {softplus(a.v), logistic(a.v) * a.d};
}
Dual min(const Dual& a, const Dual& b) { return a.v.value() <= b.v.value() ? Dual{min(a.v, b.v), a.d} : Dual{min(a.v, b.v), b.d}; }
Dual max(const Dual& a, const Dual& b) { return a.v.value() >= b.v.value() ? Dual{max(a.v, b.v), a.d} : Dual{max(a.v, b.v), b.d}; }
Dual detach(const Dual& a) {
  Tape& t = *a.v.tape;
  return {t.detach(a.v), t.detach(a.d)};
}

std::vector<Dual> input_derivative(Tape& tape, const DualFunction& f, std::span<const double> x,
                                   std::span<const double> dir) {
  if (x.size() != dir.size()) throw ArgumentError("input_derivative: direction size mismatch");
  double n2 = 0.0;
  for (double d : dir) n2 += d * d;
  if (!(n2 > 0.0)) throw ArgumentError("input_derivative: zero-length direction");
  for (double xi : x) {
    if (!std::isfinite(xi)) throw ArgumentError("input_derivative: non-finite input");
  }
  std::vector<Dual> in;
  in.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) in.push_back(make_seeded(tape, x[i], dir[i]));
  return f(tape, in);
}

}  // namespace pinf::ad

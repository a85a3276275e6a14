#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pinf/ad/tape.hpp"

namespace pinf::ad {

/// Forward-mode pair whose primal and tangent are both tape nodes.
///
/// Because the tangent is itself recorded on the tape, a loss built from
/// tangents can be swept in reverse: this is the forward-over-reverse nesting
/// used for parameter gradients of residuals that contain input derivatives.
struct Dual {
  Var v;
  Var d;
};

Dual make_constant(Tape& t, double v);
/// Seeds an independent variable: tangent = seed.
Dual make_seeded(Tape& t, double v, double seed);

Dual operator+(const Dual& a, const Dual& b);
Dual operator-(const Dual& a, const Dual& b);
Dual operator*(const Dual& a, const Dual& b);
Dual operator/(const Dual& a, const Dual& b);
Dual operator-(const Dual& a);
Dual operator+(const Dual& a, double b);
Dual operator*(const Dual& a, double b);
inline Dual operator*(double a, const Dual& b) { return b * a; }
inline Dual operator-(const Dual& a, double b) { return a + (-b); }

Dual sin(const Dual& a);
Dual cos(const Dual& a);
Dual exp(const Dual& a);
Dual log(const Dual& a);
Dual sqrt(const Dual& a);
Dual reciprocal(const Dual& a);
Dual pow(const Dual& a, double p);
Dual clamp(const Dual& a, double lo, double hi);
Dual logistic(const Dual& a);
Dual softplus(const Dual& a);
Dual min(const Dual& a, const Dual& b);
Dual max(const Dual& a, const Dual& b);
Dual detach(const Dual& a);

using DualFunction = std::function<std::vector<Dual>(Tape&, std::span<const Dual>)>;

/// Evaluates f at x with every input seeded along dir; the returned tangents
/// are the directional derivatives of each output. Throws ArgumentError for a
/// zero-length direction or mismatched sizes.
std::vector<Dual> input_derivative(Tape& tape, const DualFunction& f, std::span<const double> x,
                                   std::span<const double> dir);

}  // namespace pinf::ad

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinf/ad/dual.hpp"
#include "pinf/ad/param_store.hpp"

namespace pinf::fields {

enum class FieldKind : std::uint32_t {
  Radiance = 0,        // (x,y,z,t) -> (c, sigma)
  Velocity = 1,        // (x,y,z,t) -> u
  StaticRadiance = 2,  // (x,y,z)   -> (c, sigma)
};

struct MlpShape {
  int in_dim = 4;
  int hidden = 64;
  int layers = 5;  // hidden SIREN layers, N >= 2
  int out_dim = 4;
  double omega_first = 30.0;
  double omega_hidden = 30.0;
};

MlpShape default_shape(FieldKind kind, int hidden = 64, int layers = 5);

/// Sinusoidal MLP with an affine output head and a layer-growing schedule.
///
/// Hidden layer m computes h_m = sin(omega_m (W_m h_{m-1} + b_m)) with
/// h_{-1} the input point. The head reads z = sum_m w_m h_m where w is the
/// growth routing (one-hot on the last layer when not growing).
class GrowingMlp {
 public:
  GrowingMlp() = default;
  GrowingMlp(FieldKind kind, const MlpShape& shape);

  FieldKind kind() const { return kind_; }
  const MlpShape& shape() const { return shape_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  void set_growth(double step, double total_steps, bool enabled);
  double growth_step() const { return grow_step_; }
  double growth_total() const { return grow_total_; }
  bool growth_enabled() const { return grow_enabled_; }
  /// Routing weights used by the head; grown=false routes only the last layer.
  std::vector<double> routing(bool grown) const;

  double omega(int layer) const { return layer == 0 ? shape_.omega_first : shape_.omega_hidden; }
  int layer_in(int layer) const { return layer == 0 ? shape_.in_dim : shape_.hidden; }

 private:
  FieldKind kind_ = FieldKind::Radiance;
  MlpShape shape_{};
  ad::ParamStore params_;
  double grow_step_ = 0.0;
  double grow_total_ = 1.0;
  bool grow_enabled_ = false;
};

/// SIREN initialisation, reproducible from seed. First layer U(-1/in, 1/in);
/// deeper layers and head U(-sqrt(6/in)/omega, +sqrt(6/in)/omega). Biases use
/// the bound of their layer's weights.
void init_siren(GrowingMlp& model, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batched evaluation with forward tangents and a matching reverse sweep.

/// Forward cache for a batch of points (one column per point).
struct MlpTrace {
  int points = 0;
  int depth = 0;  // number of hidden layers evaluated
  bool grown = false;
  std::vector<double> routing;
  Eigen::MatrixXd input;
  std::vector<Eigen::VectorXd> dirs;
  std::vector<Eigen::MatrixXd> s;                  // sin(omega a_m)
  std::vector<Eigen::MatrixXd> c;                  // cos(omega a_m)
  std::vector<std::vector<Eigen::MatrixXd>> adot;  // tangent of a_m per direction
  Eigen::MatrixXd z;
  std::vector<Eigen::MatrixXd> zdot;
  Eigen::MatrixXd out;                   // raw head outputs, out_dim x P
  std::vector<Eigen::MatrixXd> out_dot;  // raw head tangents per direction
};

/// Evaluates the network at the columns of `input`. Each entry of `dirs` is an
/// input-space direction; its tangent is propagated alongside the primal.
void forward(const GrowingMlp& model, const Eigen::MatrixXd& input, std::span<const Eigen::VectorXd> dirs,
             bool grown, MlpTrace& trace);

/// Reverse sweep. Accumulates parameter gradients into model.params().grad()
/// given adjoints of the raw outputs and (optionally) of their tangents. When
/// input_adj is non-null it receives d(loss)/d(input) through the primal path
/// (tangent adjoints do not contribute to it).
void backward(GrowingMlp& model, const MlpTrace& trace, const Eigen::MatrixXd& out_adj,
              std::span<const Eigen::MatrixXd> out_dot_adj, Eigen::MatrixXd* input_adj);

/// s[i] = sin(x[i]), c[i] = cos(x[i]) to within an ulp or two for |x| < 1e5.
void sincos_block(const double* x, double* s, double* c, std::size_t n);

/// Canonical axis direction e_axis in an input space of dimension dim.
Eigen::VectorXd axis(int dim, int axis_index);

// ---------------------------------------------------------------------------
// Point-wise field queries.

struct RadianceOut {
  std::array<double, 3> color{};
  double sigma = 0.0;
};

struct VelocityOut {
  std::array<double, 3> u{};
};

/// sigma = softplus(raw_3), color = logistic(raw_0..2). x has in_dim entries.
RadianceOut eval_radiance(const GrowingMlp& model, std::span<const double> x, bool grown);
VelocityOut eval_velocity(const GrowingMlp& model, std::span<const double> x, bool grown);

// ---------------------------------------------------------------------------
// Scalar-tape route: every multiply is a tape node. Slow, but independent of
// the batched kernels above, so the two serve as cross-checks.

class TapeMlp {
 public:
  /// Binds all parameters of model as leaves on tape.
  TapeMlp(ad::Tape& tape, GrowingMlp& model);

  /// Raw head outputs as duals.
  std::vector<ad::Dual> eval(std::span<const ad::Dual> x, bool grown) const;

 private:
  ad::Tape* tape_;
  const GrowingMlp* model_;
  std::vector<ad::Var> params_;
};

}  // namespace pinf::fields

#include "pinf/fields/mlp.hpp"

#include <cstring>

#include <cmath>
#include <random>

#include "pinf/common.hpp"
#include "pinf/fields/growth.hpp"

namespace pinf::fields {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

ConstMatMap weight(const GrowingMlp& m, int layer) {
  const auto& b = m.params().block(layer, ad::BlockKind::Matrix);
  return ConstMatMap(m.params().block_values(b), static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}
ConstVecMap bias(const GrowingMlp& m, int layer) {
  const auto& b = m.params().block(layer, ad::BlockKind::Bias);
  return ConstVecMap(m.params().block_values(b), static_cast<Eigen::Index>(b.rows));
}
MatMap weight_grad(GrowingMlp& m, int layer) {
  const auto& b = m.params().block(layer, ad::BlockKind::Matrix);
  return MatMap(m.params().block_grad(b), static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}
VecMap bias_grad(GrowingMlp& m, int layer) {
  const auto& b = m.params().block(layer, ad::BlockKind::Bias);
  return VecMap(m.params().block_grad(b), static_cast<Eigen::Index>(b.rows));
}

}  // namespace

MlpShape default_shape(FieldKind kind, int hidden, int layers) {
  MlpShape s;
  s.hidden = hidden;
  s.layers = layers;
  switch (kind) {
    case FieldKind::Radiance: s.in_dim = 4; s.out_dim = 4; break;
    case FieldKind::Velocity: s.in_dim = 4; s.out_dim = 3; break;
    case FieldKind::StaticRadiance: s.in_dim = 3; s.out_dim = 4; break;
  }
  return s;
}

GrowingMlp::GrowingMlp(FieldKind kind, const MlpShape& shape) : kind_(kind), shape_(shape) {
  if (shape.layers < 2) throw ArgumentError("GrowingMlp needs at least two hidden layers");
  if (shape.hidden < 1 || shape.in_dim < 1 || shape.out_dim < 1) throw ArgumentError("GrowingMlp: bad widths");
  for (int m = 0; m < shape.layers; ++m) {
    params_.add_block(m, ad::BlockKind::Matrix, static_cast<std::size_t>(shape.hidden),
                      static_cast<std::size_t>(layer_in(m)));
    params_.add_block(m, ad::BlockKind::Bias, static_cast<std::size_t>(shape.hidden), 1);
  }
  params_.add_block(shape.layers, ad::BlockKind::Matrix, static_cast<std::size_t>(shape.out_dim),
                    static_cast<std::size_t>(shape.hidden));
  params_.add_block(shape.layers, ad::BlockKind::Bias, static_cast<std::size_t>(shape.out_dim), 1);
}

void GrowingMlp::set_growth(double step, double total_steps, bool enabled) {
  if (!(total_steps > 0.0) || step < 0.0) throw ArgumentError("set_growth: bad schedule");
  grow_step_ = step;
  grow_total_ = total_steps;
  grow_enabled_ = enabled;
}

std::vector<double> GrowingMlp::routing(bool grown) const {
  if (grown && grow_enabled_) return growth_weights(grow_step_, grow_total_, shape_.layers);
  std::vector<double> w(static_cast<std::size_t>(shape_.layers), 0.0);
  w.back() = 1.0;
  return w;
}

void init_siren(GrowingMlp& model, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x51e7));
  auto& p = model.params();
  const auto& sh = model.shape();
  for (int m = 0; m <= sh.layers; ++m) {
    const auto& wb = p.block(m, ad::BlockKind::Matrix);
    const double fan_in = static_cast<double>(wb.cols);
    const double bound =
        m == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / (m == sh.layers ? sh.omega_hidden : model.omega(m));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* w = p.block_values(wb);
    for (std::size_t i = 0; i < wb.size(); ++i) w[i] = dist(rng);
    const auto& bb = p.block(m, ad::BlockKind::Bias);
    double* b = p.block_values(bb);
    for (std::size_t i = 0; i < bb.size(); ++i) b[i] = dist(rng);
  }
}

Eigen::VectorXd axis(int dim, int axis_index) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v(axis_index) = 1.0;
  return v;
}

void sincos_block(const double* x, double* s, double* c, std::size_t n) {
  // Cody-Waite reduction by pi/2 (three-part constant) and the fdlibm
  // kernel polynomials on [-pi/4, pi/4]. Quadrant selection uses bit masks so
  // the loop vectorizes.
  constexpr double inv_pio2 = 6.36619772367581382433e-01;
  constexpr double p1 = 1.57079632673412561417e+00, p2 = 6.07710050630396597660e-11,
                   p3 = 2.02226624871116645580e-21;
  constexpr double magic = 6755399441055744.0;  // 1.5 * 2^52
  constexpr double S1 = -1.66666666666666324348e-01, S2 = 8.33333333332248946124e-03,
                   S3 = -1.98412698298579493134e-04, S4 = 2.75573137070700676789e-06,
                   S5 = -2.50507602534068634195e-08, S6 = 1.58969099521155010221e-10;
  constexpr double C1 = 4.16666666666666019037e-02, C2 = -1.38888888888741095749e-03,
                   C3 = 2.48015872894767294178e-05, C4 = -2.75573143513906633035e-07,
                   C5 = 2.08757232129817482790e-09, C6 = -1.13596475577881948265e-11;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = x[i] * inv_pio2 + magic;
    const double k = t - magic;
    std::uint64_t bits;
    std::memcpy(&bits, &t, 8);
    const std::uint64_t q = bits & 3u;
    const double r = ((x[i] - k * p1) - k * p2) - k * p3;
    const double z = r * r;
    const double sr = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    const double cr = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    std::uint64_t sb, cb;
    std::memcpy(&sb, &sr, 8);
    std::memcpy(&cb, &cr, 8);
    const std::uint64_t m = 0 - (q & 1u);
    std::uint64_t a = (sb & ~m) | (cb & m);
    std::uint64_t b = (cb & ~m) | (sb & m);
    a ^= (q & 2u) << 62;
    b ^= ((q + 1u) & 2u) << 62;
    std::memcpy(&s[i], &a, 8);
    std::memcpy(&c[i], &b, 8);
  }
}

void forward(const GrowingMlp& model, const Eigen::MatrixXd& input, std::span<const Eigen::VectorXd> dirs,
             bool grown, MlpTrace& tr) {
  const auto& sh = model.shape();
  if (input.rows() != sh.in_dim) throw ArgumentError("forward: input has wrong dimension");
  for (const auto& d : dirs) {
    if (d.size() != sh.in_dim) throw ArgumentError("forward: direction has wrong dimension");
  }
  const Eigen::Index P = input.cols();
  const std::size_t D = dirs.size();
  tr.points = static_cast<int>(P);
  tr.grown = grown;
  tr.routing = model.routing(grown);
  tr.depth = 0;
  for (int m = 0; m < sh.layers; ++m) {
    if (tr.routing[static_cast<std::size_t>(m)] > 0.0) tr.depth = m + 1;
  }
  tr.input = input;
  tr.dirs.assign(dirs.begin(), dirs.end());
  tr.s.resize(static_cast<std::size_t>(tr.depth));
  tr.c.resize(static_cast<std::size_t>(tr.depth));
  tr.adot.assign(static_cast<std::size_t>(tr.depth), std::vector<Eigen::MatrixXd>(D));

  tr.z.setZero(sh.hidden, P);
  tr.zdot.assign(D, Eigen::MatrixXd::Zero(sh.hidden, P));
  std::vector<Eigen::MatrixXd> hdot(D);

  for (int m = 0; m < tr.depth; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    const auto W = weight(model, m);
    const double om = model.omega(m);
    Eigen::MatrixXd a = (m == 0) ? Eigen::MatrixXd(W * input) : Eigen::MatrixXd(W * tr.s[mi - 1]);
    a.colwise() += bias(model, m);
    a *= om;
    tr.s[mi].resize(a.rows(), a.cols());
    tr.c[mi].resize(a.rows(), a.cols());
    sincos_block(a.data(), tr.s[mi].data(), tr.c[mi].data(), static_cast<std::size_t>(a.size()));
    for (std::size_t d = 0; d < D; ++d) {
      if (m == 0) {
        tr.adot[mi][d] = (W * dirs[d]).replicate(1, P);
      } else {
        tr.adot[mi][d] = W * hdot[d];
      }
      hdot[d] = (om * tr.c[mi].array() * tr.adot[mi][d].array()).matrix();
    }
    const double w = tr.routing[mi];
    if (w != 0.0) {
      tr.z += w * tr.s[mi];
      for (std::size_t d = 0; d < D; ++d) tr.zdot[d] += w * hdot[d];
    }
  }
  const auto Wo = weight(model, sh.layers);
  tr.out = Wo * tr.z;
  tr.out.colwise() += bias(model, sh.layers);
  tr.out_dot.resize(D);
  for (std::size_t d = 0; d < D; ++d) tr.out_dot[d] = Wo * tr.zdot[d];
}

void backward(GrowingMlp& model, const MlpTrace& tr, const Eigen::MatrixXd& out_adj,
              std::span<const Eigen::MatrixXd> out_dot_adj, Eigen::MatrixXd* input_adj) {
  const auto& sh = model.shape();
  const Eigen::Index P = tr.points;
  const std::size_t D = out_dot_adj.size();
  if (out_adj.rows() != sh.out_dim || out_adj.cols() != P) throw ArgumentError("backward: adjoint shape mismatch");
  if (D != 0 && D != tr.dirs.size()) throw ArgumentError("backward: tangent adjoint count mismatch");

  const auto Wo = weight(model, sh.layers);
  auto gWo = weight_grad(model, sh.layers);
  gWo.noalias() += out_adj * tr.z.transpose();
  bias_grad(model, sh.layers) += out_adj.rowwise().sum();
  const Eigen::MatrixXd zbar = Wo.transpose() * out_adj;
  std::vector<Eigen::MatrixXd> zdotbar(D);
  for (std::size_t d = 0; d < D; ++d) {
    gWo.noalias() += out_dot_adj[d] * tr.zdot[d].transpose();
    zdotbar[d] = Wo.transpose() * out_dot_adj[d];
  }

  Eigen::MatrixXd hbar = Eigen::MatrixXd::Zero(sh.hidden, P);
  std::vector<Eigen::MatrixXd> hdotbar(D, Eigen::MatrixXd::Zero(sh.hidden, P));

  for (int m = tr.depth - 1; m >= 0; --m) {
    const auto mi = static_cast<std::size_t>(m);
    const double w = tr.routing[mi];
    const double om = model.omega(m);
    if (w != 0.0) {
      hbar += w * zbar;
      for (std::size_t d = 0; d < D; ++d) hdotbar[d] += w * zdotbar[d];
    }
    const auto& S = tr.s[mi];
    const auto& C = tr.c[mi];
    Eigen::ArrayXXd cbar = Eigen::ArrayXXd::Zero(sh.hidden, P);
    std::vector<Eigen::MatrixXd> adotbar(D);
    for (std::size_t d = 0; d < D; ++d) {
      adotbar[d] = (om * C.array() * hdotbar[d].array()).matrix();
      cbar += om * tr.adot[mi][d].array() * hdotbar[d].array();
    }
    const Eigen::MatrixXd abar = (om * (C.array() * hbar.array() - S.array() * cbar)).matrix();

    const auto W = weight(model, m);
    auto gW = weight_grad(model, m);
    if (m == 0) {
      gW.noalias() += abar * tr.input.transpose();
      for (std::size_t d = 0; d < D; ++d) gW.noalias() += adotbar[d].rowwise().sum() * tr.dirs[d].transpose();
    } else {
      gW.noalias() += abar * tr.s[mi - 1].transpose();
      const double omp = model.omega(m - 1);
      for (std::size_t d = 0; d < D; ++d) {
        const Eigen::MatrixXd hdot_prev = (omp * tr.c[mi - 1].array() * tr.adot[mi - 1][d].array()).matrix();
        gW.noalias() += adotbar[d] * hdot_prev.transpose();
      }
    }
    bias_grad(model, m) += abar.rowwise().sum();

    if (m > 0) {
      hbar = W.transpose() * abar;
      for (std::size_t d = 0; d < D; ++d) hdotbar[d] = W.transpose() * adotbar[d];
    } else if (input_adj != nullptr) {
      *input_adj = W.transpose() * abar;
    }
  }
  if (tr.depth == 0 && input_adj != nullptr) input_adj->setZero(sh.in_dim, P);
}

namespace {

Eigen::MatrixXd column(std::span<const double> x, int dim) {
  if (static_cast<int>(x.size()) != dim) throw ArgumentError("field query: wrong input dimension");
  Eigen::MatrixXd in(dim, 1);
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(x[static_cast<std::size_t>(i)])) throw ArgumentError("field query: non-finite input");
    in(i, 0) = x[static_cast<std::size_t>(i)];
  }
  return in;
}

}  // namespace

RadianceOut eval_radiance(const GrowingMlp& model, std::span<const double> x, bool grown) {
  if (model.kind() == FieldKind::Velocity) throw ArgumentError("eval_radiance on a velocity model");
  MlpTrace tr;
  forward(model, column(x, model.shape().in_dim), {}, grown, tr);
  RadianceOut r;
  for (int i = 0; i < 3; ++i) r.color[static_cast<std::size_t>(i)] = ad::logistic(tr.out(i, 0));
  r.sigma = ad::softplus(tr.out(3, 0));
  return r;
}

VelocityOut eval_velocity(const GrowingMlp& model, std::span<const double> x, bool grown) {
  if (model.kind() != FieldKind::Velocity) throw ArgumentError("eval_velocity on a radiance model");
  MlpTrace tr;
  forward(model, column(x, model.shape().in_dim), {}, grown, tr);
  return VelocityOut{{tr.out(0, 0), tr.out(1, 0), tr.out(2, 0)}};
}

TapeMlp::TapeMlp(ad::Tape& tape, GrowingMlp& model) : tape_(&tape), model_(&model) {
  params_.reserve(model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i) params_.push_back(tape.param(model.params(), i));
}

std::vector<ad::Dual> TapeMlp::eval(std::span<const ad::Dual> x, bool grown) const {
  const auto& sh = model_->shape();
  const auto& p = model_->params();
  if (static_cast<int>(x.size()) != sh.in_dim) throw ArgumentError("TapeMlp: wrong input dimension");
  const auto routing = model_->routing(grown);
  auto pv = [&](std::size_t idx) { return ad::Dual{params_[idx], tape_->zero()}; };

  std::vector<ad::Dual> prev(x.begin(), x.end());
  std::vector<ad::Dual> z(static_cast<std::size_t>(sh.hidden), ad::make_constant(*tape_, 0.0));
  for (int m = 0; m < sh.layers; ++m) {
    bool needed = false;
    for (int k = m; k < sh.layers; ++k) needed = needed || routing[static_cast<std::size_t>(k)] > 0.0;
    if (!needed) break;
    const auto& wb = p.block(m, ad::BlockKind::Matrix);
    const auto& bb = p.block(m, ad::BlockKind::Bias);
    std::vector<ad::Dual> h(static_cast<std::size_t>(sh.hidden));
    for (std::size_t r = 0; r < wb.rows; ++r) {
      ad::Dual acc = pv(bb.offset + r);
      for (std::size_t c = 0; c < wb.cols; ++c) acc = acc + pv(wb.offset + r * wb.cols + c) * prev[c];
      h[r] = ad::sin(acc * model_->omega(m));
    }
    const double w = routing[static_cast<std::size_t>(m)];
    if (w != 0.0) {
      for (std::size_t r = 0; r < h.size(); ++r) z[r] = z[r] + h[r] * w;
    }
    prev = std::move(h);
  }
  const auto& wo = p.block(sh.layers, ad::BlockKind::Matrix);
  const auto& bo = p.block(sh.layers, ad::BlockKind::Bias);
  std::vector<ad::Dual> out(static_cast<std::size_t>(sh.out_dim));
  for (std::size_t r = 0; r < wo.rows; ++r) {
    ad::Dual acc = pv(bo.offset + r);
    for (std::size_t c = 0; c < wo.cols; ++c) acc = acc + pv(wo.offset + r * wo.cols + c) * z[c];
    out[r] = acc;
  }
  return out;
}

}  // namespace pinf::fields

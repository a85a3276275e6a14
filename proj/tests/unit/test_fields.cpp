#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pinf/common.hpp"
#include "pinf/fields/growth.hpp"
#include "pinf/fields/mlp.hpp"

using namespace pinf;
using namespace pinf::fields;

TEST_CASE("growth weights: endpoint vectors") {
  CHECK(growth_weights(0, 100, 5) == std::vector<double>{0, 1, 0, 0, 0});
  CHECK(growth_weights(50, 100, 5) == std::vector<double>{0, 0, 0.5, 0.5, 0});
  CHECK(growth_weights(100, 100, 5) == std::vector<double>{0, 0, 0, 0, 1});
  CHECK(growth_weights(250, 100, 5) == std::vector<double>{0, 0, 0, 0, 1});
}

TEST_CASE("growth weights: partition of unity and triangle shape") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> layers(2, 9), total(1, 5000);
  for (int k = 0; k < 1000; ++k) {
    const int N = layers(rng);
    const double S = total(rng);
    const double s = std::uniform_real_distribution<double>(0.0, 1.5 * S)(rng);
    const auto w = growth_weights(s, S, N);
    double sum = 0.0;
    for (double x : w) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[0] == 0.0);
    const double ma = growth_anchor(s, S, N);
    for (int m = 1; m < N; ++m) CHECK(w[static_cast<std::size_t>(m)] == doctest::Approx(std::max(0.0, 1.0 - std::abs(m - ma))));
  }
  CHECK_THROWS_AS(growth_weights(0, 0, 5), ArgumentError);
  CHECK_THROWS_AS(growth_weights(0, 10, 1), ArgumentError);
}

TEST_CASE("init_siren: reproducible and bounded") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GrowingMlp a(FieldKind::Radiance, default_shape(FieldKind::Radiance, 32, 4));
    GrowingMlp b(FieldKind::Radiance, default_shape(FieldKind::Radiance, 32, 4));
    init_siren(a, seed);
    init_siren(b, seed);
    CHECK(std::equal(a.params().values().begin(), a.params().values().end(), b.params().values().begin()));
    for (const auto& blk : a.params().blocks()) {
      const double fan_in = static_cast<double>(a.params().block(blk.layer, ad::BlockKind::Matrix).cols);
      const double bound = blk.layer == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / 30.0;
      const double* v = a.params().block_values(blk);
      for (std::size_t i = 0; i < blk.size(); ++i) CHECK(std::abs(v[i]) <= bound);
    }
  }
}

TEST_CASE("init_siren: layer-2 pre-activations have unit-scale spread") {
  GrowingMlp m(FieldKind::Radiance, default_shape(FieldKind::Radiance, 64, 5));
  init_siren(m, 11);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd in(4, 10000);
  for (Eigen::Index j = 0; j < in.cols(); ++j)
    for (int i = 0; i < 4; ++i) in(i, j) = i == 3 ? 0.5 * (u(rng) + 1.0) : u(rng);
  MlpTrace tr;
  forward(m, in, {}, false, tr);
  // omega*a_2 recovered from (sin, cos)
  const Eigen::ArrayXXd pre = tr.s[2].array().binaryExpr(tr.c[2].array(), [](double s, double c) { return std::atan2(s, c); });
  const double mean = pre.mean();
  const double sd = std::sqrt((pre - mean).square().mean());
  INFO("std " << sd);
  CHECK(sd >= 0.5);
  CHECK(sd <= 1.5);
}

TEST_CASE("eval_radiance: output ranges and determinism") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    GrowingMlp m(FieldKind::Radiance, default_shape(FieldKind::Radiance, 16, 3));
    init_siren(m, static_cast<std::uint64_t>(k));
    for (int j = 0; j < 100; ++j) {
      const std::vector<double> x{u(rng), u(rng), u(rng), 0.5 * (u(rng) + 1)};
      const auto r = eval_radiance(m, x, false);
      CHECK(r.sigma > 0.0);
      for (double c : r.color) {
        CHECK(c > 0.0);
        CHECK(c < 1.0);
      }
      const auto r2 = eval_radiance(m, x, false);
      CHECK(r2.sigma == r.sigma);
      CHECK(r2.color == r.color);
    }
  }
  GrowingMlp m(FieldKind::Radiance, default_shape(FieldKind::Radiance, 8, 2));
  const std::vector<double> bad{0.0, NAN, 0.0, 0.0};
  CHECK_THROWS_AS(eval_radiance(m, bad, false), ArgumentError);
}

TEST_CASE("eval_velocity: zero head weights return the head bias") {
  GrowingMlp m(FieldKind::Velocity, default_shape(FieldKind::Velocity, 8, 3));
  init_siren(m, 1);
  auto& p = m.params();
  const auto& wb = p.block(3, ad::BlockKind::Matrix);
  std::fill_n(p.block_values(wb), wb.size(), 0.0);
  const auto& bb = p.block(3, ad::BlockKind::Bias);
  p.block_values(bb)[0] = 0.25;
  p.block_values(bb)[1] = -1.5;
  p.block_values(bb)[2] = 2.0;
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const auto v = eval_velocity(m, x, false);
  CHECK(v.u == std::array<double, 3>{0.25, -1.5, 2.0});
}

TEST_CASE("batched kernels agree with the scalar tape route") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const bool velocity = trial % 2 == 1;
    const auto kind = velocity ? FieldKind::Velocity : FieldKind::Radiance;
    GrowingMlp m(kind, default_shape(kind, 8, 4));
    init_siren(m, static_cast<std::uint64_t>(100 + trial));
    m.set_growth(30.0 * trial, 100.0, true);
    const bool grown = trial >= 2;

    const int P = 3;
    Eigen::MatrixXd in(4, P);
    for (int j = 0; j < P; ++j)
      for (int i = 0; i < 4; ++i) in(i, j) = u(rng);
    std::vector<Eigen::VectorXd> dirs{axis(4, 0), axis(4, 3)};
    MlpTrace tr;
    forward(m, in, dirs, grown, tr);

    // Random linear functional of outputs and tangents as the loss.
    const int O = m.shape().out_dim;
    Eigen::MatrixXd oadj = Eigen::MatrixXd::Random(O, P);
    std::vector<Eigen::MatrixXd> dadj{Eigen::MatrixXd::Random(O, P), Eigen::MatrixXd::Random(O, P)};
    m.params().zero_grad();
    Eigen::MatrixXd inadj;
    backward(m, tr, oadj, dadj, &inadj);
    const std::vector<double> fused(m.params().grad().begin(), m.params().grad().end());

    m.params().zero_grad();
    ad::Tape t;
    TapeMlp tm(t, m);
    ad::Var loss = t.zero();
    for (int j = 0; j < P; ++j) {
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        std::vector<ad::Dual> x;
        for (int i = 0; i < 4; ++i) {
          ad::Var xi = t.input(in(i, j));
          x.push_back({xi, t.constant(dirs[d](i))});
        }
        const auto out = tm.eval(x, grown);
        for (int o = 0; o < O; ++o) {
          CHECK(out[static_cast<std::size_t>(o)].v.value() == doctest::Approx(tr.out(o, j)).epsilon(1e-12));
          CHECK(out[static_cast<std::size_t>(o)].d.value() ==
                doctest::Approx(tr.out_dot[d](o, j)).epsilon(1e-12));
          loss = loss + out[static_cast<std::size_t>(o)].d * dadj[d](o, j);
          if (d == 0) loss = loss + out[static_cast<std::size_t>(o)].v * oadj(o, j);
        }
      }
    }
    t.backward(loss);
    for (std::size_t i = 0; i < fused.size(); ++i) {
      CHECK(fused[i] == doctest::Approx(m.params().grad()[i]).epsilon(1e-10).scale(1.0));
    }
    // The fused input adjoint covers the primal path only; check it against a
    // tape built without tangent seeds.
    Eigen::MatrixXd inadj_primal;
    m.params().zero_grad();
    backward(m, tr, oadj, {}, &inadj_primal);
    ad::Tape t2;
    TapeMlp tm2(t2, m);
    ad::Var l2 = t2.zero();
    std::vector<ad::Var> xl;
    for (int j = 0; j < P; ++j) {
      std::vector<ad::Dual> x;
      for (int i = 0; i < 4; ++i) {
        xl.push_back(t2.input(in(i, j)));
        x.push_back({xl.back(), t2.zero()});
      }
      const auto out = tm2.eval(x, grown);
      for (int o = 0; o < O; ++o) l2 = l2 + out[static_cast<std::size_t>(o)].v * oadj(o, j);
    }
    t2.backward(l2);
    for (int j = 0; j < P; ++j)
      for (int i = 0; i < 4; ++i)
        CHECK(inadj_primal(i, j) ==
              doctest::Approx(t2.adjoint(xl[static_cast<std::size_t>(4 * j + i)])).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("input derivatives match finite differences") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GrowingMlp vis(FieldKind::Radiance, default_shape(FieldKind::Radiance, 32, 4));
  GrowingMlp hid(FieldKind::Velocity, default_shape(FieldKind::Velocity, 32, 4));
  init_siren(vis, 3);
  init_siren(hid, 4);
  std::vector<Eigen::VectorXd> dirs{axis(4, 0), axis(4, 1), axis(4, 2), axis(4, 3)};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd x(4, 1);
    x << u(rng), u(rng), u(rng), 0.5 * (u(rng) + 1.0);
    for (GrowingMlp* m : {&vis, &hid}) {
      MlpTrace tr;
      forward(*m, x, dirs, false, tr);
      for (int d = 0; d < 4; ++d) {
        const double h = 1e-6;
        Eigen::MatrixXd xp = x, xm = x;
        xp(d, 0) += h;
        xm(d, 0) -= h;
        MlpTrace tp, tmn;
        forward(*m, xp, {}, false, tp);
        forward(*m, xm, {}, false, tmn);
        for (int o = 0; o < m->shape().out_dim; ++o) {
          const double fd = (tp.out(o, 0) - tmn.out(o, 0)) / (2 * h);
          const double an = tr.out_dot[static_cast<std::size_t>(d)](o, 0);
          const double scale = std::max(std::abs(fd), 1e-2);
          worst = std::max(worst, std::abs(fd - an) / scale);
        }
      }
    }
  }
  INFO("worst " << worst);
  CHECK(worst <= 1e-4);
}

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "pinf/fields/mlp.hpp"
#include "pinf/physics/d2v.hpp"
#include "pinf/physics/grid_ops.hpp"
#include "pinf/physics/network_field.hpp"
#include "pinf/physics/residuals.hpp"

using namespace pinf;
using namespace pinf::physics;
using ad::Dual;
using scene::GridField;

namespace {

ad::DualFunction pair_fn(std::function<std::vector<Dual>(std::span<const Dual>)> f) {
  return [f](ad::Tape&, std::span<const Dual> x) { return f(x); };
}

// sigma = x - t transported by u = (1, 0, 0)
const ad::DualFunction ramp_sigma = pair_fn([](auto x) { return std::vector<Dual>{x[0] - x[3]}; });
const ad::DualFunction unit_x = pair_fn([](auto x) {
  return std::vector<Dual>{x[0] * 0.0 + 1.0, x[0] * 0.0, x[0] * 0.0};
});

const Vec3 kVel{0.3, -0.2, 0.5};
const ad::DualFunction moving_blob = pair_fn([](auto x) {
  Dual r2 = x[0] * 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const Dual d = x[a] - x[3] * kVel[a] - 0.1;
    r2 = r2 + d * d;
  }
  return std::vector<Dual>{ad::exp(r2 * -2.0)};
});
const ad::DualFunction constant_vel = pair_fn([](auto x) {
  return std::vector<Dual>{x[0] * 0.0 + kVel[0], x[0] * 0.0 + kVel[1], x[0] * 0.0 + kVel[2]};
});

constexpr double kOmega = 0.7;
// u = omega (y, -x, 0) moves particles by R(-omega t); the blob follows.
const ad::DualFunction rotating_blob = pair_fn([](auto x) {
  const Dual c = ad::cos(x[3] * kOmega), s = ad::sin(x[3] * kOmega);
  const Dual px = x[0] * c - x[1] * s - 0.4;
  const Dual py = x[0] * s + x[1] * c - 0.1;
  const Dual pz = x[2] + 0.2;
  return std::vector<Dual>{ad::exp((px * px + py * py + pz * pz) * -3.0)};
});
const ad::DualFunction rotation = pair_fn([](auto x) {
  return std::vector<Dual>{x[1] * kOmega, x[0] * -kOmega, x[2] * 0.0};
});

struct TaylorGreen {
  double A = 0.8, k = 1.7, decay = 0.05;
  Vec3 u(const Vec3& p, double t) const {
    const double e = A * std::exp(-decay * t);
    return {e * std::sin(k * p[0]) * std::cos(k * p[1]) * std::cos(k * p[2]),
            -e * std::cos(k * p[0]) * std::sin(k * p[1]) * std::cos(k * p[2]), 0.0};
  }
  // Hand-derived partials: J[c][a] = du_c/dx_a, a = 3 is time.
  std::array<std::array<double, 4>, 3> jac(const Vec3& p, double t) const {
    const double e = A * std::exp(-decay * t);
    const double sx = std::sin(k * p[0]), cx = std::cos(k * p[0]);
    const double sy = std::sin(k * p[1]), cy = std::cos(k * p[1]);
    const double sz = std::sin(k * p[2]), cz = std::cos(k * p[2]);
    const Vec3 v = u(p, t);
    return {{{e * k * cx * cy * cz, -e * k * sx * sy * cz, -e * k * sx * cy * sz, -decay * v[0]},
             {e * k * sx * sy * cz, -e * k * cx * cy * cz, e * k * cx * sy * sz, -decay * v[1]},
             {0.0, 0.0, 0.0, 0.0}}};
  }
  ad::DualFunction fn() const {
    return pair_fn([tg = *this](auto x) {
      const Dual e = ad::exp(x[3] * -tg.decay) * tg.A;
      const Dual cz = ad::cos(x[2] * tg.k);
      return std::vector<Dual>{e * ad::sin(x[0] * tg.k) * ad::cos(x[1] * tg.k) * cz,
                               -(e * ad::cos(x[0] * tg.k) * ad::sin(x[1] * tg.k) * cz), x[0] * 0.0};
    });
  }
};

GridField sample_grid(int n, const std::function<Vec3(const Vec3&)>& f) {
  GridField g(n, n, n, 3, Aabb{});
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 v = f(g.center(i, j, k));
        for (int c = 0; c < 3; ++c) g.at(i, j, k, c) = v[static_cast<std::size_t>(c)];
      }
  return g;
}

Vec3 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("transport residual on exactly transported pairs") {
  ad::Tape tape;
  CHECK(transport_residual(tape, ramp_sigma, 0, unit_x, {0.3, 0.1, -0.2}, 2.5).value() == 0.0);
  const auto zero_u = pair_fn([](auto x) { return std::vector<Dual>{x[0] * 0.0, x[0] * 0.0, x[0] * 0.0}; });
  const auto time_sigma = pair_fn([](auto x) { return std::vector<Dual>{x[3] * 1.0}; });
  CHECK(transport_residual(tape, time_sigma, 0, zero_u, {0.5, 0.5, 0.5}, 1.0).value() == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  double worst_ramp = 0, worst_move = 0, worst_rot = 0;
  for (int n = 0; n < 100; ++n) {
    tape.clear();
    const Vec3 x = random_point(rng);
    const double t = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
    worst_ramp = std::max(worst_ramp, transport_residual(tape, ramp_sigma, 0, unit_x, x, t).value());
    worst_move = std::max(worst_move, transport_residual(tape, moving_blob, 0, constant_vel, x, t).value());
    worst_rot = std::max(worst_rot, transport_residual(tape, rotating_blob, 0, rotation, x, t).value());
  }
  CHECK(worst_ramp <= 1e-10);
  CHECK(worst_move <= 1e-10);
  CHECK(worst_rot <= 1e-10);

  // A mismatched velocity is penalised.
  tape.clear();
  CHECK(transport_residual(tape, moving_blob, 0, unit_x, {0.5, 0.0, 0.1}, 0.0).value() > 1e-3);
}

TEST_CASE("nse residual on analytic fields") {
  ad::Tape tape;
  std::mt19937_64 rng(5);
  for (int n = 0; n < 50; ++n) {
    tape.clear();
    const Vec3 x = random_point(rng);
    const NseParts p = nse_residual(tape, rotation, x, 0.3, 1.0);
    const double expect = std::pow(kOmega, 4) * (x[0] * x[0] + x[1] * x[1]);
    CHECK(std::abs(p.momentum.value() - expect) <= 1e-8 * expect);
    CHECK(std::abs(p.divergence_sq.value()) <= 1e-10);
  }

  const auto expand = pair_fn([](auto x) { return std::vector<Dual>{x[0] * 1.0, x[1] * 1.0, x[2] * 1.0}; });
  const Vec3 x{0.2, -0.7, 1.1};
  const NseParts p = nse_residual(tape, expand, x, 0.0, 0.25);
  CHECK(p.divergence_sq.value() == doctest::Approx(9.0));
  CHECK(p.momentum.value() == doctest::Approx(dot(x, x)));
  CHECK(p.total.value() == doctest::Approx(dot(x, x) + 9.0 * 0.25));

  TaylorGreen tg;
  const auto tgf = tg.fn();
  for (int n = 0; n < 50; ++n) {
    tape.clear();
    const Vec3 q = random_point(rng);
    const double t = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    const auto J = tg.jac(q, t);
    const Vec3 u = tg.u(q, t);
    double mom = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double m = J[c][3] + u[0] * J[c][0] + u[1] * J[c][1] + u[2] * J[c][2];
      mom += m * m;
    }
    const double div = J[0][0] + J[1][1] + J[2][2];
    const NseParts r = nse_residual(tape, tgf, q, t, 1.0);
    CHECK(std::abs(r.momentum.value() - mom) <= 1e-6 * std::max(mom, 1e-12));
    CHECK(std::abs(r.divergence_sq.value()) <= 1e-10);
    CHECK(std::abs(div) <= 1e-12);
  }
}

TEST_CASE("curl and divergence examples") {
  ad::Tape tape;
  const auto swirl = pair_fn([](auto x) { return std::vector<Dual>{x[1] * 1.0, x[0] * -1.0, x[2] * 0.0}; });
  const Vec3 c = curl(tape, swirl, {0.3, 0.4, 0.5}, 0.0);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == doctest::Approx(-2.0));
  CHECK(divergence(tape, swirl, {0.3, 0.4, 0.5}, 0.0) == 0.0);
  const auto grad_phi = pair_fn([](auto x) { return std::vector<Dual>{x[0] * 2.0, x[1] * 2.0, x[2] * 0.0}; });
  const Vec3 g = curl(tape, grad_phi, {-0.3, 0.9, 0.1}, 0.0);
  CHECK(norm(g) == 0.0);
}

TEST_CASE("grid curl converges at second order") {
  TaylorGreen tg;
  auto analytic_curl = [&](const Vec3& p) {
    const auto J = tg.jac(p, 0.0);
    return Vec3{J[2][1] - J[1][2], J[0][2] - J[2][0], J[1][0] - J[0][1]};
  };
  auto error_at = [&](int n) {
    const GridField u = sample_grid(n, [&](const Vec3& p) { return tg.u(p, 0.0); });
    const GridField c = grid_curl(u);
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Vec3 e = analytic_curl(c.center(i, j, k));
          for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(c.at(i, j, k, a) - e[static_cast<std::size_t>(a)]));
        }
    return worst;
  };
  const double e16 = error_at(16), e32 = error_at(32);
  CHECK(e32 < e16);
  CHECK(e16 / e32 > 3.0);

  const GridField rot = sample_grid(8, [](const Vec3& p) { return Vec3{p[1], -p[0], 0.0}; });
  const GridField c = grid_curl(rot);
  for (std::size_t i = 0; i < c.cells(); ++i) CHECK(c.data[i * 3 + 2] == doctest::Approx(-2.0));
  CHECK(mean_abs(grid_divergence(rot)) <= 1e-12);

  CHECK_THROWS_AS(grid_curl(GridField(2, 8, 8, 3, Aabb{})), ArgumentError);
  CHECK_THROWS_AS(grid_divergence(GridField(8, 8, 2, 3, Aabb{})), ArgumentError);
  CHECK_THROWS_AS(grid_curl(GridField(8, 8, 8, 1, Aabb{})), ArgumentError);
}

TEST_CASE("d2v loss") {
  const int n = 8;
  const GridField rho(n, n, n, 1, Aabb{}, 0.5);
  const GridField rot = sample_grid(n, [](const Vec3& p) { return Vec3{p[1], -p[0], 0.0}; });
  const GridField rot_curl = grid_curl(rot);

  SUBCASE("self oracle gives zero") {
    TaylorGreen tg;
    const GridField u = sample_grid(n, [&](const Vec3& p) { return tg.u(p, 0.0); });
    GroundTruthOracle self({u});
    const D2vResult r = d2v_loss(grid_curl(u), rho, self, 0.0);
    CHECK(r.loss == 0.0);
    for (double g : r.grad) CHECK(std::abs(g) < 1e-12);
  }
  SUBCASE("curl-free fields give zero") {
    const GridField grad = sample_grid(n, [](const Vec3& p) { return Vec3{2 * p[0], 2 * p[1], 0.0}; });
    GroundTruthOracle o({grad});
    CHECK(d2v_loss(grid_curl(grad), rho, o, 0.0).loss == 0.0);
  }
  SUBCASE("doubled rotation follows the literal normalisation") {
    GridField twice = rot;
    for (double& v : twice.data) v *= 2.0;
    GroundTruthOracle o({twice});
    const double N = static_cast<double>(rot.cells());
    // curl is (0,0,-2) everywhere: D_hid = 4 + eps, D_ref = 16 + eps.
    const double eps = 1e-8;
    const double per_cell = 4.0 * std::pow(2.0 / (16.0 + eps) - 1.0 / (4.0 + eps), 2);
    CHECK(d2v_loss(rot_curl, rho, o, 0.0).loss == doctest::Approx(N * per_cell).epsilon(1e-12));
    CHECK(d2v_loss(rot_curl, rho, o, 0.0).loss == doctest::Approx(N / 16.0).epsilon(1e-8));
    D2vOptions rms;
    rms.rms_normalize = true;
    CHECK(d2v_loss(rot_curl, rho, o, 0.0, rms).loss <= 1e-12);
  }
  SUBCASE("gradient matches a tape evaluation") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (bool rms : {false, true}) {
      GridField h(4, 4, 4, 3, Aabb{}), a(4, 4, 4, 3, Aabb{});
      for (double& v : h.data) v = nd(rng);
      for (double& v : a.data) v = nd(rng);
      D2vOptions opt;
      opt.rms_normalize = rms;
      const D2vResult r = d2v_from_curls(h, a, opt);

      ad::Tape tape;
      std::vector<ad::Var> c;
      for (double v : h.data) c.push_back(tape.input(v));
      const double N = static_cast<double>(h.cells());
      ad::Var sc = tape.zero();
      for (auto v : c) sc = sc + v * v;
      double sa = 0.0;
      for (double v : a.data) sa += v * v;
      ad::Var Dh = sc / N + opt.eps;
      double Da = sa / N + opt.eps;
      if (rms) {
        Dh = ad::sqrt(Dh);
        Da = std::sqrt(Da);
      }
      ad::Var loss = tape.zero();
      for (std::size_t i = 0; i < c.size(); ++i) {
        const ad::Var d = a.data[i] / Da - c[i] / Dh;
        loss = loss + d * d;
      }
      tape.backward(loss);
      CHECK(r.loss == doctest::Approx(loss.value()).epsilon(1e-12));
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(r.grad[i] == doctest::Approx(tape.adjoint(c[i])).epsilon(1e-10));
    }
  }
  SUBCASE("external oracle") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "pinf_d2v_test";
    fs::create_directories(dir);
    ExternalOracle passthrough("cp {in} {out}", dir.string());
    CHECK_THROWS_AS(d2v_loss(rot_curl, rho, passthrough, 0.0), ContractError);

    const std::string canned = (dir / "canned.nfg").string();
    scene::write_grid(canned, rot);
    ExternalOracle fixed("cp " + canned + " {out}", dir.string());
    const D2vResult r = d2v_loss(rot_curl, rho, fixed, 0.0);
    CHECK(r.loss <= 1e-10);
    ExternalOracle broken("false", dir.string());
    CHECK_THROWS_AS(d2v_loss(rot_curl, rho, broken, 0.0), IoError);
    fs::remove_all(dir);
  }
}

TEST_CASE("overlay term") {
  CHECK(overlay_term(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(overlay_term(1.0, 0.0) == 0.0);
  CHECK(overlay_term(0.0, 0.0) == 0.0);
  CHECK(overlay_term(1.0, 3.0) == doctest::Approx(0.3));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int n = 0; n < 1000; ++n) {
    const double s = u(rng), f = u(rng);
    const double v = overlay_term(s, f);
    CHECK(v >= 0.0);
    CHECK(v <= 0.5);
    CHECK(v == overlay_term(f, s));
    const double f2 = std::min(s, f + 0.01 * s);
    if (f <= s) CHECK(overlay_term(s, f2) >= v);
  }
}

TEST_CASE("network fields") {
  render::Domain dom{Aabb{{-2, -1, 0}, {2, 1, 3}}, 7};
  fields::GrowingMlp vis(fields::FieldKind::Radiance, fields::default_shape(fields::FieldKind::Radiance, 8, 2));
  fields::GrowingMlp hid(fields::FieldKind::Velocity, fields::default_shape(fields::FieldKind::Velocity, 8, 2));
  fields::init_siren(vis, 1);
  fields::init_siren(hid, 2);

  SUBCASE("transport residual sends no gradient to the density model") {
    ad::Tape tape;
    NetworkField fv(tape, vis, dom, false, OutputMap::Radiance);
    NetworkField fh(tape, hid, dom, false, OutputMap::Raw);
    vis.params().zero_grad();
    hid.params().zero_grad();
    ad::Var loss = tape.zero();
    std::mt19937_64 rng(4);
    for (int n = 0; n < 8; ++n) {
      const Vec3 x = dom.from_net(random_point(rng));
      loss = loss + transport_residual(tape, fv.function(), 3, fh.function(), x, 0.5 * n);
    }
    tape.backward(loss);
    for (double g : vis.params().grad()) CHECK(g == 0.0);
    double hsum = 0.0;
    for (double g : hid.params().grad()) hsum += std::abs(g);
    CHECK(hsum > 0.0);
  }
  SUBCASE("input derivatives are in scene units") {
    const Vec3 x{0.3, -0.2, 1.4};
    const double frame = 2.5;
    auto value_at = [&](const std::array<double, 4>& p) {
      ad::Tape t;
      NetworkField f(t, vis, dom, false, OutputMap::Radiance);
      std::vector<Dual> in;
      for (double v : p) in.push_back(ad::make_constant(t, v));
      auto out = f.function()(t, in);
      return out[3].v.value();
    };
    for (int a = 0; a < 4; ++a) {
      ad::Tape t;
      NetworkField f(t, vis, dom, false, OutputMap::Radiance);
      const std::array<double, 4> p{x[0], x[1], x[2], frame};
      std::array<double, 4> dir{};
      dir[static_cast<std::size_t>(a)] = 1.0;
      const auto out = ad::input_derivative(t, f.function(), p, dir);
      const double h = 1e-5;
      auto pp = p, pm = p;
      pp[static_cast<std::size_t>(a)] += h;
      pm[static_cast<std::size_t>(a)] -= h;
      const double fd = (value_at(pp) - value_at(pm)) / (2 * h);
      CHECK(out[3].d.value() == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

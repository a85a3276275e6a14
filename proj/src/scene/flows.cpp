#include "pinf/scene/flows.hpp"

#include <algorithm>
#include <cmath>

namespace pinf::scene {

FlowKind parse_flow_kind(const std::string& name) {
  if (name == "rigid_rotation") return FlowKind::RigidRotation;
  if (name == "taylor_green") return FlowKind::TaylorGreen;
  if (name == "uniform_translation") return FlowKind::UniformTranslation;
  if (name == "buoyant_plume_sim") return FlowKind::BuoyantPlumeSim;
  throw ArgumentError("unknown flow kind: " + name);
}

Vec3 analytic_flow(FlowKind kind, const FlowParams& p, const Vec3& x, double t) {
  switch (kind) {
    case FlowKind::RigidRotation:
      return cross(x - p.center, normalized(p.axis)) * p.omega;
    case FlowKind::TaylorGreen: {
      const double k = p.wavenumber;
      const double a = p.amplitude * std::exp(-p.decay * t);
      return {a * std::sin(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]),
              -a * std::cos(k * x[0]) * std::sin(k * x[1]) * std::cos(k * x[2]), 0.0};
    }
    case FlowKind::UniformTranslation:
      return p.velocity;
    case FlowKind::BuoyantPlumeSim: {
      if (!p.sequence || p.sequence->empty()) throw ArgumentError("buoyant_plume_sim needs a simulated sequence");
      const auto& seq = *p.sequence;
      const double f = std::clamp(t, 0.0, static_cast<double>(seq.size() - 1));
      const auto f0 = static_cast<std::size_t>(std::floor(f));
      const std::size_t f1 = std::min(f0 + 1, seq.size() - 1);
      const double w = f - static_cast<double>(f0);
      return seq[f0].sample_vec(x) * (1.0 - w) + seq[f1].sample_vec(x) * w;
    }
  }
  throw ArgumentError("unknown flow kind");
}

GridField flow_to_grid(FlowKind kind, const FlowParams& p, int n, const Aabb& box, double t) {
  GridField g(n, n, n, 3, box);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 u = analytic_flow(kind, p, g.center(i, j, k), t);
        for (int c = 0; c < 3; ++c) g.at(i, j, k, c) = u[static_cast<std::size_t>(c)];
      }
  return g;
}

namespace {

// Component array on a staggered grid: dims and the offset of sample 0 in
// cell units relative to the box corner.
struct Staggered {
  int dx, dy, dz;
  Vec3 off;
  std::vector<double> v;

  Staggered(int x, int y, int z, Vec3 o) : dx(x), dy(y), dz(z), off(o), v(static_cast<std::size_t>(x) * y * z, 0.0) {}
  double& at(int i, int j, int k) { return v[(static_cast<std::size_t>(k) * dy + j) * dx + i]; }
  double at(int i, int j, int k) const { return v[(static_cast<std::size_t>(k) * dy + j) * dx + i]; }

  double sample(const Vec3& x, const Aabb& box, const Vec3& h) const {
    double g[3];
    int i0[3];
    const int d[3] = {dx, dy, dz};
    for (std::size_t a = 0; a < 3; ++a) {
      g[a] = std::clamp((x[a] - box.lo[a]) / h[a] - off[a], 0.0, static_cast<double>(d[a] - 1));
      i0[a] = std::min(static_cast<int>(std::floor(g[a])), d[a] - 2);
      g[a] -= i0[a];
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
      const double w = (ox ? g[0] : 1 - g[0]) * (oy ? g[1] : 1 - g[1]) * (oz ? g[2] : 1 - g[2]);
      acc += w * at(i0[0] + ox, i0[1] + oy, i0[2] + oz);
    }
    return acc;
  }
};

struct Mac {
  Staggered u, v, w;
  Mac(int n) : u(n + 1, n, n, {0.0, 0.5, 0.5}), v(n, n + 1, n, {0.5, 0.0, 0.5}), w(n, n, n + 1, {0.5, 0.5, 0.0}) {}
  Vec3 sample(const Vec3& x, const Aabb& box, const Vec3& h) const {
    return {u.sample(x, box, h), v.sample(x, box, h), w.sample(x, box, h)};
  }
};

Vec3 face_pos(const Staggered& s, int i, int j, int k, const Aabb& box, const Vec3& h) {
  return {box.lo[0] + (i + s.off[0]) * h[0], box.lo[1] + (j + s.off[1]) * h[1], box.lo[2] + (k + s.off[2]) * h[2]};
}

void advect_component(Staggered& dst, const Staggered& src, const Mac& vel, const Aabb& box, const Vec3& h,
                      double dt) {
  for (int k = 0; k < dst.dz; ++k)
    for (int j = 0; j < dst.dy; ++j)
      for (int i = 0; i < dst.dx; ++i) {
        const Vec3 x = face_pos(dst, i, j, k, box, h);
        dst.at(i, j, k) = src.sample(x - vel.sample(x, box, h) * dt, box, h);
      }
}

void close_walls(Mac& m, int n) {
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      m.u.at(0, j, k) = m.u.at(n, j, k) = 0.0;
      m.v.at(j, 0, k) = m.v.at(j, n, k) = 0.0;
      m.w.at(j, k, 0) = m.w.at(j, k, n) = 0.0;
    }
}

void project(Mac& m, std::vector<double>& p, int n, const Vec3& h, int iters) {
  auto id = [n](int i, int j, int k) { return (static_cast<std::size_t>(k) * n + j) * n + i; };
  std::vector<double> div(p.size()), next(p.size());
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        div[id(i, j, k)] = (m.u.at(i + 1, j, k) - m.u.at(i, j, k)) / h[0] +
                           (m.v.at(i, j + 1, k) - m.v.at(i, j, k)) / h[1] +
                           (m.w.at(i, j, k + 1) - m.w.at(i, j, k)) / h[2];
  const double ix = 1.0 / (h[0] * h[0]), iy = 1.0 / (h[1] * h[1]), iz = 1.0 / (h[2] * h[2]);
  for (int it = 0; it < iters; ++it) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          // Closed walls: missing neighbours drop out of the stencil.
          double acc = 0.0, diag = 0.0;
          if (i > 0) acc += ix * p[id(i - 1, j, k)], diag += ix;
          if (i < n - 1) acc += ix * p[id(i + 1, j, k)], diag += ix;
          if (j > 0) acc += iy * p[id(i, j - 1, k)], diag += iy;
          if (j < n - 1) acc += iy * p[id(i, j + 1, k)], diag += iy;
          if (k > 0) acc += iz * p[id(i, j, k - 1)], diag += iz;
          if (k < n - 1) acc += iz * p[id(i, j, k + 1)], diag += iz;
          next[id(i, j, k)] = (acc - div[id(i, j, k)]) / diag;
        }
    p.swap(next);
  }
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 1; i < n; ++i) m.u.at(i, j, k) -= (p[id(i, j, k)] - p[id(i - 1, j, k)]) / h[0];
  for (int k = 0; k < n; ++k)
    for (int j = 1; j < n; ++j)
      for (int i = 0; i < n; ++i) m.v.at(i, j, k) -= (p[id(i, j, k)] - p[id(i, j - 1, k)]) / h[1];
  for (int k = 1; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m.w.at(i, j, k) -= (p[id(i, j, k)] - p[id(i, j, k - 1)]) / h[2];
}

GridField cell_velocity(const Mac& m, int n, const Aabb& box) {
  GridField g(n, n, n, 3, box);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        g.at(i, j, k, 0) = 0.5 * (m.u.at(i, j, k) + m.u.at(i + 1, j, k));
        g.at(i, j, k, 1) = 0.5 * (m.v.at(i, j, k) + m.v.at(i, j + 1, k));
        g.at(i, j, k, 2) = 0.5 * (m.w.at(i, j, k) + m.w.at(i, j, k + 1));
      }
  return g;
}

double smooth_ball(const Vec3& x, const Vec3& c, double r) {
  const double d = norm(x - c) / r;
  if (d >= 1.0) return 0.0;
  const double s = 1.0 - d * d;
  return s * s;
}

}  // namespace

PlumeFrames simulate_plume(const PlumeConfig& cfg) {
  const int n = cfg.n;
  if (n < 4 || n > 64) throw ArgumentError("simulate_plume: grid must be between 4^3 and 64^3");
  if (cfg.frames < 1 || cfg.substeps < 1) throw ArgumentError("simulate_plume: frames and substeps must be positive");
  const Aabb& box = cfg.box;
  GridField sigma(n, n, n, 1, box);
  const Vec3 h = sigma.spacing();
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        sigma.at(i, j, k) = cfg.blob_density * smooth_ball(sigma.center(i, j, k), cfg.blob_center, cfg.blob_radius);

  Mac vel(n);
  auto init_component = [&](Staggered& s, int axis) {
    for (int k = 0; k < s.dz; ++k)
      for (int j = 0; j < s.dy; ++j)
        for (int i = 0; i < s.dx; ++i) {
          const Vec3 x = face_pos(s, i, j, k, box, h);
          Vec3 u = cfg.initial_velocity;
          if (cfg.swirl != 0.0) {
            const Vec3 r = x - cfg.blob_center;
            u = u + Vec3{-r[2], 0.0, r[0]} * (cfg.swirl * smooth_ball(x, cfg.blob_center, 1.5 * cfg.blob_radius));
          }
          s.at(i, j, k) = u[static_cast<std::size_t>(axis)];
        }
  };
  init_component(vel.u, 0);
  init_component(vel.v, 1);
  init_component(vel.w, 2);
  close_walls(vel, n);
  std::vector<double> pressure(sigma.cells(), 0.0);
  project(vel, pressure, n, h, cfg.jacobi_iters);

  PlumeFrames out;
  out.sigma.push_back(sigma);
  out.velocity.push_back(cell_velocity(vel, n, box));
  const double dt = 1.0 / cfg.substeps;
  for (int f = 1; f < cfg.frames; ++f) {
    for (int s = 0; s < cfg.substeps; ++s) {
      Mac next = vel;
      advect_component(next.u, vel.u, vel, box, h, dt);
      advect_component(next.v, vel.v, vel, box, h, dt);
      advect_component(next.w, vel.w, vel, box, h, dt);
      for (int k = 0; k < n; ++k)
        for (int j = 1; j < n; ++j)
          for (int i = 0; i < n; ++i)
            next.v.at(i, j, k) += dt * cfg.buoyancy * 0.5 * (sigma.at(i, j - 1, k) + sigma.at(i, j, k));
      close_walls(next, n);
      project(next, pressure, n, h, cfg.jacobi_iters);

      GridField moved = sigma;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) {
            const Vec3 x = sigma.center(i, j, k);
            moved.at(i, j, k) = sigma.sample(x - next.sample(x, box, h) * dt);
            if (cfg.source) moved.at(i, j, k) += dt * cfg.source_rate * smooth_ball(x, cfg.source_center, cfg.source_radius);
          }
      sigma = std::move(moved);
      vel = std::move(next);
    }
    out.sigma.push_back(sigma);
    out.velocity.push_back(cell_velocity(vel, n, box));
  }
  return out;
}

}  // namespace pinf::scene

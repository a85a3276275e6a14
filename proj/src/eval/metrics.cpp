#include "pinf/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "json.hpp"
#include "pinf/ad/tape.hpp"
#include "pinf/physics/grid_ops.hpp"

namespace pinf::eval {

GridField sample_to_grid(const fields::GrowingMlp& model, const render::Domain& dom, int nx, int ny, int nz,
                         const Aabb& bounds, double frame, SampleOutput what) {
  const int ch = what == SampleOutput::Density ? 1 : 3;
  GridField g(nx, ny, nz, ch, bounds);
  const auto N = static_cast<Eigen::Index>(g.cells());
  const int in = model.shape().in_dim;
  const Eigen::Index chunk = 8192;
  fields::MlpTrace tr;
  for (Eigen::Index b = 0; b < N; b += chunk) {
    const Eigen::Index cnt = std::min(chunk, N - b);
    Eigen::MatrixXd X(in, cnt);
    for (Eigen::Index j = 0; j < cnt; ++j) {
      const auto cell = static_cast<int>(b + j);
      const Vec3 n = dom.to_net(g.center(cell % nx, (cell / nx) % ny, cell / (nx * ny)));
      for (int a = 0; a < 3; ++a) X(a, j) = n[static_cast<std::size_t>(a)];
      if (in == 4) X(3, j) = dom.t_norm(frame);
    }
    fields::forward(model, X, {}, model.growth_enabled(), tr);
    for (Eigen::Index j = 0; j < cnt; ++j) {
      const auto base = static_cast<std::size_t>(b + j) * static_cast<std::size_t>(ch);
      switch (what) {
        case SampleOutput::Density: g.data[base] = ad::softplus(tr.out(3, j)); break;
        case SampleOutput::Color:
          for (int c = 0; c < 3; ++c) g.data[base + static_cast<std::size_t>(c)] = ad::logistic(tr.out(c, j));
          break;
        case SampleOutput::Velocity:
          for (int c = 0; c < 3; ++c) g.data[base + static_cast<std::size_t>(c)] = tr.out(c, j);
          break;
      }
    }
  }
  return g;
}

namespace {

void check_pair(const GridField& a, const GridField& b, const GridField* mask) {
  if (!a.same_layout(b) || a.channels != b.channels) throw ArgumentError("metric: grids differ in dims, bounds or channels");
  if (mask && (mask->nx != a.nx || mask->ny != a.ny || mask->nz != a.nz || mask->channels != 1))
    throw ArgumentError("metric: mask dims do not match");
}

bool included(const GridField* mask, std::size_t cell) { return !mask || mask->data[cell] > 0.5; }

}  // namespace

double masked_sum_sq(const GridField& a, const GridField& b, const GridField* mask) {
  check_pair(a, b, mask);
  const auto ch = static_cast<std::size_t>(a.channels);
  double s = 0.0;
  for (std::size_t cell = 0; cell < a.cells(); ++cell) {
    if (!included(mask, cell)) continue;
    for (std::size_t c = 0; c < ch; ++c) {
      const double d = a.data[cell * ch + c] - b.data[cell * ch + c];
      s += d * d;
    }
  }
  return s;
}

std::size_t masked_count(const GridField& like, const GridField* mask) {
  if (!mask) return like.cells();
  std::size_t n = 0;
  for (std::size_t cell = 0; cell < like.cells(); ++cell) n += included(mask, cell) ? 1 : 0;
  return n;
}

double l2_volume(const GridField& a, const GridField& b, const GridField* mask) {
  const double s = masked_sum_sq(a, b, mask);
  const std::size_t n = masked_count(a, mask);
  return n ? s / static_cast<double>(n) : 0.0;
}

double warp_error(const GridField& s_t, const GridField& u_t, const GridField& s_next, const GridField* mask) {
  return l2_volume(scene::advect_semi_lagrangian(s_t, u_t, 1.0), s_next, mask);
}

double midwarp_error(const GridField& s_t, const GridField& u_t, const GridField& s_next, const GridField& u_next,
                     const GridField* mask) {
  return l2_volume(scene::advect_semi_lagrangian(s_next, u_next, -0.5), scene::advect_semi_lagrangian(s_t, u_t, 0.5),
                   mask);
}

double mean_abs_divergence(const GridField& u, const GridField* mask) {
  const GridField d = physics::grid_divergence(u);
  if (mask && (mask->nx != u.nx || mask->ny != u.ny || mask->nz != u.nz)) throw ArgumentError("metric: mask dims");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t cell = 0; cell < d.cells(); ++cell) {
    if (!included(mask, cell)) continue;
    s += std::abs(d.data[cell]);
    ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

double velocity_cosine(const GridField& u, const GridField& u_ref, const GridField* mask) {
  check_pair(u, u_ref, mask);
  if (u.channels != 3) throw ArgumentError("velocity_cosine: need 3-channel grids");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t cell = 0; cell < u.cells(); ++cell) {
    if (!included(mask, cell)) continue;
    ++n;
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double a = u.data[cell * 3 + c], b = u_ref.data[cell * 3 + c];
      d += a * b;
      na += a * a;
      nb += b * b;
    }
    if (na > 1e-24 && nb > 1e-24) s += d / std::sqrt(na * nb);
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

GridField threshold_mask(const GridField& density, double fraction) {
  GridField m(density.nx, density.ny, density.nz, 1, density.bounds);
  const double cut = fraction * density.max_value();
  for (std::size_t cell = 0; cell < m.cells(); ++cell)
    m.data[cell] = density.data[cell * static_cast<std::size_t>(density.channels)] > cut ? 1.0 : 0.0;
  return m;
}

MetricsReport evaluate_sequence(const std::vector<GridField>& sigma, const std::vector<GridField>& u,
                                const std::vector<GridField>& sigma_ref, const std::vector<GridField>& u_ref,
                                const std::vector<double>& timestamps, const GridField* mask) {
  const std::size_t F = sigma.size();
  if (u.size() != F || sigma_ref.size() != F || u_ref.size() != F || timestamps.size() != F)
    throw ArgumentError("evaluate_sequence: sequence lengths differ");
  // Frames are independent; evaluate them concurrently.
  std::vector<std::future<FrameMetrics>> jobs;
  for (std::size_t f = 0; f < F; ++f)
    jobs.push_back(std::async(std::launch::async, [&, f] {
      FrameMetrics m;
      m.t = timestamps[f];
      m.l2_sigma = l2_volume(sigma[f], sigma_ref[f], mask);
      m.l2_u = l2_volume(u[f], u_ref[f], mask);
      m.div = mean_abs_divergence(u[f], mask);
      if (f + 1 < F) {
        m.warp = warp_error(sigma[f], u[f], sigma[f + 1], mask);
        m.midwarp = midwarp_error(sigma[f], u[f], sigma[f + 1], u[f + 1], mask);
      }
      return m;
    }));
  MetricsReport r;
  double wsum = 0.0, msum = 0.0;
  int wn = 0;
  for (auto& j : jobs) {
    const FrameMetrics m = j.get();
    if (m.warp) {
      wsum += *m.warp;
      msum += *m.midwarp;
      ++wn;
    }
    r.means.l2_sigma += m.l2_sigma / static_cast<double>(F);
    r.means.l2_u += m.l2_u / static_cast<double>(F);
    r.means.div += m.div / static_cast<double>(F);
    r.frames.push_back(m);
  }
  if (wn > 0) {
    r.means.warp = wsum / wn;
    r.means.midwarp = msum / wn;
  }
  return r;
}

namespace {

nlohmann::json frame_json(const FrameMetrics& m, bool with_t) {
  nlohmann::json j;
  if (with_t) j["t"] = m.t;
  j["l2_sigma"] = m.l2_sigma;
  j["l2_u"] = m.l2_u;
  j["div"] = m.div;
  j["warp"] = m.warp ? nlohmann::json(*m.warp) : nlohmann::json(nullptr);
  j["midwarp"] = m.midwarp ? nlohmann::json(*m.midwarp) : nlohmann::json(nullptr);
  return j;
}

FrameMetrics frame_from(const nlohmann::json& j) {
  FrameMetrics m;
  if (j.contains("t")) m.t = j.at("t").get<double>();
  m.l2_sigma = j.at("l2_sigma").get<double>();
  m.l2_u = j.at("l2_u").get<double>();
  m.div = j.at("div").get<double>();
  if (!j.at("warp").is_null()) m.warp = j.at("warp").get<double>();
  if (!j.at("midwarp").is_null()) m.midwarp = j.at("midwarp").get<double>();
  return m;
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (const auto& f : r.frames) j["frames"].push_back(frame_json(f, true));
  j["means"] = frame_json(r.means, false);
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    for (const auto& f : j.at("frames")) r.frames.push_back(frame_from(f));
    r.means = frame_from(j.at("means"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("metrics json: ") + e.what());
  }
}

std::string report_to_csv(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "t,l2_sigma,l2_u,div,warp,midwarp\n";
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    std::ostringstream o;
    o.precision(10);
    o << *v;
    return o.str();
  };
  for (const auto& f : r.frames)
    os << f.t << ',' << f.l2_sigma << ',' << f.l2_u << ',' << f.div << ',' << opt(f.warp) << ',' << opt(f.midwarp) << '\n';
  os << "mean," << r.means.l2_sigma << ',' << r.means.l2_u << ',' << r.means.div << ',' << opt(r.means.warp) << ','
     << opt(r.means.midwarp) << '\n';
  return os.str();
}

}  // namespace pinf::eval

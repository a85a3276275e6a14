#include "pinf/physics/d2v.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "pinf/physics/grid_ops.hpp"

namespace pinf::physics {

using scene::GridField;

GridField GroundTruthOracle::predict(const GridField& density, double frame) const {
  if (seq_.empty()) throw ArgumentError("ground-truth oracle has no frames");
  const auto f = static_cast<std::size_t>(std::clamp(std::lround(frame), 0L, static_cast<long>(seq_.size()) - 1));
  const GridField& src = seq_[f];
  GridField out(density.nx, density.ny, density.nz, 3, density.bounds);
  for (int k = 0; k < out.nz; ++k)
    for (int j = 0; j < out.ny; ++j)
      for (int i = 0; i < out.nx; ++i) {
        const Vec3 u = src.sample_vec(out.center(i, j, k));
        for (int c = 0; c < 3; ++c) out.at(i, j, k, c) = u[static_cast<std::size_t>(c)];
      }
  return out;
}

ExternalOracle::ExternalOracle(std::string command, std::string work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

GridField ExternalOracle::predict(const GridField& density, double) const {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir_);
  const std::string in = (fs::path(work_dir_) / "d2v_in.nfg").string();
  const std::string out = (fs::path(work_dir_) / "d2v_out.nfg").string();
  std::error_code ec;
  fs::remove(out, ec);
  scene::write_grid(in, density);
  std::string cmd = command_;
  for (const auto& [key, val] : {std::pair{std::string("{in}"), in}, std::pair{std::string("{out}"), out}}) {
    for (std::size_t p = cmd.find(key); p != std::string::npos; p = cmd.find(key, p + val.size()))
      cmd.replace(p, key.size(), val);
  }
  if (std::system(cmd.c_str()) != 0) throw IoError("external oracle command failed: " + cmd);
  return scene::read_grid(out);
}

D2vResult d2v_from_curls(const GridField& hid_curl, const GridField& ref_curl, const D2vOptions& opt) {
  if (hid_curl.channels != 3 || ref_curl.channels != 3) throw ArgumentError("d2v: curl grids need 3 channels");
  if (hid_curl.nx != ref_curl.nx || hid_curl.ny != ref_curl.ny || hid_curl.nz != ref_curl.nz)
    throw ContractError("d2v: curl grids differ in dims");
  const std::size_t N = hid_curl.cells();
  const auto& c = hid_curl.data;
  const auto& a = ref_curl.data;
  auto norm_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    const double ms = s / static_cast<double>(N);
    return opt.rms_normalize ? std::sqrt(ms + opt.eps) : ms + opt.eps;
  };
  const double Dh = norm_of(c), Dr = norm_of(a);
  D2vResult res;
  res.grad.assign(c.size(), 0.0);
  std::vector<double> r(c.size());
  double rc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    r[i] = a[i] / Dr - c[i] / Dh;
    res.loss += r[i] * r[i];
    rc += r[i] * c[i];
  }
  // dD/dc_i = 2 c_i / N (mean square) or c_i / (N D) (RMS).
  const double dD = opt.rms_normalize ? 1.0 / (static_cast<double>(N) * Dh) : 2.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < c.size(); ++i) res.grad[i] = -2.0 * r[i] / Dh + 2.0 * rc / (Dh * Dh) * dD * c[i];
  return res;
}

D2vResult d2v_loss(const GridField& hid_curl, const GridField& density, const VelocityPriorOracle& oracle,
                   double frame, const D2vOptions& opt) {
  const GridField u = oracle.predict(density, frame);
  if (u.channels != 3 || u.nx != density.nx || u.ny != density.ny || u.nz != density.nz ||
      u.data.size() != u.cells() * 3)
    throw ContractError("d2v: oracle output does not match the density grid");
  return d2v_from_curls(hid_curl, grid_curl(u), opt);
}

}  // namespace pinf::physics

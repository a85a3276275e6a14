#include "pinf/scene/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace pinf::scene {

static_assert(std::endian::native == std::endian::little, "grid files assume a little-endian host");

GridField::GridField(int nx_, int ny_, int nz_, int channels_, const Aabb& b, double fill)
    : nx(nx_), ny(ny_), nz(nz_), channels(channels_), bounds(b) {
  if (nx < 2 || ny < 2 || nz < 2) throw ArgumentError("grid dims must be >= 2 per axis");
  if (channels != 1 && channels != 3) throw ArgumentError("grid channels must be 1 or 3");
  if (bounds.empty()) throw ArgumentError("grid bounds must be nonempty");
  data.assign(cells() * static_cast<std::size_t>(channels), fill);
}

Vec3 GridField::spacing() const {
  const Vec3 e = bounds.extent();
  return {e[0] / nx, e[1] / ny, e[2] / nz};
}

Vec3 GridField::center(int i, int j, int k) const {
  const Vec3 h = spacing();
  return {bounds.lo[0] + (i + 0.5) * h[0], bounds.lo[1] + (j + 0.5) * h[1], bounds.lo[2] + (k + 0.5) * h[2]};
}

namespace {
struct Stencil {
  int i0, i1;
  double f;
};
Stencil locate(double g, int n) {
  g = std::clamp(g, 0.0, static_cast<double>(n - 1));
  int i0 = std::min(static_cast<int>(std::floor(g)), n - 2);
  return {i0, i0 + 1, g - i0};
}
}  // namespace

double GridField::sample(const Vec3& x, int c) const {
  const Vec3 h = spacing();
  return sample_index((x[0] - bounds.lo[0]) / h[0] - 0.5, (x[1] - bounds.lo[1]) / h[1] - 0.5,
                      (x[2] - bounds.lo[2]) / h[2] - 0.5, c);
}

double GridField::sample_index(double gi, double gj, double gk, int c) const {
  const Stencil sx = locate(gi, nx);
  const Stencil sy = locate(gj, ny);
  const Stencil sz = locate(gk, nz);
  auto lerp = [](double a, double b, double f) { return (1.0 - f) * a + f * b; };
  const double c00 = lerp(at(sx.i0, sy.i0, sz.i0, c), at(sx.i1, sy.i0, sz.i0, c), sx.f);
  const double c10 = lerp(at(sx.i0, sy.i1, sz.i0, c), at(sx.i1, sy.i1, sz.i0, c), sx.f);
  const double c01 = lerp(at(sx.i0, sy.i0, sz.i1, c), at(sx.i1, sy.i0, sz.i1, c), sx.f);
  const double c11 = lerp(at(sx.i0, sy.i1, sz.i1, c), at(sx.i1, sy.i1, sz.i1, c), sx.f);
  return lerp(lerp(c00, c10, sy.f), lerp(c01, c11, sy.f), sz.f);
}

Vec3 GridField::sample_vec(const Vec3& x) const {
  if (channels != 3) throw ArgumentError("sample_vec on a scalar grid");
  return {sample(x, 0), sample(x, 1), sample(x, 2)};
}

void GridField::validate() const {
  if (nx < 2 || ny < 2 || nz < 2) throw ArgumentError("grid dims must be >= 2 per axis");
  if (channels != 1 && channels != 3) throw ArgumentError("grid channels must be 1 or 3");
  if (bounds.empty()) throw ArgumentError("grid bounds must be nonempty");
  if (data.size() != cells() * static_cast<std::size_t>(channels)) throw ArgumentError("grid data length mismatch");
}

bool GridField::same_layout(const GridField& o) const {
  return nx == o.nx && ny == o.ny && nz == o.nz && bounds.lo == o.bounds.lo && bounds.hi == o.bounds.hi;
}

double GridField::min_value() const { return *std::min_element(data.begin(), data.end()); }
double GridField::max_value() const { return *std::max_element(data.begin(), data.end()); }
double GridField::sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }

namespace {
constexpr char kMagic[8] = {'N', 'F', 'G', 'R', 'I', 'D', '1', '\0'};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void write_grid(const std::string& path, const GridField& g) {
  g.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  for (int v : {g.nx, g.ny, g.nz, g.channels}) put<std::int32_t>(out, v);
  for (std::size_t a = 0; a < 3; ++a) put<double>(out, g.bounds.lo[a]);
  for (std::size_t a = 0; a < 3; ++a) put<double>(out, g.bounds.hi[a]);
  put<double>(out, g.frame_dt);
  std::vector<float> buf(g.data.begin(), g.data.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("grid write failed: " + path);
}

GridField read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not an NFGRID1 file: " + path);
  GridField g;
  g.nx = get<std::int32_t>(in);
  g.ny = get<std::int32_t>(in);
  g.nz = get<std::int32_t>(in);
  g.channels = get<std::int32_t>(in);
  for (std::size_t a = 0; a < 3; ++a) g.bounds.lo[a] = get<double>(in);
  for (std::size_t a = 0; a < 3; ++a) g.bounds.hi[a] = get<double>(in);
  g.frame_dt = get<double>(in);
  if (!in) throw IoError("truncated grid header: " + path);
  if (g.nx < 2 || g.ny < 2 || g.nz < 2 || g.nx > 4096 || g.ny > 4096 || g.nz > 4096 ||
      (g.channels != 1 && g.channels != 3))
    throw IoError("invalid grid header: " + path);
  std::vector<float> buf(g.cells() * static_cast<std::size_t>(g.channels));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw IoError("truncated grid data: " + path);
  g.data.assign(buf.begin(), buf.end());
  return g;
}

GridField advect_semi_lagrangian(const GridField& field, const GridField& u, double dt) {
  field.validate();
  u.validate();
  if (u.channels != 3) throw ArgumentError("advect: velocity grid must have 3 channels");
  if (!field.same_layout(u)) throw ArgumentError("advect: field and velocity grids differ in dims or bounds");
  GridField out = field;
  const Vec3 h = field.spacing();
  for (int k = 0; k < field.nz; ++k)
    for (int j = 0; j < field.ny; ++j)
      for (int i = 0; i < field.nx; ++i) {
        const double gi = i - u.at(i, j, k, 0) * dt / h[0];
        const double gj = j - u.at(i, j, k, 1) * dt / h[1];
        const double gk = k - u.at(i, j, k, 2) * dt / h[2];
        for (int c = 0; c < field.channels; ++c) out.at(i, j, k, c) = field.sample_index(gi, gj, gk, c);
      }
  return out;
}

}  // namespace pinf::scene

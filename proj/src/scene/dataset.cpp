#include "pinf/scene/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pinf::scene {

namespace fs = std::filesystem;
using nlohmann::json;

void GridSequenceSource::radiance(std::span<const Vec3> x, double frame, std::vector<double>& sigma,
                                  std::vector<render::Rgb<double>>& color) const {
  const auto& seq = *frames_;
  const double f = std::clamp(frame, 0.0, static_cast<double>(seq.size() - 1));
  const auto f0 = static_cast<std::size_t>(std::floor(f));
  const std::size_t f1 = std::min(f0 + 1, seq.size() - 1);
  const double w = f - static_cast<double>(f0);
  sigma.resize(x.size());
  color.assign(x.size(), color_);
  for (std::size_t k = 0; k < x.size(); ++k) {
    double s = seq[f0].sample(x[k]);
    if (w > 0.0) s = (1.0 - w) * s + w * seq[f1].sample(x[k]);
    sigma[k] = scale_ * std::max(s, 0.0);
  }
}

std::vector<int> SceneDataset::train_cameras() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (!held_out[i]) ids.push_back(static_cast<int>(i));
  return ids;
}

std::vector<int> SceneDataset::test_cameras() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (held_out[i]) ids.push_back(static_cast<int>(i));
  return ids;
}

void SceneDataset::validate() const {
  if (cameras.empty()) throw ArgumentError("dataset has no cameras");
  if (held_out.size() != cameras.size()) throw ArgumentError("dataset: held-out flags do not match cameras");
  if (timestamps.empty()) throw ArgumentError("dataset has no frames");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1])) throw ArgumentError("dataset: timestamps must strictly increase");
  if (box.empty()) throw ArgumentError("dataset: empty domain box");
  if (images.size() != cameras.size()) throw ArgumentError("dataset: image sets do not match cameras");
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    cameras[c].validate();
    if (images[c].size() != timestamps.size()) throw ArgumentError("dataset: camera frame counts differ");
    for (const auto& img : images[c])
      if (img.width != cameras[c].width || img.height != cameras[c].height)
        throw ArgumentError("dataset: image size does not match camera resolution");
  }
  if (!gt_sigma.empty() && gt_sigma.size() != timestamps.size()) throw ArgumentError("dataset: gt density frames");
  if (!gt_velocity.empty() && gt_velocity.size() != timestamps.size()) throw ArgumentError("dataset: gt velocity frames");
}

void render_reference(SceneDataset& ds, int samples_per_ray) {
  if (ds.gt_sigma.empty()) throw ArgumentError("render_reference: no density sequence");
  GridSequenceSource fluid(&ds.gt_sigma, ds.emission, ds.density_scale);
  std::vector<GridField> stat_seq;
  if (ds.has_static) stat_seq.push_back(ds.static_sigma);
  GridSequenceSource stat(&stat_seq, ds.static_color, ds.density_scale);
  render::SourceSet src;
  src.coarse = &fluid;
  if (ds.has_static) src.static_coarse = &stat;
  render::RenderOptions opt;
  opt.k_coarse = samples_per_ray;
  opt.k_fine = 0;
  opt.jitter = false;
  opt.background = ds.background;
  const render::Domain dom = ds.domain();
  ds.images.assign(ds.cameras.size(), {});
  for (std::size_t c = 0; c < ds.cameras.size(); ++c)
    for (double t : ds.timestamps) ds.images[c].push_back(render::render_image(src, ds.cameras[c], dom, t, opt, 0));
}

namespace {

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::string frame_name(const std::string& stem, std::size_t k, const char* ext) {
  return stem + "_t" + std::to_string(k) + ext;
}

}  // namespace

void save_dataset(const SceneDataset& ds, const std::string& dir) {
  ds.validate();
  fs::create_directories(fs::path(dir) / "frames");
  json j;
  j["name"] = ds.name;
  j["timestamps"] = ds.timestamps;
  j["background"] = ds.background;
  j["aabb"] = {{"lo", vec_json(ds.box.lo)}, {"hi", vec_json(ds.box.hi)}};
  j["emission"] = ds.emission;
  j["density_scale"] = ds.density_scale;
  j["has_static"] = ds.has_static;
  j["static_color"] = ds.static_color;
  j["cameras"] = json::array();
  for (std::size_t c = 0; c < ds.cameras.size(); ++c) {
    json cj = json::parse(render::camera_to_json(ds.cameras[c]));
    cj["held_out"] = static_cast<bool>(ds.held_out[c]);
    j["cameras"].push_back(cj);
  }
  {
    std::ofstream out(fs::path(dir) / "scene.json");
    if (!out) throw IoError("cannot write scene.json in " + dir);
    out << j.dump(2) << "\n";
  }
  for (std::size_t c = 0; c < ds.cameras.size(); ++c) {
    const fs::path cd = fs::path(dir) / "frames" / ("cam" + std::to_string(c));
    fs::create_directories(cd);
    for (std::size_t k = 0; k < ds.images[c].size(); ++k)
      render::write_png((cd / ("t" + std::to_string(k) + ".png")).string(), ds.images[c][k]);
  }
  if (!ds.gt_sigma.empty() || !ds.gt_velocity.empty() || ds.has_static) fs::create_directories(fs::path(dir) / "gt");
  for (std::size_t k = 0; k < ds.gt_sigma.size(); ++k)
    write_grid((fs::path(dir) / "gt" / frame_name("sigma", k, ".nfg")).string(), ds.gt_sigma[k]);
  for (std::size_t k = 0; k < ds.gt_velocity.size(); ++k)
    write_grid((fs::path(dir) / "gt" / frame_name("vel", k, ".nfg")).string(), ds.gt_velocity[k]);
  if (ds.has_static) write_grid((fs::path(dir) / "gt" / "static_sigma.nfg").string(), ds.static_sigma);
}

SceneDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "scene.json");
  if (!in) throw IoError("missing scene.json in " + dir);
  SceneDataset ds;
  try {
    const json j = json::parse(in);
    ds.name = j.value("name", std::string("scene"));
    ds.timestamps = j.at("timestamps").get<std::vector<double>>();
    ds.background = j.at("background").get<std::array<double, 3>>();
    ds.box.lo = json_vec(j.at("aabb").at("lo"));
    ds.box.hi = json_vec(j.at("aabb").at("hi"));
    ds.emission = j.value("emission", ds.emission);
    ds.density_scale = j.value("density_scale", 1.0);
    ds.has_static = j.value("has_static", false);
    ds.static_color = j.value("static_color", ds.static_color);
    for (const auto& cj : j.at("cameras")) {
      ds.cameras.push_back(render::camera_from_json(cj.dump()));
      ds.held_out.push_back(cj.value("held_out", false));
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("scene.json: ") + e.what());
  }
  ds.images.resize(ds.cameras.size());
  for (std::size_t c = 0; c < ds.cameras.size(); ++c)
    for (std::size_t k = 0; k < ds.timestamps.size(); ++k)
      ds.images[c].push_back(
          render::read_png((root / "frames" / ("cam" + std::to_string(c)) / ("t" + std::to_string(k) + ".png")).string()));
  for (std::size_t k = 0; k < ds.timestamps.size(); ++k) {
    const fs::path s = root / "gt" / frame_name("sigma", k, ".nfg");
    const fs::path v = root / "gt" / frame_name("vel", k, ".nfg");
    if (fs::exists(s)) ds.gt_sigma.push_back(read_grid(s.string()));
    if (fs::exists(v)) ds.gt_velocity.push_back(read_grid(v.string()));
  }
  if (ds.has_static) ds.static_sigma = read_grid((root / "gt" / "static_sigma.nfg").string());
  ds.validate();
  return ds;
}

namespace {

double soft_box(const Vec3& x, const Vec3& lo, const Vec3& hi, double edge) {
  double v = 1.0;
  for (std::size_t a = 0; a < 3; ++a)
    v *= 1.0 / (1.0 + std::exp(-(x[a] - lo[a]) / edge)) * 1.0 / (1.0 + std::exp((x[a] - hi[a]) / edge));
  return v;
}

}  // namespace

SceneDataset make_toy_scene(const ToySceneConfig& cfg) {
  SceneDataset ds;
  ds.name = cfg.kind == "hybrid" ? "toy-hybrid" : "toy-plume";
  ds.density_scale = cfg.density_scale;
  const double pi = std::acos(-1.0);
  auto camera_at = [&](double deg) {
    const double a = deg * pi / 180.0;
    const Vec3 eye{cfg.camera_radius * std::sin(a), 0.35, cfg.camera_radius * std::cos(a)};
    return render::look_at(eye, {0, 0, 0}, {0, 1, 0}, cfg.focal_px, cfg.image_size, cfg.image_size);
  };
  for (int i = 0; i < cfg.train_cameras; ++i) {
    const double frac = cfg.train_cameras == 1 ? 0.5 : static_cast<double>(i) / (cfg.train_cameras - 1);
    ds.cameras.push_back(camera_at((frac - 0.5) * cfg.arc_degrees));
    ds.held_out.push_back(false);
  }
  ds.cameras.push_back(camera_at(cfg.held_out_degrees));
  ds.held_out.push_back(true);
  for (int k = 0; k < cfg.frames; ++k) ds.timestamps.push_back(k);

  if (cfg.kind == "plume") {
    PlumeConfig pc = cfg.plume;
    pc.n = cfg.grid;
    pc.frames = cfg.frames;
    pc.box = ds.box;
    PlumeFrames sim = simulate_plume(pc);
    ds.gt_sigma = std::move(sim.sigma);
    ds.gt_velocity = std::move(sim.velocity);
  } else if (cfg.kind == "hybrid") {
    // Static pedestal at the bottom, a blob drifting across above it.
    const Vec3 blo{-0.35, -1.0, -0.35}, bhi{0.35, -0.25, 0.35};
    ds.has_static = true;
    ds.static_sigma = GridField(cfg.grid, cfg.grid, cfg.grid, 1, ds.box);
    const double edge = 0.5 * ds.static_sigma.spacing()[0];
    for (int k = 0; k < cfg.grid; ++k)
      for (int j = 0; j < cfg.grid; ++j)
        for (int i = 0; i < cfg.grid; ++i)
          ds.static_sigma.at(i, j, k) = soft_box(ds.static_sigma.center(i, j, k), blo, bhi, edge);
    const Vec3 start{-0.55, 0.25, 0.0};
    const Vec3 v{1.1 / std::max(1, cfg.frames - 1), 0.0, 0.0};
    FlowParams fp;
    fp.velocity = v;
    for (int f = 0; f < cfg.frames; ++f) {
      GridField s(cfg.grid, cfg.grid, cfg.grid, 1, ds.box);
      const Vec3 c = start + v * static_cast<double>(f);
      for (int k = 0; k < cfg.grid; ++k)
        for (int j = 0; j < cfg.grid; ++j)
          for (int i = 0; i < cfg.grid; ++i) {
            const Vec3 r = s.center(i, j, k) - c;
            s.at(i, j, k) = std::exp(-dot(r, r) / (2 * 0.16 * 0.16));
          }
      ds.gt_sigma.push_back(std::move(s));
      ds.gt_velocity.push_back(flow_to_grid(FlowKind::UniformTranslation, fp, cfg.grid, ds.box, f));
    }
    ds.emission = {0.95, 0.55, 0.2};
  } else {
    throw ArgumentError("unknown toy scene kind: " + cfg.kind);
  }
  render_reference(ds);
  ds.validate();
  return ds;
}

}  // namespace pinf::scene

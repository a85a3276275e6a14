#include "pinf/pinf.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "pinf/eval/reconstruction.hpp"
#include "pinf/eval/viz.hpp"
#include "pinf/physics/grid_ops.hpp"
#include "pinf/train/trainer.hpp"

struct pinf_dataset {
  pinf::scene::SceneDataset ds;
};
struct pinf_config {
  pinf::train::TrainConfig cfg;
  pinf::train::LossWeights w;
};
struct pinf_model {
  pinf::train::ModelSet m;
};
struct pinf_report {
  pinf::eval::MetricsReport metrics;
  double velocity_cosine = 0.0;
  std::optional<double> psnr;
};

namespace {

using namespace pinf;
namespace fs = std::filesystem;

thread_local std::string g_error;

template <class F>
pinf_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return PINF_OK;
  } catch (const ArgumentError& e) {
    g_error = e.what();
    return PINF_E_ARGUMENT;
  } catch (const IoError& e) {
    g_error = e.what();
    return PINF_E_IO;
  } catch (const NumericError& e) {
    g_error = e.what();
    return PINF_E_NUMERIC;
  } catch (const ContractError& e) {
    g_error = e.what();
    return PINF_E_CONTRACT;
  } catch (const StructuralError& e) {
    g_error = e.what();
    return PINF_E_STRUCTURAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return PINF_E_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return PINF_E_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is null");
  return *p;
}
template <class T>
T& need(T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is null");
  return *p;
}

const char* text_arg(const char* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is null");
  return p;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_text(const char* path) {
  std::ifstream f(text_arg(path, "path"));
  if (!f) throw IoError(std::string("cannot read ") + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const render::Camera& camera_of(const scene::SceneDataset& ds, int camera) {
  if (camera < 0 || camera >= static_cast<int>(ds.cameras.size()))
    throw ArgumentError("camera index " + std::to_string(camera) + " out of range");
  return ds.cameras[static_cast<std::size_t>(camera)];
}

void check_frame(const scene::SceneDataset& ds, double frame) {
  if (!(frame >= 0.0 && frame <= ds.frames() - 1)) throw ArgumentError("frame out of range");
}

void check_models_match(const train::ModelSet& m, const scene::SceneDataset& ds) {
  if (m.domain.frames != ds.frames()) throw ArgumentError("model and dataset frame counts differ");
}

// Velocity and density of either the model or the ground truth.
struct Fields {
  std::vector<scene::GridField> sigma, velocity;
};

Fields fields_of(const pinf_model* m, const scene::SceneDataset& ds) {
  if (ds.gt_sigma.empty()) throw ArgumentError("dataset has no ground-truth grid to sample on");
  if (!m) return {eval::reference_density(ds), ds.gt_velocity};
  check_models_match(m->m, ds);
  auto s = eval::sample_sequence(m->m, ds);
  return {std::move(s.sigma), std::move(s.velocity)};
}

}  // namespace

extern "C" {

const char* pinf_version(void) { return "1.0.0"; }
const char* pinf_last_error(void) { return g_error.c_str(); }
void pinf_string_free(char* s) { std::free(s); }

void pinf_scene_params_default(pinf_scene_params* p) {
  if (!p) return;
  const scene::ToySceneConfig c;
  p->kind = "plume";
  p->grid = c.grid;
  p->frames = c.frames;
  p->image_size = c.image_size;
  p->seed = c.seed;
}

pinf_status pinf_dataset_generate(const pinf_scene_params* p, pinf_dataset** out) {
  return guard([&] {
    const auto& params = need(p, "params");
    need(out, "out") = nullptr;
    scene::ToySceneConfig c;
    c.kind = params.kind ? params.kind : "plume";
    if (params.grid < 4 || params.frames < 2 || params.image_size < 4)
      throw ArgumentError("scene needs grid >= 4, frames >= 2 and image_size >= 4");
    c.grid = params.grid;
    c.frames = params.frames;
    c.image_size = params.image_size;
    // Keep the field of view when the resolution changes.
    c.focal_px *= static_cast<double>(params.image_size) / scene::ToySceneConfig{}.image_size;
    c.seed = params.seed;
    *out = new pinf_dataset{scene::make_toy_scene(c)};
  });
}

pinf_status pinf_dataset_load(const char* dir, pinf_dataset** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    *out = new pinf_dataset{scene::load_dataset(text_arg(dir, "dir"))};
  });
}

pinf_status pinf_dataset_save(const pinf_dataset* ds, const char* dir) {
  return guard([&] { scene::save_dataset(need(ds, "dataset").ds, text_arg(dir, "dir")); });
}

pinf_status pinf_dataset_get_info(const pinf_dataset* d, pinf_dataset_info* info) {
  return guard([&] {
    const auto& ds = need(d, "dataset").ds;
    auto& i = need(info, "info");
    i.frames = ds.frames();
    i.cameras = static_cast<int>(ds.cameras.size());
    i.held_out_cameras = static_cast<int>(ds.test_cameras().size());
    i.width = ds.cameras.empty() ? 0 : ds.cameras[0].width;
    i.height = ds.cameras.empty() ? 0 : ds.cameras[0].height;
    i.hybrid = ds.has_static ? 1 : 0;
    i.has_ground_truth = !ds.gt_sigma.empty() && ds.gt_velocity.size() == ds.gt_sigma.size() ? 1 : 0;
    i.grid = ds.gt_sigma.empty() ? 0 : ds.gt_sigma[0].nx;
  });
}

void pinf_dataset_free(pinf_dataset* ds) { delete ds; }

pinf_status pinf_config_create(const char* json, pinf_config** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    auto c = std::make_unique<pinf_config>();
    if (json) train::config_from_json(json, c->cfg, c->w);
    *out = c.release();
  });
}

pinf_status pinf_config_load(const char* path, pinf_config** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    auto c = std::make_unique<pinf_config>();
    train::config_from_json(read_text(path), c->cfg, c->w);
    *out = c.release();
  });
}

pinf_status pinf_config_merge(pinf_config* cfg, const char* json) {
  return guard([&] {
    auto& c = need(cfg, "config");
    train::TrainConfig t = c.cfg;
    train::LossWeights w = c.w;
    train::config_from_json(text_arg(json, "json"), t, w);
    c.cfg = t;
    c.w = w;
  });
}

pinf_status pinf_config_to_json(const pinf_config* cfg, char** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    const auto& c = need(cfg, "config");
    *out = dup(train::config_to_json(c.cfg, c.w));
  });
}

void pinf_config_free(pinf_config* cfg) { delete cfg; }

pinf_status pinf_model_create(const pinf_config* cfg, const pinf_dataset* ds, pinf_model** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    const auto& c = need(cfg, "config");
    c.cfg.validate();
    *out = new pinf_model{train::make_models(c.cfg, need(ds, "dataset").ds.domain(), c.cfg.seed)};
  });
}

pinf_status pinf_model_load(const char* path, pinf_model** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    *out = new pinf_model{train::load_checkpoint(text_arg(path, "path"))};
  });
}

pinf_status pinf_model_save(const pinf_model* m, const char* path) {
  return guard([&] { train::save_checkpoint(text_arg(path, "path"), need(m, "model").m); });
}

int pinf_model_iteration(const pinf_model* m) { return m ? m->m.iteration : -1; }
int pinf_model_is_hybrid(const pinf_model* m) { return m && m->m.hybrid ? 1 : 0; }
void pinf_model_free(pinf_model* m) { delete m; }

pinf_status pinf_train(pinf_model* m, const pinf_dataset* d, const pinf_config* cfg, const char* oracle_command,
                       const char* out_dir, pinf_progress_fn progress, void* user) {
  return guard([&] {
    auto& model = need(m, "model").m;
    const auto& ds = need(d, "dataset").ds;
    const auto& c = need(cfg, "config");
    std::unique_ptr<physics::VelocityPriorOracle> oracle;
    if (!oracle_command) {
      if (!ds.gt_velocity.empty()) oracle = std::make_unique<physics::GroundTruthOracle>(ds.gt_velocity);
    } else if (*oracle_command) {
      const fs::path work = out_dir ? fs::path(out_dir) / "oracle" : fs::temp_directory_path() / "pinf_oracle";
      oracle = std::make_unique<physics::ExternalOracle>(oracle_command, work.string());
    }
    std::function<void(int, const train::LossBreakdown&)> cb;
    if (progress)
      cb = [&](int it, const train::LossBreakdown& L) {
        const pinf_losses l{L.img, L.vgg, L.ghost, L.transport, L.nse, L.d2v, L.overlay, L.total};
        progress(it, &l, user);
      };
    train::train(ds, model, c.cfg, c.w, oracle.get(), out_dir ? out_dir : "", cb);
  });
}

pinf_status pinf_render(const pinf_model* m, const pinf_dataset* d, int camera, double frame, double* rgb,
                        size_t rgb_len) {
  return guard([&] {
    const auto& ds = need(d, "dataset").ds;
    const auto& model = need(m, "model").m;
    check_models_match(model, ds);
    check_frame(ds, frame);
    const auto& cam = camera_of(ds, camera);
    if (!rgb || rgb_len != static_cast<size_t>(cam.width) * cam.height * 3)
      throw ArgumentError("rgb buffer must hold width*height*3 values");
    const render::Image img = eval::render_view(model, cam, frame, ds.background);
    std::copy(img.rgb.begin(), img.rgb.end(), rgb);
  });
}

pinf_status pinf_render_png(const pinf_model* m, const pinf_dataset* d, int camera, double frame, const char* path) {
  return guard([&] {
    const auto& ds = need(d, "dataset").ds;
    const auto& model = need(m, "model").m;
    check_models_match(model, ds);
    check_frame(ds, frame);
    render::write_png(text_arg(path, "path"), eval::render_view(model, camera_of(ds, camera), frame, ds.background));
  });
}

pinf_status pinf_export_slices(const pinf_model* m, const pinf_dataset* d, int frame, const char* dir) {
  return guard([&] {
    const auto& ds = need(d, "dataset").ds;
    check_frame(ds, frame);
    const fs::path out(text_arg(dir, "dir"));
    fs::create_directories(out);
    const Fields f = fields_of(m, ds);
    double urange = 0.0, wrange = 0.0;
    for (const auto& u : f.velocity) {
      urange = std::max(urange, eval::max_abs(u));
      wrange = std::max(wrange, eval::max_abs(physics::grid_curl(u)));
    }
    const auto& u = f.velocity[static_cast<std::size_t>(frame)];
    const auto& s = f.sigma[static_cast<std::size_t>(frame)];
    const std::pair<eval::SliceAxis, const char*> views[] = {
        {eval::SliceAxis::Front, "front"}, {eval::SliceAxis::Side, "side"}, {eval::SliceAxis::Top, "top"}};
    for (const auto& [axis, name] : views) {
      render::write_png((out / (std::string("velocity_") + name + ".png")).string(),
                        eval::velocity_slice(u, &s, axis, urange));
      render::write_png((out / (std::string("vorticity_") + name + ".png")).string(),
                        eval::vorticity_slice(u, axis, wrange));
    }
  });
}

pinf_status pinf_evaluate(const pinf_model* m, const pinf_dataset* d, pinf_report** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    const auto& ds = need(d, "dataset").ds;
    if (ds.gt_velocity.size() != ds.gt_sigma.size() || ds.gt_sigma.empty())
      throw ArgumentError("dataset has no ground-truth density and velocity");
    auto r = std::make_unique<pinf_report>();
    if (m) {
      check_models_match(m->m, ds);
      const auto rec = eval::evaluate_reconstruction(m->m, ds);
      r->metrics = rec.metrics;
      r->velocity_cosine = rec.velocity_cosine;
      if (!ds.test_cameras().empty()) r->psnr = eval::heldout_psnr(m->m, ds);
    } else {
      const auto ref = eval::reference_density(ds);
      r->metrics = eval::evaluate_sequence(ref, ds.gt_velocity, ref, ds.gt_velocity, ds.timestamps);
      r->velocity_cosine = eval::sequence_velocity_cosine(ds.gt_velocity, ds);
    }
    for (const auto& f : r->metrics.frames)
      if (!std::isfinite(f.l2_sigma) || !std::isfinite(f.l2_u) || !std::isfinite(f.div))
        throw NumericError("non-finite metric at t=" + std::to_string(f.t));
    *out = r.release();
  });
}

pinf_status pinf_report_json(const pinf_report* r, char** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    const auto& rep = need(r, "report");
    auto j = nlohmann::json::parse(eval::report_to_json(rep.metrics));
    j["velocity_cosine"] = rep.velocity_cosine;
    j["heldout_psnr"] = rep.psnr ? nlohmann::json(*rep.psnr) : nlohmann::json(nullptr);
    *out = dup(j.dump(2));
  });
}

pinf_status pinf_report_csv(const pinf_report* r, char** out) {
  return guard([&] {
    need(out, "out") = nullptr;
    *out = dup(eval::report_to_csv(need(r, "report").metrics));
  });
}

pinf_status pinf_report_summary(const pinf_report* r, pinf_summary* out) {
  return guard([&] {
    const auto& rep = need(r, "report");
    auto& s = need(out, "out");
    const auto& mn = rep.metrics.means;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.l2_sigma = mn.l2_sigma;
    s.l2_u = mn.l2_u;
    s.div = mn.div;
    s.warp = mn.warp.value_or(nan);
    s.midwarp = mn.midwarp.value_or(nan);
    s.velocity_cosine = rep.velocity_cosine;
    s.heldout_psnr = rep.psnr.value_or(nan);
  });
}

void pinf_report_free(pinf_report* r) { delete r; }

}  // extern "C"

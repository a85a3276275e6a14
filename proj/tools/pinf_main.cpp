// Command-line front end; talks to the library only through the C API.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinf/pinf.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitNumeric = 3;

struct Failure {
  pinf_status status;
};

void check(pinf_status s, const char* what) {
  if (s == PINF_OK) return;
  std::fprintf(stderr, "error: %s: %s\n", what, pinf_last_error());
  throw Failure{s};
}

int exit_code(pinf_status s) {
  switch (s) {
    case PINF_OK: return 0;
    case PINF_E_NUMERIC: return kExitNumeric;
    case PINF_E_INTERNAL: return 1;
    default: return kExitBadInput;
  }
}

// Small RAII wrappers over the opaque handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Dataset = Handle<pinf_dataset, pinf_dataset_free>;
using Config = Handle<pinf_config, pinf_config_free>;
using Model = Handle<pinf_model, pinf_model_free>;
using Report = Handle<pinf_report, pinf_report_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  pinf_string_free(s);
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) {
    std::fprintf(stderr, "error: cannot write %s\n", p.c_str());
    throw Failure{PINF_E_IO};
  }
  f << text;
}

struct GenerateArgs {
  std::string out, kind = "plume";
  int grid = 0, frames = 0, size = 0;
  std::uint64_t seed = 0;
};

void run_generate(const GenerateArgs& a) {
  pinf_scene_params p;
  pinf_scene_params_default(&p);
  p.kind = a.kind.c_str();
  if (a.grid) p.grid = a.grid;
  if (a.frames) p.frames = a.frames;
  if (a.size) p.image_size = a.size;
  p.seed = a.seed;
  Dataset ds;
  check(pinf_dataset_generate(&p, &ds.p), "generate");
  check(pinf_dataset_save(ds.p, a.out.c_str()), "save dataset");
  std::printf("wrote %s scene (%d^3 grid, %d frames) to %s\n", a.kind.c_str(), p.grid, p.frames, a.out.c_str());
}

struct TrainArgs {
  std::string scene, config, out, hybrid, oracle;
  bool has_oracle = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
};

void run_train(const TrainArgs& a) {
  Dataset ds;
  check(pinf_dataset_load(a.scene.c_str(), &ds.p), "load scene");
  Config cfg;
  if (a.config.empty())
    check(pinf_config_create(nullptr, &cfg.p), "config");
  else
    check(pinf_config_load(a.config.c_str(), &cfg.p), "load config");
  nlohmann::json over = {{"train", nlohmann::json::object()}};
  if (a.seed) over["train"]["seed"] = *a.seed;
  if (!a.hybrid.empty()) over["train"]["hybrid"] = a.hybrid == "on";
  if (a.iters) {
    over["train"]["total_iters"] = *a.iters;
    over["train"]["grow_steps"] = std::max(1, *a.iters / 2);
  }
  check(pinf_config_merge(cfg.p, over.dump().c_str()), "config overrides");

  Model m;
  check(pinf_model_create(cfg.p, ds.p, &m.p), "create models");
  auto progress = [](int it, const pinf_losses* l, void*) {
    if (it % 100 == 0)
      std::printf("iter %6d  total %.5g  img %.5g  ghost %.4g  transport %.4g  nse %.4g  d2v %.4g\n", it, l->total,
                  l->img, l->ghost, l->transport, l->nse, l->d2v);
    std::fflush(stdout);
  };
  check(pinf_train(m.p, ds.p, cfg.p, a.has_oracle ? a.oracle.c_str() : nullptr, a.out.c_str(), progress, nullptr),
        "train");
  std::printf("checkpoint written to %s\n", (fs::path(a.out) / "checkpoint.pinf").c_str());
}

struct RenderArgs {
  std::string scene, model, out;
  int camera = -1;
  int frame = -1;
};

void run_render(const RenderArgs& a) {
  Dataset ds;
  check(pinf_dataset_load(a.scene.c_str(), &ds.p), "load scene");
  Model m;
  check(pinf_model_load(a.model.c_str(), &m.p), "load model");
  pinf_dataset_info info;
  check(pinf_dataset_get_info(ds.p, &info), "scene info");
  fs::create_directories(a.out);
  const int frame = a.frame >= 0 ? a.frame : info.frames / 2;
  const int c0 = a.camera >= 0 ? a.camera : 0;
  const int c1 = a.camera >= 0 ? a.camera + 1 : info.cameras;
  for (int c = c0; c < c1; ++c) {
    const fs::path p = fs::path(a.out) / ("view_cam" + std::to_string(c) + "_f" + std::to_string(frame) + ".png");
    check(pinf_render_png(m.p, ds.p, c, frame, p.c_str()), "render");
  }
  if (info.has_ground_truth) check(pinf_export_slices(m.p, ds.p, frame, a.out.c_str()), "slices");
  std::printf("rendered frame %d to %s\n", frame, a.out.c_str());
}

struct EvalArgs {
  std::string scene, model, out;
};

void run_eval(const EvalArgs& a) {
  Dataset ds;
  check(pinf_dataset_load(a.scene.c_str(), &ds.p), "load scene");
  Model m;
  if (!a.model.empty()) check(pinf_model_load(a.model.c_str(), &m.p), "load model");
  Report r;
  check(pinf_evaluate(m.p, ds.p, &r.p), "evaluate");
  char* text = nullptr;
  check(pinf_report_json(r.p, &text), "report json");
  const std::string json = take(text);
  check(pinf_report_csv(r.p, &text), "report csv");
  const std::string csv = take(text);
  fs::create_directories(a.out);
  write_file(fs::path(a.out) / "metrics.json", json);
  write_file(fs::path(a.out) / "metrics.csv", csv);
  pinf_summary s;
  check(pinf_report_summary(r.p, &s), "summary");
  std::printf("l2_sigma %.6g  l2_u %.6g  div %.6g  warp %.6g  midwarp %.6g  cos %.4f", s.l2_sigma, s.l2_u, s.div,
              s.warp, s.midwarp, s.velocity_cosine);
  if (!std::isnan(s.heldout_psnr)) std::printf("  psnr %.2f", s.heldout_psnr);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed neural field reconstruction of smoke from multi-view video"};
  app.require_subcommand(1);

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "synthesize a toy scene dataset");
  gen->add_option("--out", g.out, "output directory")->required();
  gen->add_option("--kind", g.kind, "plume or hybrid")->check(CLI::IsMember({"plume", "hybrid"}));
  gen->add_option("--grid", g.grid, "ground-truth cells per axis");
  gen->add_option("--frames", g.frames, "frame count");
  gen->add_option("--size", g.size, "image width and height in pixels");
  gen->add_option("--seed", g.seed, "random seed");

  TrainArgs t;
  std::uint64_t seed = 0;
  int iters = 0;
  auto* tr = app.add_subcommand("train", "fit the fields to a scene");
  tr->add_option("--scene", t.scene, "dataset directory")->required();
  tr->add_option("--config", t.config, "JSON config");
  tr->add_option("--out", t.out, "output directory for logs and checkpoints")->required();
  auto* seed_opt = tr->add_option("--seed", seed, "random seed");
  tr->add_option("--hybrid", t.hybrid, "on or off")->check(CLI::IsMember({"on", "off"}));
  auto* iters_opt = tr->add_option("--iters", iters, "override total iterations")->check(CLI::NonNegativeNumber);
  auto* oracle_opt = tr->add_option("--oracle", t.oracle,
                                    "external velocity prior command with {in}/{out}; empty disables the prior");

  RenderArgs r;
  auto* ren = app.add_subcommand("render", "render views and velocity/vorticity slices");
  ren->add_option("--scene", r.scene, "dataset directory")->required();
  ren->add_option("--model", r.model, "checkpoint")->required();
  ren->add_option("--out", r.out, "output directory")->required();
  ren->add_option("--camera", r.camera, "camera index (default: all)");
  ren->add_option("--frame", r.frame, "frame index (default: middle)");

  EvalArgs e;
  auto* ev = app.add_subcommand("eval", "compare against the ground-truth grids");
  ev->add_option("--scene", e.scene, "dataset directory")->required();
  ev->add_option("--model", e.model, "checkpoint (default: the ground truth itself)");
  ev->add_option("--out", e.out, "output directory for metrics.json and metrics.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (*gen) run_generate(g);
    if (*tr) {
      if (*seed_opt) t.seed = seed;
      if (*iters_opt) t.iters = iters;
      t.has_oracle = oracle_opt->count() > 0;
      run_train(t);
    }
    if (*ren) run_render(r);
    if (*ev) run_eval(e);
  } catch (const Failure& f) {
    return exit_code(f.status);
  }
  return 0;
}

#include "pinf/train/models.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace pinf::train {

using fields::FieldKind;
using fields::GrowingMlp;

ModelSet make_models(const TrainConfig& cfg, const render::Domain& dom, std::uint64_t seed) {
  const auto& s = cfg.sizes;
  ModelSet m;
  m.domain = dom;
  m.hybrid = cfg.hybrid;
  m.vis_coarse = GrowingMlp(FieldKind::Radiance, fields::default_shape(FieldKind::Radiance, s.vis_hidden, s.vis_layers));
  m.vis_fine = GrowingMlp(FieldKind::Radiance, fields::default_shape(FieldKind::Radiance, s.vis_hidden, s.vis_layers));
  m.hid = GrowingMlp(FieldKind::Velocity, fields::default_shape(FieldKind::Velocity, s.hid_hidden, s.hid_layers));
  const auto st = fields::default_shape(FieldKind::StaticRadiance, s.static_hidden, s.static_layers);
  m.static_coarse = GrowingMlp(FieldKind::StaticRadiance, st);
  m.static_fine = GrowingMlp(FieldKind::StaticRadiance, st);
  fields::init_siren(m.vis_coarse, mix_seed(seed, 1));
  fields::init_siren(m.vis_fine, mix_seed(seed, 2));
  fields::init_siren(m.hid, mix_seed(seed, 3));
  fields::init_siren(m.static_coarse, mix_seed(seed, 4));
  fields::init_siren(m.static_fine, mix_seed(seed, 5));
  for (GrowingMlp* g : {&m.vis_coarse, &m.vis_fine, &m.static_coarse, &m.static_fine}) {
    auto& p = g->params();
    p.values()[p.index(g->shape().layers, ad::BlockKind::Bias, 3, 0)] = cfg.init_density_bias;
  }
  return m;
}

namespace {

constexpr char kMagic[8] = {'P', 'I', 'N', 'F', 'C', 'K', 'P', '1'};

struct Named {
  const char* name;
  GrowingMlp ModelSet::*member;
};
constexpr Named kModels[] = {{"vis_coarse", &ModelSet::vis_coarse},
                             {"vis_fine", &ModelSet::vis_fine},
                             {"hid", &ModelSet::hid},
                             {"static_coarse", &ModelSet::static_coarse},
                             {"static_fine", &ModelSet::static_fine}};

nlohmann::json shape_json(const GrowingMlp& g) {
  const auto& s = g.shape();
  return {{"kind", static_cast<int>(g.kind())},
          {"in_dim", s.in_dim},
          {"hidden", s.hidden},
          {"layers", s.layers},
          {"out_dim", s.out_dim},
          {"omega_first", s.omega_first},
          {"omega_hidden", s.omega_hidden},
          {"grow_step", g.growth_step()},
          {"grow_total", g.growth_total()},
          {"grow_enabled", g.growth_enabled()},
          {"params", g.params().size()}};
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelSet& m) {
  nlohmann::json h;
  h["format"] = "PINF-CKPT1";
  h["hybrid"] = m.hybrid;
  h["iteration"] = m.iteration;
  h["frames"] = m.domain.frames;
  h["aabb"] = {{"lo", m.domain.box.lo}, {"hi", m.domain.box.hi}};
  for (const auto& n : kModels) h["models"][n.name] = shape_json(m.*(n.member));
  const std::string header = h.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(kMagic, 8);
    const auto len = static_cast<std::uint64_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& n : kModels) {
      const auto v = (m.*(n.member)).params().values();
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write on checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move checkpoint into place: " + path);
}

ModelSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a PINF-CKPT1 file: " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (!in || len > (1u << 24)) throw IoError("bad checkpoint header: " + path);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint header: " + path);
  ModelSet m;
  try {
    const auto h = nlohmann::json::parse(header);
    m.hybrid = h.at("hybrid").get<bool>();
    m.iteration = h.at("iteration").get<int>();
    m.domain.frames = h.at("frames").get<int>();
    m.domain.box.lo = h.at("aabb").at("lo").get<Vec3>();
    m.domain.box.hi = h.at("aabb").at("hi").get<Vec3>();
    for (const auto& n : kModels) {
      const auto& j = h.at("models").at(n.name);
      fields::MlpShape s;
      s.in_dim = j.at("in_dim").get<int>();
      s.hidden = j.at("hidden").get<int>();
      s.layers = j.at("layers").get<int>();
      s.out_dim = j.at("out_dim").get<int>();
      s.omega_first = j.at("omega_first").get<double>();
      s.omega_hidden = j.at("omega_hidden").get<double>();
      GrowingMlp g(static_cast<FieldKind>(j.at("kind").get<int>()), s);
      if (g.params().size() != j.at("params").get<std::size_t>()) throw IoError("checkpoint parameter count mismatch");
      g.set_growth(j.at("grow_step").get<double>(), j.at("grow_total").get<double>(), j.at("grow_enabled").get<bool>());
      auto v = g.params().values();
      in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
      if (!in) throw IoError("truncated checkpoint: " + path);
      m.*(n.member) = std::move(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ArgumentError& e) {
    throw IoError(std::string("bad checkpoint contents: ") + e.what());
  }
  return m;
}

}  // namespace pinf::train

#pragma once

#include <string>
#include <vector>

#include "pinf/scene/grid.hpp"

namespace pinf::physics {

/// Density-to-velocity prior. Implementations map a density grid to a
/// velocity grid of the same dims (scene units per frame).
class VelocityPriorOracle {
 public:
  virtual ~VelocityPriorOracle() = default;
  /// `frame` is a hint for oracles backed by a sequence; learned priors ignore it.
  virtual scene::GridField predict(const scene::GridField& density, double frame) const = 0;
};

/// Ground-truth velocity sequence resampled onto the query grid; stands in
/// for a pretrained network in tests and acceptance runs.
class GroundTruthOracle : public VelocityPriorOracle {
 public:
  explicit GroundTruthOracle(std::vector<scene::GridField> velocity) : seq_(std::move(velocity)) {}
  scene::GridField predict(const scene::GridField& density, double frame) const override;

 private:
  std::vector<scene::GridField> seq_;
};

/// Runs an external program through the shell. `command` may contain {in}
/// and {out}; the density grid is written to {in} and the velocity grid is
/// read back from {out}, both in NFGRID1 format.
class ExternalOracle : public VelocityPriorOracle {
 public:
  ExternalOracle(std::string command, std::string work_dir);
  scene::GridField predict(const scene::GridField& density, double frame) const override;

 private:
  std::string command_;
  std::string work_dir_;
};

struct D2vOptions {
  double eps = 1e-8;
  /// Normalise by the RMS curl norm instead of the mean squared norm.
  bool rms_normalize = false;
};

struct D2vResult {
  double loss = 0.0;
  /// d loss / d hid_curl, same layout as the curl grid.
  std::vector<double> grad;
};

/// || c_ref / D_ref - c_hid / D_hid ||^2 summed over cells, with
/// D = sum ||c||^2 / cells + eps (or its RMS variant). Both inputs are curl
/// grids (3 channels, equal dims).
D2vResult d2v_from_curls(const scene::GridField& hid_curl, const scene::GridField& ref_curl,
                         const D2vOptions& opt = {});

/// Queries the oracle on `density`, takes the central-difference curl of its
/// output and compares it against `hid_curl`. Throws ContractError when the
/// oracle output does not match the density grid.
D2vResult d2v_loss(const scene::GridField& hid_curl, const scene::GridField& density,
                   const VelocityPriorOracle& oracle, double frame, const D2vOptions& opt = {});

}  // namespace pinf::physics

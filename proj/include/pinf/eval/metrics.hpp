#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pinf/fields/mlp.hpp"
#include "pinf/render/domain.hpp"
#include "pinf/scene/grid.hpp"

namespace pinf::eval {

using scene::GridField;

enum class SampleOutput { Density, Color, Velocity };

/// Samples a network at the cell centres of an nx x ny x nz grid over
/// `bounds` at `frame`. Density and color apply the radiance activations;
/// velocity returns the raw head (scene units per frame).
GridField sample_to_grid(const fields::GrowingMlp& model, const render::Domain& dom, int nx, int ny, int nz,
                         const Aabb& bounds, double frame, SampleOutput what);

/// Sum over masked cells of the squared difference (summed over channels).
/// A null mask includes every cell; otherwise cells with mask > 0.5 count.
double masked_sum_sq(const GridField& a, const GridField& b, const GridField* mask = nullptr);
std::size_t masked_count(const GridField& like, const GridField* mask = nullptr);

/// Mean squared difference over masked cells. Throws ArgumentError on a
/// layout mismatch.
double l2_volume(const GridField& a, const GridField& b, const GridField* mask = nullptr);

/// || Adv(s_t, u_t) - s_{t+1} ||^2, mean over masked cells.
double warp_error(const GridField& s_t, const GridField& u_t, const GridField& s_next, const GridField* mask = nullptr);
/// || Adv(s_{t+1}, -u_{t+1}/2) - Adv(s_t, u_t/2) ||^2, mean over masked cells.
double midwarp_error(const GridField& s_t, const GridField& u_t, const GridField& s_next, const GridField& u_next,
                     const GridField* mask = nullptr);
/// Mean |div u| over masked cells, central differences, scene units per frame.
double mean_abs_divergence(const GridField& u, const GridField* mask = nullptr);
/// Mean over masked cells of cos(u, u_ref); cells where either vector is
/// shorter than 1e-12 count as 0.
double velocity_cosine(const GridField& u, const GridField& u_ref, const GridField* mask = nullptr);

/// Scalar grid with 1 where density > fraction * max(density), else 0.
GridField threshold_mask(const GridField& density, double fraction);

struct FrameMetrics {
  double t = 0.0;
  double l2_sigma = 0.0;
  double l2_u = 0.0;
  double div = 0.0;
  std::optional<double> warp;  // absent for the last frame
  std::optional<double> midwarp;
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  FrameMetrics means;  // t unused; warp means over frames that have one
};

/// Per-frame metrics of a reconstructed sequence against a reference.
MetricsReport evaluate_sequence(const std::vector<GridField>& sigma, const std::vector<GridField>& u,
                                const std::vector<GridField>& sigma_ref, const std::vector<GridField>& u_ref,
                                const std::vector<double>& timestamps, const GridField* mask = nullptr);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);
std::string report_to_csv(const MetricsReport& r);

}  // namespace pinf::eval

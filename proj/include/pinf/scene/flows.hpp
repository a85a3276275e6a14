#pragma once

#include <string>
#include <vector>

#include "pinf/scene/grid.hpp"

namespace pinf::scene {

enum class FlowKind { RigidRotation, TaylorGreen, UniformTranslation, BuoyantPlumeSim };

/// Parses "rigid_rotation", "taylor_green", "uniform_translation" or
/// "buoyant_plume_sim"; anything else is an ArgumentError.
FlowKind parse_flow_kind(const std::string& name);

struct FlowParams {
  double omega = 1.0;          // rigid rotation rate (radians per frame)
  Vec3 axis{0.0, 0.0, 1.0};    // rigid rotation axis
  Vec3 center{0.0, 0.0, 0.0};  // rigid rotation centre
  double amplitude = 1.0;      // Taylor-Green amplitude
  double wavenumber = 1.0;     // Taylor-Green k
  double decay = 0.0;          // Taylor-Green exponential decay per frame
  Vec3 velocity{0.0, 0.0, 0.0};
  /// Simulated sequence for BuoyantPlumeSim, sampled trilinearly in space and
  /// linearly between frames.
  const std::vector<GridField>* sequence = nullptr;
};

/// Velocity of the chosen flow at scene point x and frame t (scene units per frame).
/// Rigid rotation is u = omega (x - c) x axis, so omega = 1 about +z maps
/// (1, 0, 0) to (0, -1, 0).
Vec3 analytic_flow(FlowKind kind, const FlowParams& p, const Vec3& x, double t);

/// Samples a flow onto a 3-channel grid at cell centres.
GridField flow_to_grid(FlowKind kind, const FlowParams& p, int n, const Aabb& box, double t);

struct PlumeConfig {
  int n = 32;
  int frames = 20;
  int substeps = 2;
  int jacobi_iters = 40;
  Aabb box;
  double buoyancy = 0.012;  // vertical acceleration per unit density, scene units per frame^2
  Vec3 blob_center{0.0, -0.45, 0.0};
  double blob_radius = 0.4;
  double blob_density = 1.0;
  /// Continuous inflow; rate is density added per frame at the source centre.
  bool source = false;
  Vec3 source_center{0.0, -0.7, 0.0};
  double source_radius = 0.15;
  double source_rate = 0.3;
  Vec3 initial_velocity{0.0, 0.0, 0.0};
  double swirl = 0.0;  // initial rotation rate about the vertical axis through the blob
};

struct PlumeFrames {
  std::vector<GridField> sigma;
  std::vector<GridField> velocity;  // cell-centred, scene units per frame
};

/// Small smoke solver: semi-Lagrangian advection of density and velocity,
/// buoyancy, Jacobi pressure projection on a staggered grid with closed walls
/// and warm-started pressure. Frame 0 is the initial state.
PlumeFrames simulate_plume(const PlumeConfig& cfg);

}  // namespace pinf::scene

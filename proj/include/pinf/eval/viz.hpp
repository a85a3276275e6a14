#pragma once

#include "pinf/render/image.hpp"
#include "pinf/scene/grid.hpp"

namespace pinf::eval {

enum class SliceAxis { Front, Side, Top };  // normals z, x, y

/// Middle slice of a velocity grid: channels map to RGB as 0.5 + 0.5 u / range.
/// Cells whose density is <= 1e-3 are drawn at 0.3 intensity when a density
/// grid is given. `scale` upsamples each cell to scale x scale pixels.
render::Image velocity_slice(const scene::GridField& u, const scene::GridField* density, SliceAxis axis, double range,
                             int scale = 4);

/// Middle slice of the vorticity component normal to the slice, mapped to a
/// blue-white-red palette over [-range, range].
render::Image vorticity_slice(const scene::GridField& u, SliceAxis axis, double range, int scale = 4);

/// Largest |component| of a vector grid; a symmetric range shared by a sequence.
double max_abs(const scene::GridField& g);

}  // namespace pinf::eval

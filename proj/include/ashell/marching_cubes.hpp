#pragma once

#include "ashell/grid.hpp"
#include "ashell/mesh.hpp"

namespace ashell {

/// Triangulates the `iso` level set of a scalar grid with the standard 256-case
/// table. Vertices sit on grid edges at the linearly interpolated crossing and are
/// shared between cells by grid-edge identity. Triangles are wound so their
/// geometric normals point toward increasing values. Zero-area triangles (a
/// crossing exactly at a grid vertex) are dropped. Output order is independent
/// of the worker count.
TriMesh marching_cubes(const ScalarGrid& g, double iso = 0.0, unsigned workers = 0);

}  // namespace ashell

#pragma once

#include "gridhop/geom.hpp"

#include <array>
#include <vector>

namespace gridhop {

/// Field values at the eight corners of a cell. Corner c sits at offset
/// (c & 1, (c >> 1) & 1, (c >> 2) & 1) from the cell's minimal corner.
struct CellCorners {
    std::array<double, 8> values{};
};

/// A value of exactly zero counts as outside.
inline bool is_inside(double v) { return v < 0.0; }

/// True iff the corner signs are not all equal.
bool surface_crosses_cell(const CellCorners& corners);

/// Index into the 256-case table (bit set = corner inside, table corner order).
int marching_cubes_case(const CellCorners& corners);

/// Number of triangles the table lists for a case.
int case_triangle_count(int case_index);

/// Appends the cell's triangles to `out`.
void polygonize_cell(const GridSpec& grid, const CellIndex& cell, const CellCorners& corners,
                     std::vector<Triangle>& out);

std::vector<Triangle> polygonize_cell(const GridSpec& grid, const CellIndex& cell, const CellCorners& corners);

/// Canonical corner indices at the ends of table edge e (0..11), lower corner first.
std::array<int, 2> edge_corners(int e);

}  // namespace gridhop

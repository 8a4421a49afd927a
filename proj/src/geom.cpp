#include "gridhop/geom.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace gridhop {

GridSpec::GridSpec(int n) : n_(n) {
    if (n < 1) {
        throw std::invalid_argument("grid resolution must be >= 1, got " + std::to_string(n));
    }
}

TraceStats& TraceStats::operator=(const TraceStats& other) {
    if (this != &other) {
        field_evals_.store(other.field_evals());
        march_steps_.store(other.march_steps());
        cells_polygonized_.store(other.cells_polygonized());
        rays_cast_.store(other.rays_cast());
    }
    return *this;
}

TraceCounts TraceStats::snapshot() const {
    return {field_evals(), march_steps(), cells_polygonized(), rays_cast()};
}

namespace {

double centroid_coord(const GridSpec& grid, int index) {
    const double n = grid.n();
    return -0.5 + 1.0 / (2.0 * n) + index / n;
}

void check_index(const GridSpec& grid, int v, const char* what) {
    if (v < 0 || v >= grid.n()) {
        throw std::out_of_range(std::string(what) + " index " + std::to_string(v) + " outside [0, " +
                                std::to_string(grid.n() - 1) + "]");
    }
}

int axis_cell(const GridSpec& grid, double v) {
    const int n = grid.n();
    const auto raw = static_cast<long long>(std::floor((v + 0.5) * n));
    return static_cast<int>(std::clamp<long long>(raw, 0, n - 1));
}

}  // namespace

bool contains(const GridSpec& grid, const CellIndex& c) {
    const int n = grid.n();
    return c.i >= 0 && c.i < n && c.j >= 0 && c.j < n && c.k >= 0 && c.k < n;
}

Vec3 cell_centroid(const GridSpec& grid, const CellIndex& c) {
    check_index(grid, c.i, "i");
    check_index(grid, c.j, "j");
    check_index(grid, c.k, "k");
    return {centroid_coord(grid, c.i), centroid_coord(grid, c.j), centroid_coord(grid, c.k)};
}

Ray ray_origin(const GridSpec& grid, int i, int j) {
    check_index(grid, i, "i");
    check_index(grid, j, "j");
    return {{centroid_coord(grid, i), centroid_coord(grid, j), centroid_coord(grid, 0)}, {0.0, 0.0, 1.0}};
}

double cell_hit_threshold(const GridSpec& grid) {
    return std::sqrt(6.0) / (2.0 * grid.n());
}

CellIndex cell_of_point(const GridSpec& grid, const Vec3& p) {
    for (int axis = 0; axis < 3; ++axis) {
        if (!(p[axis] >= -0.5 && p[axis] <= 0.5)) {
            throw std::domain_error("point outside the unit cube");
        }
    }
    return {axis_cell(grid, p.x), axis_cell(grid, p.y), axis_cell(grid, p.z)};
}

std::int64_t quantize(double v) {
    return static_cast<std::int64_t>(std::llround(v / kQuantum));
}

Mesh canonicalize(Mesh m) {
    auto key = [](const Triangle& t) {
        return std::make_tuple(t.cell.i, t.cell.j, t.cell.k,
                               quantize(t.a.x), quantize(t.a.y), quantize(t.a.z),
                               quantize(t.b.x), quantize(t.b.y), quantize(t.b.z),
                               quantize(t.c.x), quantize(t.c.y), quantize(t.c.z));
    };
    // Exact coordinates break ties between triangles whose quantized keys collide.
    auto exact = [](const Triangle& t) {
        return std::make_tuple(t.a.x, t.a.y, t.a.z, t.b.x, t.b.y, t.b.z, t.c.x, t.c.y, t.c.z);
    };
    std::sort(m.triangles.begin(), m.triangles.end(), [&](const Triangle& l, const Triangle& r) {
        const auto kl = key(l);
        const auto kr = key(r);
        if (kl != kr) {
            return kl < kr;
        }
        return exact(l) < exact(r);
    });
    return m;
}

}  // namespace gridhop

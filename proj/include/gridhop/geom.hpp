#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gridhop {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    constexpr bool operator==(const Vec3&) const = default;

    double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// N^3 cells over the cube [-1/2, 1/2]^3.
class GridSpec {
public:
    explicit GridSpec(int n);

    int n() const { return n_; }
    double cell_size() const { return 1.0 / n_; }

    /// Coordinate of lattice plane `a` (0..n) along any axis.
    double lattice(int a) const { return static_cast<double>(a) / n_ - 0.5; }

    /// Cell corner positions. Every polygonizer goes through this so that
    /// identical cells always see identical sample points.
    Vec3 corner(int a, int b, int c) const { return {lattice(a), lattice(b), lattice(c)}; }

private:
    int n_;
};

struct CellIndex {
    int i = 0;
    int j = 0;
    int k = 0;

    constexpr auto operator<=>(const CellIndex&) const = default;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;
};

struct Triangle {
    Vec3 a;
    Vec3 b;
    Vec3 c;
    CellIndex cell;

    constexpr bool operator==(const Triangle&) const = default;
};

struct Mesh {
    std::vector<Triangle> triangles;

    bool operator==(const Mesh&) const = default;
    std::size_t size() const { return triangles.size(); }
    bool empty() const { return triangles.empty(); }
};

/// Plain snapshot of the counters below.
struct TraceCounts {
    std::uint64_t field_evals = 0;
    std::uint64_t march_steps = 0;
    std::uint64_t cells_polygonized = 0;
    std::uint64_t rays_cast = 0;

    bool operator==(const TraceCounts&) const = default;
};

/// Work counters shared by concurrent workers. Increments are relaxed atomics;
/// sums do not depend on interleaving.
class TraceStats {
public:
    TraceStats() = default;
    TraceStats(const TraceStats& other) { *this = other; }
    TraceStats& operator=(const TraceStats& other);

    void add_field_evals(std::uint64_t n) { field_evals_.fetch_add(n, std::memory_order_relaxed); }
    void add_march_steps(std::uint64_t n) { march_steps_.fetch_add(n, std::memory_order_relaxed); }
    void add_cells_polygonized(std::uint64_t n) { cells_polygonized_.fetch_add(n, std::memory_order_relaxed); }
    void add_rays_cast(std::uint64_t n) { rays_cast_.fetch_add(n, std::memory_order_relaxed); }

    std::uint64_t field_evals() const { return field_evals_.load(std::memory_order_relaxed); }
    std::uint64_t march_steps() const { return march_steps_.load(std::memory_order_relaxed); }
    std::uint64_t cells_polygonized() const { return cells_polygonized_.load(std::memory_order_relaxed); }
    std::uint64_t rays_cast() const { return rays_cast_.load(std::memory_order_relaxed); }

    TraceCounts snapshot() const;

private:
    std::atomic<std::uint64_t> field_evals_{0};
    std::atomic<std::uint64_t> march_steps_{0};
    std::atomic<std::uint64_t> cells_polygonized_{0};
    std::atomic<std::uint64_t> rays_cast_{0};
};

Vec3 cell_centroid(const GridSpec& grid, const CellIndex& c);

/// Ray of column (i, j), starting at the centroid height of the bottom cell, pointing +z.
Ray ray_origin(const GridSpec& grid, int i, int j);

/// Largest distance from a point of a column axis to any point of the cell
/// it is in: sqrt((1/2N)^2 + (1/2N)^2 + (1/N)^2) = sqrt(6)/(2N).
double cell_hit_threshold(const GridSpec& grid);

/// Cell containing p. Internal boundaries go to the higher cell; the +1/2 faces are clamped.
CellIndex cell_of_point(const GridSpec& grid, const Vec3& p);

bool contains(const GridSpec& grid, const CellIndex& c);

/// Deterministic order: by cell (i, j, k), then by quantized vertex coordinates.
Mesh canonicalize(Mesh m);

/// Quantization step used for canonical sort keys and OBJ vertex sharing.
inline constexpr double kQuantum = 1.0 / (1 << 30);
std::int64_t quantize(double v);

}  // namespace gridhop

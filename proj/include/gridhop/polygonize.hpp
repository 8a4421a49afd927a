#pragma once

#include "gridhop/fields.hpp"
#include "gridhop/geom.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridhop {

/// A ray exhausted its step budget; the field is very likely not a valid bound.
class PolygonizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolygonizeConfig {
    GridSpec grid{1};
    int max_steps_per_ray = 64;
    std::optional<double> hit_threshold_override;
    std::size_t batch_size = 10000;
    int workers = 1;

    /// Defaults for an N^3 grid: 64 N steps per ray, batches of 10000 points, one worker.
    static PolygonizeConfig for_resolution(int n);

    double hit_threshold() const;
    void validate() const;
};

struct PolygonizeResult {
    Mesh mesh;  // canonical
    TraceStats stats;
    std::vector<std::string> warnings;
};

/// Evaluates the full (N+1)^3 corner lattice slab by slab and polygonizes every cell.
PolygonizeResult enumerate_all(const FieldEvaluator& field, const PolygonizeConfig& cfg);

/// Walks each seed to a cell crossing the surface, then grows the set of
/// crossing cells across faces that show a sign change.
PolygonizeResult continuation(const FieldEvaluator& field, const PolygonizeConfig& cfg, std::span<const Vec3> seeds);

/// Sphere traces one ray per grid column and polygonizes only the cells near
/// the points where the bound drops below the cell hit threshold.
PolygonizeResult gridhop(const FieldEvaluator& field, const PolygonizeConfig& cfg);

struct RaySample {
    double z = 0.0;
    double value = 0.0;  // signed field value at (x, y, z)
    bool hit = false;
};

struct RayTrace {
    int i = 0;
    int j = 0;
    std::vector<RaySample> samples;
    /// Slab ranges [first, last] polygonized after each hit, in order.
    std::vector<std::pair<int, int>> polygonized;
};

/// Runs the gridhop column logic for a single ray and records every sample.
RayTrace trace_ray(const FieldEvaluator& field, const PolygonizeConfig& cfg, int i, int j);

/// Evaluates points in chunks of `batch_size`, spread over `workers` threads.
void evaluate_points(const FieldEvaluator& field, std::span<const Vec3> points, std::span<double> out,
                     std::size_t batch_size, int workers);

/// Index of the first triangle where two canonical meshes differ, or nullopt when equal.
std::optional<std::size_t> first_difference(const Mesh& a, const Mesh& b);

}  // namespace gridhop

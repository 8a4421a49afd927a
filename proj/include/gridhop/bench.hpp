#pragma once

#include "gridhop/fields.hpp"
#include "gridhop/geom.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridhop {

enum class Method { Enum, Cont, Ghop };

std::string_view method_name(Method m);
/// Accepts "enum", "cont" and "ghop"; throws std::invalid_argument otherwise.
Method parse_method(std::string_view s);

struct BenchRecord {
    std::string scene;
    Method method = Method::Enum;
    int n = 0;
    std::uint64_t field_evals = 0;
    std::uint64_t march_steps = 0;
    std::uint64_t triangles = 0;
    double wall_time_s = 0.0;
    /// Equality with the enumeration mesh at the same n; empty when enumeration was not run.
    std::optional<bool> meshes_equal;
};

struct BenchScene {
    std::string id;
    Field field;
    std::vector<Vec3> seeds;  // needed for continuation
    bool fractal = false;
};

struct SeriesOptions {
    int workers = 1;
    std::size_t batch_size = 10000;
};

/// One record per (method, n), sorted by method (enum, cont, ghop) then n.
/// Resolutions must be strictly increasing and at least 8.
std::vector<BenchRecord> run_series(const BenchScene& scene, std::span<const Method> methods,
                                    std::span<const int> resolutions, const SeriesOptions& options = {});

/// Records whose mesh differs from enumeration on a non-fractal scene.
std::vector<BenchRecord> mismatches(std::span<const BenchRecord> records, bool fractal);

enum class Metric { Evals, Time };
Metric parse_metric(std::string_view s);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares fit of log(metric) against log(n). Needs >= 3 records with positive metric.
ExponentFit fit_exponent(std::span<const BenchRecord> records, Metric metric);

/// Same fit on raw (n, value) pairs.
ExponentFit fit_power_law(std::span<const double> n, std::span<const double> values);

inline constexpr std::string_view kCsvHeader = "scene,method,n,field_evals,march_steps,triangles,wall_time_s,meshes_equal";

void write_csv(std::ostream& out, std::span<const BenchRecord> records);
std::vector<BenchRecord> read_csv(std::istream& in);

}  // namespace gridhop

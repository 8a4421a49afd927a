#include "gridhop/polygonize.hpp"

#include "gridhop/marching_cubes.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gridhop {

PolygonizeConfig PolygonizeConfig::for_resolution(int n) {
    PolygonizeConfig cfg;
    cfg.grid = GridSpec(n);
    cfg.max_steps_per_ray = 64 * n;
    return cfg;
}

double PolygonizeConfig::hit_threshold() const {
    return hit_threshold_override ? *hit_threshold_override : cell_hit_threshold(grid);
}

void PolygonizeConfig::validate() const {
    if (max_steps_per_ray < grid.n()) {
        throw std::invalid_argument("max_steps_per_ray must be at least N");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be positive");
    }
    if (hit_threshold_override && !(*hit_threshold_override > 0.0)) {
        throw std::invalid_argument("hit threshold override must be positive");
    }
}

void evaluate_points(const FieldEvaluator& field, std::span<const Vec3> points, std::span<double> out,
                     std::size_t batch_size, int workers) {
    const std::size_t chunks = (points.size() + batch_size - 1) / batch_size;
    detail::parallel_blocks(chunks, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const std::size_t first = c * batch_size;
            const std::size_t count = std::min(batch_size, points.size() - first);
            field.evaluate_batch(points.subspan(first, count), out.subspan(first, count));
        }
    });
}

std::optional<std::size_t> first_difference(const Mesh& a, const Mesh& b) {
    const std::size_t common = std::min(a.size(), b.size());
    for (std::size_t t = 0; t < common; ++t) {
        if (!(a.triangles[t] == b.triangles[t])) {
            return t;
        }
    }
    if (a.size() != b.size()) {
        return common;
    }
    return std::nullopt;
}

namespace {

Mesh assemble(std::vector<std::vector<Triangle>>& parts) {
    Mesh mesh;
    std::size_t total = 0;
    for (const auto& p : parts) {
        total += p.size();
    }
    mesh.triangles.reserve(total);
    for (auto& p : parts) {
        mesh.triangles.insert(mesh.triangles.end(), p.begin(), p.end());
        std::vector<Triangle>().swap(p);
    }
    return canonicalize(std::move(mesh));
}

// ---------------------------------------------------------------------------
// Gridhop column state machine.
//
// Coverage argument: a sample r with |f(r)| = d > threshold clears the open
// ball of radius d, which contains the full column cross-section over
// (r - w, r + w), w = sqrt(d^2 - rho^2), rho = sqrt(2)/(2N) being the
// column's half diagonal. Consecutive balls of one march overlap, and the gap
// between the last ball and the next sample is thinner than 0.23/N, so when
// that sample hits, the gap lies in slabs k-1 and k. Polygonizing k-1..k+1 and
// restarting at the bottom of slab k+2 therefore leaves no cell with a zero
// that is neither cleared nor polygonized.
// ---------------------------------------------------------------------------
class ColumnMarcher {
public:
    ColumnMarcher(const GridSpec& grid, int i, int j, double threshold, int max_steps)
        : grid_(&grid), i_(i), j_(j), threshold_(threshold), max_steps_(max_steps) {
        const Ray ray = ray_origin(grid, i, j);
        x_ = ray.origin.x;
        y_ = ray.origin.y;
        z_ = ray.origin.z;
        const double half_cell = 0.5 * grid.cell_size();
        rho2_ = 2.0 * half_cell * half_cell;
    }

    bool done() const { return state_ == State::Done; }
    bool failed() const { return state_ == State::Failed; }
    const std::string& error() const { return error_; }

    std::size_t request_size() const {
        switch (state_) {
            case State::March:
                return 1;
            case State::Corners:
                return 4 * static_cast<std::size_t>(hi_ - lo_ + 2);
            default:
                return 0;
        }
    }

    void request(std::span<Vec3> out) const {
        if (state_ == State::March) {
            out[0] = {x_, y_, z_};
            return;
        }
        std::size_t n = 0;
        for (int level = lo_; level <= hi_ + 1; ++level) {
            for (int c = 0; c < 4; ++c) {
                out[n++] = grid_->corner(i_ + (c & 1), j_ + (c >> 1), level);
            }
        }
    }

    void consume(std::span<const double> values, std::vector<Triangle>& tris, TraceStats& stats, RayTrace* trace) {
        if (state_ == State::March) {
            consume_sample(values[0], stats, trace);
        } else if (state_ == State::Corners) {
            consume_corners(values, tris, stats, trace);
        }
    }

private:
    enum class State { March, Corners, Done, Failed };

    void consume_sample(double value, TraceStats& stats, RayTrace* trace) {
        const double d = std::abs(value);
        ++steps_;
        stats.add_march_steps(1);
        const bool hit = d <= threshold_;
        if (trace) {
            trace->samples.push_back({z_, value, hit});
        }
        if (steps_ > max_steps_) {
            std::ostringstream msg;
            msg << "ray (" << i_ << ", " << j_ << ") exhausted its budget of " << max_steps_
                << " steps at z=" << z_ << " with |f|=" << d;
            error_ = msg.str();
            state_ = State::Failed;
            return;
        }
        const int n = grid_->n();
        if (hit) {
            const auto raw = static_cast<long long>(std::floor((z_ + 0.5) * n));
            const int k = static_cast<int>(std::clamp<long long>(raw, next_slab_, n));
            lo_ = std::max(k - 1, next_slab_);
            hi_ = std::min(k + 1, n - 1);
            state_ = State::Corners;
            return;
        }
        const double w = d * d > rho2_ ? std::sqrt(d * d - rho2_) : 0.0;
        if (z_ + w > 0.5 || z_ >= 0.5) {
            state_ = State::Done;
            return;
        }
        z_ = std::min(z_ + d, 0.5);
    }

    void consume_corners(std::span<const double> values, std::vector<Triangle>& tris, TraceStats& stats,
                         RayTrace* trace) {
        for (int slab = lo_; slab <= hi_; ++slab) {
            const std::size_t base = 4 * static_cast<std::size_t>(slab - lo_);
            CellCorners corners;
            for (int c = 0; c < 8; ++c) {
                corners.values[c] = values[base + static_cast<std::size_t>(c)];
            }
            polygonize_cell(*grid_, {i_, j_, slab}, corners, tris);
        }
        stats.add_cells_polygonized(static_cast<std::uint64_t>(hi_ - lo_ + 1));
        if (trace) {
            trace->polygonized.emplace_back(lo_, hi_);
        }
        next_slab_ = hi_ + 1;
        if (next_slab_ >= grid_->n()) {
            state_ = State::Done;
            return;
        }
        z_ = grid_->lattice(next_slab_);
        state_ = State::March;
    }

    const GridSpec* grid_;
    int i_;
    int j_;
    double threshold_;
    int max_steps_;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
    double rho2_ = 0.0;
    int steps_ = 0;
    int next_slab_ = 0;  // every slab below is cleared or polygonized
    int lo_ = 0;
    int hi_ = 0;
    State state_ = State::March;
    std::string error_;
};

// ---------------------------------------------------------------------------
// Continuation helpers.
// ---------------------------------------------------------------------------
class CornerCache {
public:
    explicit CornerCache(const GridSpec& grid) : grid_(grid), m_(grid.n() + 1) {}

    std::int64_t key(int a, int b, int c) const {
        return a + m_ * (static_cast<std::int64_t>(b) + m_ * static_cast<std::int64_t>(c));
    }

    void ensure(std::span<const CellIndex> cells, const FieldEvaluator& field, const PolygonizeConfig& cfg,
                TraceStats& stats) {
        std::vector<std::int64_t> keys;
        std::vector<Vec3> points;
        std::unordered_set<std::int64_t> pending;
        for (const CellIndex& cell : cells) {
            for (int c = 0; c < 8; ++c) {
                const int a = cell.i + (c & 1);
                const int b = cell.j + ((c >> 1) & 1);
                const int z = cell.k + (c >> 2);
                const auto k = key(a, b, z);
                if (values_.count(k) == 0 && pending.insert(k).second) {
                    keys.push_back(k);
                    points.push_back(grid_.corner(a, b, z));
                }
            }
        }
        std::vector<double> out(points.size());
        evaluate_points(field, points, out, cfg.batch_size, cfg.workers);
        stats.add_field_evals(points.size());
        for (std::size_t n = 0; n < keys.size(); ++n) {
            values_.emplace(keys[n], out[n]);
        }
    }

    CellCorners corners(const CellIndex& cell) const {
        CellCorners out;
        for (int c = 0; c < 8; ++c) {
            out.values[c] = values_.at(key(cell.i + (c & 1), cell.j + ((c >> 1) & 1), cell.k + (c >> 2)));
        }
        return out;
    }

private:
    const GridSpec& grid_;
    std::int64_t m_;
    std::unordered_map<std::int64_t, double> values_;
};

// Corner sets of the six faces: -x, +x, -y, +y, -z, +z.
constexpr int kFaceCorners[6][4] = {{0, 2, 4, 6}, {1, 3, 5, 7}, {0, 1, 4, 5}, {2, 3, 6, 7}, {0, 1, 2, 3}, {4, 5, 6, 7}};
constexpr int kFaceStep[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

bool face_changes_sign(const CellCorners& corners, int face) {
    const bool first = is_inside(corners.values[kFaceCorners[face][0]]);
    for (int n = 1; n < 4; ++n) {
        if (is_inside(corners.values[kFaceCorners[face][n]]) != first) {
            return true;
        }
    }
    return false;
}

Vec3 clamp_to_cube(Vec3 p) {
    for (int axis = 0; axis < 3; ++axis) {
        p[axis] = std::clamp(p[axis], -0.5, 0.5);
    }
    return p;
}

}  // namespace

PolygonizeResult enumerate_all(const FieldEvaluator& field, const PolygonizeConfig& cfg) {
    cfg.validate();
    const GridSpec& grid = cfg.grid;
    const int n = grid.n();
    const std::size_t m = static_cast<std::size_t>(n) + 1;

    PolygonizeResult result;
    std::vector<Vec3> points(m * m);
    std::vector<double> lower(m * m);
    std::vector<double> upper(m * m);

    auto eval_plane = [&](int level, std::vector<double>& out) {
        for (std::size_t b = 0; b < m; ++b) {
            for (std::size_t a = 0; a < m; ++a) {
                points[a + m * b] = grid.corner(static_cast<int>(a), static_cast<int>(b), level);
            }
        }
        evaluate_points(field, points, out, cfg.batch_size, cfg.workers);
        result.stats.add_field_evals(points.size());
    };

    std::vector<std::vector<Triangle>> rows(static_cast<std::size_t>(n));
    eval_plane(0, lower);
    for (int k = 0; k < n; ++k) {
        eval_plane(k + 1, upper);
        detail::parallel_blocks(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
                    CellCorners corners;
                    for (int c = 0; c < 8; ++c) {
                        const std::size_t idx = (i + (c & 1)) + m * (j + ((c >> 1) & 1));
                        corners.values[c] = (c >> 2) ? upper[idx] : lower[idx];
                    }
                    polygonize_cell(grid, {static_cast<int>(i), static_cast<int>(j), k}, corners, rows[j]);
                }
            }
        });
        std::swap(lower, upper);
    }
    result.stats.add_cells_polygonized(static_cast<std::uint64_t>(n) * n * n);
    result.mesh = assemble(rows);
    return result;
}

PolygonizeResult gridhop(const FieldEvaluator& field, const PolygonizeConfig& cfg) {
    cfg.validate();
    const GridSpec& grid = cfg.grid;
    const int n = grid.n();
    const double threshold = cfg.hit_threshold();

    PolygonizeResult result;
    std::vector<ColumnMarcher> columns;
    columns.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            columns.emplace_back(grid, i, j, threshold, cfg.max_steps_per_ray);
        }
    }
    result.stats.add_rays_cast(columns.size());

    std::vector<std::vector<Triangle>> tris(columns.size());
    std::vector<std::size_t> active(columns.size());
    for (std::size_t c = 0; c < active.size(); ++c) {
        active[c] = c;
    }

    std::vector<std::size_t> offsets;
    std::vector<Vec3> points;
    std::vector<double> values;
    while (!active.empty()) {
        // Every active column submits its next query; all of them go out in shared batches.
        offsets.assign(active.size() + 1, 0);
        for (std::size_t a = 0; a < active.size(); ++a) {
            offsets[a + 1] = offsets[a] + columns[active[a]].request_size();
        }
        points.resize(offsets.back());
        values.resize(offsets.back());
        for (std::size_t a = 0; a < active.size(); ++a) {
            columns[active[a]].request(std::span(points).subspan(offsets[a], offsets[a + 1] - offsets[a]));
        }
        evaluate_points(field, points, values, cfg.batch_size, cfg.workers);
        result.stats.add_field_evals(points.size());

        detail::parallel_blocks(active.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t a = begin; a < end; ++a) {
                const std::size_t c = active[a];
                columns[c].consume(std::span<const double>(values).subspan(offsets[a], offsets[a + 1] - offsets[a]),
                                   tris[c], result.stats, nullptr);
            }
        });

        for (std::size_t c : active) {
            if (columns[c].failed()) {
                throw PolygonizeError(columns[c].error());
            }
        }
        std::erase_if(active, [&](std::size_t c) { return columns[c].done(); });
    }

    result.mesh = assemble(tris);
    return result;
}

RayTrace trace_ray(const FieldEvaluator& field, const PolygonizeConfig& cfg, int i, int j) {
    cfg.validate();
    ColumnMarcher column(cfg.grid, i, j, cfg.hit_threshold(), cfg.max_steps_per_ray);
    RayTrace trace;
    trace.i = i;
    trace.j = j;
    TraceStats stats;
    std::vector<Triangle> tris;
    std::vector<Vec3> points;
    std::vector<double> values;
    while (!column.done()) {
        points.resize(column.request_size());
        values.resize(points.size());
        column.request(points);
        field.evaluate_batch(points, values);
        column.consume(values, tris, stats, &trace);
        if (column.failed()) {
            throw PolygonizeError(column.error());
        }
    }
    return trace;
}

PolygonizeResult continuation(const FieldEvaluator& field, const PolygonizeConfig& cfg, std::span<const Vec3> seeds) {
    cfg.validate();
    if (seeds.empty()) {
        throw std::invalid_argument("continuation needs at least one seed");
    }
    const GridSpec& grid = cfg.grid;
    const int n = grid.n();
    const double threshold = cell_hit_threshold(grid);
    const double probe = 0.5 * grid.cell_size();
    const int budget = 4 * n;

    PolygonizeResult result;
    CornerCache cache(grid);
    std::vector<Triangle> tris;
    auto cell_key = [n](const CellIndex& c) {
        return c.i + static_cast<std::int64_t>(n) * (c.j + static_cast<std::int64_t>(n) * c.k);
    };
    std::unordered_set<std::int64_t> visited;

    auto crossing = [&](const CellIndex& c) {
        const CellIndex one[1] = {c};
        cache.ensure(one, field, cfg, result.stats);
        return surface_crosses_cell(cache.corners(c));
    };
    auto eval = [&](const Vec3& p) {
        result.stats.add_field_evals(1);
        return field.evaluate(p);
    };

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const Vec3& seed = seeds[s];
        if (!is_finite(seed) || std::abs(seed.x) > 0.5 || std::abs(seed.y) > 0.5 || std::abs(seed.z) > 0.5) {
            throw std::invalid_argument("continuation seed outside the unit cube");
        }

        // Walk towards the surface until some cell shows a sign change.
        std::optional<CellIndex> start;
        Vec3 p = seed;
        for (int step = 0; step < budget && !start; ++step) {
            const CellIndex c = cell_of_point(grid, p);
            if (crossing(c)) {
                start = c;
                break;
            }
            result.stats.add_march_steps(1);
            const double d = eval(p);
            if (std::abs(d) <= threshold) {
                for (int dk = -1; dk <= 1 && !start; ++dk) {
                    for (int dj = -1; dj <= 1 && !start; ++dj) {
                        for (int di = -1; di <= 1 && !start; ++di) {
                            const CellIndex nb{c.i + di, c.j + dj, c.k + dk};
                            if (contains(grid, nb) && crossing(nb)) {
                                start = nb;
                            }
                        }
                    }
                }
                if (start) {
                    break;
                }
            }
            Vec3 grad;
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 hi = p;
                Vec3 lo = p;
                hi[axis] += probe;
                lo[axis] -= probe;
                grad[axis] = eval(hi) - eval(lo);
            }
            const double g = norm(grad);
            const double sign = d < 0.0 ? 1.0 : -1.0;
            const double length = std::max(std::abs(d), probe);
            if (g == 0.0) {
                // Symmetric point (a sphere centre, a tube axis): any direction will do.
                const Vec3 diagonal = Vec3{1.0, 1.0, 1.0} / std::sqrt(3.0);
                const Vec3 next = clamp_to_cube(p + diagonal * length);
                if (next == p) {
                    break;
                }
                p = next;
                continue;
            }
            p = clamp_to_cube(p + grad * (sign * length / g));
        }
        if (!start) {
            std::ostringstream msg;
            msg << "seed " << s << " (" << seed.x << ", " << seed.y << ", " << seed.z
                << ") did not reach the surface within " << budget << " probes";
            result.warnings.push_back(msg.str());
            continue;
        }
        if (!visited.insert(cell_key(*start)).second) {
            continue;
        }

        std::vector<CellIndex> frontier{*start};
        while (!frontier.empty()) {
            cache.ensure(frontier, field, cfg, result.stats);
            std::vector<CellIndex> next;
            for (const CellIndex& cell : frontier) {
                const CellCorners corners = cache.corners(cell);
                polygonize_cell(grid, cell, corners, tris);
                result.stats.add_cells_polygonized(1);
                for (int face = 0; face < 6; ++face) {
                    const CellIndex nb{cell.i + kFaceStep[face][0], cell.j + kFaceStep[face][1],
                                       cell.k + kFaceStep[face][2]};
                    if (contains(grid, nb) && face_changes_sign(corners, face) && visited.insert(cell_key(nb)).second) {
                        next.push_back(nb);
                    }
                }
            }
            frontier = std::move(next);
        }
    }

    result.mesh = canonicalize(Mesh{std::move(tris)});
    return result;
}

}  // namespace gridhop

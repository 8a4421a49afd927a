#include "gridhop/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gridhop {

void FieldEvaluator::evaluate_batch(std::span<const Vec3> points, std::span<double> out) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        out[i] = evaluate(points[i]);
    }
}

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw FieldError(message);
    }
}

void require_positive(double v, const char* what) {
    require(std::isfinite(v) && v > 0.0, std::string(what) + " must be positive and finite");
}

double length2(double a, double b) { return std::sqrt(a * a + b * b); }

template <typename Fn>
class Lambda final : public FieldEvaluator {
public:
    explicit Lambda(Fn fn) : fn_(std::move(fn)) {}
    double evaluate(const Vec3& p) const override { return fn_(p); }

private:
    Fn fn_;
};

template <typename Fn>
Field make_field(Fn fn) {
    return std::make_shared<Lambda<Fn>>(std::move(fn));
}

class Union final : public FieldEvaluator {
public:
    explicit Union(std::vector<Field> fields) : fields_(std::move(fields)) {}

    double evaluate(const Vec3& p) const override {
        double d = fields_.front()->evaluate(p);
        for (std::size_t i = 1; i < fields_.size(); ++i) {
            d = std::min(d, fields_[i]->evaluate(p));
        }
        return d;
    }

    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override {
        fields_.front()->evaluate_batch(points, out);
        std::vector<double> tmp(points.size());
        for (std::size_t i = 1; i < fields_.size(); ++i) {
            fields_[i]->evaluate_batch(points, tmp);
            for (std::size_t k = 0; k < points.size(); ++k) {
                out[k] = std::min(out[k], tmp[k]);
            }
        }
    }

private:
    std::vector<Field> fields_;
};

class Intersection final : public FieldEvaluator {
public:
    explicit Intersection(std::vector<Field> fields) : fields_(std::move(fields)) {}

    double evaluate(const Vec3& p) const override {
        double d = fields_.front()->evaluate(p);
        for (std::size_t i = 1; i < fields_.size(); ++i) {
            d = std::max(d, fields_[i]->evaluate(p));
        }
        return d;
    }

    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override {
        fields_.front()->evaluate_batch(points, out);
        std::vector<double> tmp(points.size());
        for (std::size_t i = 1; i < fields_.size(); ++i) {
            fields_[i]->evaluate_batch(points, tmp);
            for (std::size_t k = 0; k < points.size(); ++k) {
                out[k] = std::max(out[k], tmp[k]);
            }
        }
    }

private:
    std::vector<Field> fields_;
};

class Translated final : public FieldEvaluator {
public:
    Translated(Field f, const Vec3& offset) : f_(std::move(f)), offset_(offset) {}

    double evaluate(const Vec3& p) const override { return f_->evaluate(p - offset_); }

    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override {
        std::vector<Vec3> moved(points.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            moved[k] = points[k] - offset_;
        }
        f_->evaluate_batch(moved, out);
    }

private:
    Field f_;
    Vec3 offset_;
};

class Shrunk final : public FieldEvaluator {
public:
    Shrunk(Field f, double lambda) : f_(std::move(f)), lambda_(lambda) {}

    double evaluate(const Vec3& p) const override { return f_->evaluate(p) / lambda_; }

    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override {
        f_->evaluate_batch(points, out);
        for (double& v : out) {
            v /= lambda_;
        }
    }

private:
    Field f_;
    double lambda_;
};

class Scaled final : public FieldEvaluator {
public:
    Scaled(Field f, double s) : f_(std::move(f)), s_(s) {}

    double evaluate(const Vec3& p) const override { return s_ * f_->evaluate(p / s_); }

    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override {
        std::vector<Vec3> moved(points.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            moved[k] = points[k] / s_;
        }
        f_->evaluate_batch(moved, out);
        for (double& v : out) {
            v = s_ * v;
        }
    }

private:
    Field f_;
    double s_;
};

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const Vec3 ap = p - a;
    const double t = std::clamp(dot(ap, ab) / dot(ab, ab), 0.0, 1.0);
    return norm(ap - ab * t);
}

void check_fields(const std::vector<Field>& fields, const char* what) {
    require(!fields.empty(), std::string(what) + " needs at least one field");
    for (const auto& f : fields) {
        require(f != nullptr, std::string(what) + " member is null");
    }
}

}  // namespace

double plane_distance(const PlaneField& f, const Vec3& p) {
    return dot(f.normal, p - f.point_on_plane);
}

double box_distance(const Vec3& h, const Vec3& p) {
    // Faces at +-h on each axis; outward distances p_i - h_i and -p_i - h_i.
    double d = p.x - h.x;
    d = std::max(d, -p.x - h.x);
    d = std::max(d, p.y - h.y);
    d = std::max(d, -p.y - h.y);
    d = std::max(d, p.z - h.z);
    d = std::max(d, -p.z - h.z);
    return d;
}

double exact_box_distance(const Vec3& h, const Vec3& p) {
    const Vec3 q{std::abs(p.x) - h.x, std::abs(p.y) - h.y, std::abs(p.z) - h.z};
    const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    return norm(outside) + std::min(std::max({q.x, q.y, q.z}), 0.0);
}

Field plane(const PlaneField& f) {
    require(is_finite(f.normal) && is_finite(f.point_on_plane), "plane parameters must be finite");
    require(std::abs(norm(f.normal) - 1.0) <= 1e-12, "plane normal must have unit length");
    return make_field([f](const Vec3& p) { return plane_distance(f, p); });
}

Field box(const Vec3& h) {
    require_positive(h.x, "box half extent x");
    require_positive(h.y, "box half extent y");
    require_positive(h.z, "box half extent z");
    return make_field([h](const Vec3& p) { return box_distance(h, p); });
}

Field box_exact(const Vec3& h) {
    require_positive(h.x, "box half extent x");
    require_positive(h.y, "box half extent y");
    require_positive(h.z, "box half extent z");
    return make_field([h](const Vec3& p) { return exact_box_distance(h, p); });
}

Field sphere(double radius) {
    require_positive(radius, "sphere radius");
    return make_field([radius](const Vec3& p) { return norm(p) - radius; });
}

Field torus(double major_radius, double minor_radius) {
    require_positive(major_radius, "torus major radius");
    require_positive(minor_radius, "torus minor radius");
    return make_field([major_radius, minor_radius](const Vec3& p) {
        return length2(length2(p.x, p.y) - major_radius, p.z) - minor_radius;
    });
}

Field cylinder(double radius, double height) {
    require_positive(radius, "cylinder radius");
    require_positive(height, "cylinder height");
    const double half = 0.5 * height;
    return make_field([radius, half](const Vec3& p) {
        const double dr = length2(p.x, p.y) - radius;
        const double dz = std::abs(p.z) - half;
        return std::min(std::max(dr, dz), 0.0) + length2(std::max(dr, 0.0), std::max(dz, 0.0));
    });
}

Field cone(double half_angle, double height) {
    require(std::isfinite(half_angle) && half_angle > 0.0 && half_angle < std::numbers::pi / 2,
            "cone half angle must be in (0, pi/2)");
    require_positive(height, "cone height");
    const double c = std::cos(half_angle);
    const double s = std::sin(half_angle);
    const double half = 0.5 * height;
    return make_field([c, s, half](const Vec3& p) {
        // Lateral surface as a line through the apex in the (radial, z) half plane.
        const double lateral = c * length2(p.x, p.y) + s * (p.z - half);
        const double base = -p.z - half;
        return std::max(lateral, base);
    });
}

Field capsule(const Vec3& a, const Vec3& b, double radius) {
    require(is_finite(a) && is_finite(b), "capsule endpoints must be finite");
    require(!(a == b), "capsule endpoints must be distinct");
    require_positive(radius, "capsule radius");
    return make_field([a, b, radius](const Vec3& p) { return segment_distance(p, a, b) - radius; });
}

Field hex_prism(double apothem, double height) {
    require_positive(apothem, "hex prism apothem");
    require_positive(height, "hex prism height");
    const double half = 0.5 * height;
    constexpr double kCos30 = 0.86602540378443864676;
    return make_field([apothem, half](const Vec3& p) {
        const double qx = std::abs(p.x);
        const double qy = std::abs(p.y);
        const double side = std::max(qx * kCos30 + qy * 0.5, qy) - apothem;
        return std::max(std::abs(p.z) - half, side);
    });
}

Field union_of(std::vector<Field> fields) {
    check_fields(fields, "union");
    if (fields.size() == 1) {
        return fields.front();
    }
    return std::make_shared<Union>(std::move(fields));
}

Field intersection_of(std::vector<Field> fields) {
    check_fields(fields, "intersection");
    if (fields.size() == 1) {
        return fields.front();
    }
    return std::make_shared<Intersection>(std::move(fields));
}

Field translate(Field f, const Vec3& offset) {
    require(f != nullptr, "translate of null field");
    require(is_finite(offset), "translation must be finite");
    return std::make_shared<Translated>(std::move(f), offset);
}

Field shrink(Field f, double lambda) {
    require(f != nullptr, "shrink of null field");
    require(std::isfinite(lambda) && lambda >= 1.0, "shrink factor must be >= 1");
    return std::make_shared<Shrunk>(std::move(f), lambda);
}

Field scale_uniform(Field f, double s) {
    require(f != nullptr, "scale of null field");
    require_positive(s, "scale factor");
    return std::make_shared<Scaled>(std::move(f), s);
}

// --- genus 2 ----------------------------------------------------------------

LipschitzNormalized::LipschitzNormalized(std::function<double(const Vec3&)> implicit, double lipschitz_bound)
    : implicit_(std::move(implicit)), lipschitz_(lipschitz_bound) {
    require(static_cast<bool>(implicit_), "implicit function is empty");
    require_positive(lipschitz_bound, "Lipschitz bound");
}

double estimate_lipschitz(const std::function<double(const Vec3&)>& g, double half_extent, int samples,
                          double safety) {
    require_positive(half_extent, "Lipschitz domain half extent");
    require(samples >= 2, "Lipschitz estimate needs at least 2 samples per axis");
    constexpr double h = 1e-4;
    const double spacing = 2.0 * half_extent / (samples - 1);
    double max_grad = 0.0;
    for (int a = 0; a < samples; ++a) {
        for (int b = 0; b < samples; ++b) {
            for (int c = 0; c < samples; ++c) {
                const Vec3 p{-half_extent + a * spacing, -half_extent + b * spacing, -half_extent + c * spacing};
                const Vec3 grad{(g(p + Vec3{h, 0, 0}) - g(p - Vec3{h, 0, 0})) / (2 * h),
                                (g(p + Vec3{0, h, 0}) - g(p - Vec3{0, h, 0})) / (2 * h),
                                (g(p + Vec3{0, 0, h}) - g(p - Vec3{0, 0, h})) / (2 * h)};
                max_grad = std::max(max_grad, norm(grad));
            }
        }
    }
    return max_grad * safety;
}

double genus2_implicit(const Vec3& p) {
    const double x2 = p.x * p.x;
    const double y2 = p.y * p.y;
    const double z2 = p.z * p.z;
    const double r2 = x2 + y2;
    return 2.0 * p.y * (y2 - 3.0 * x2) * (1.0 - z2) + r2 * r2 - (9.0 * z2 - 1.0) * (1.0 - z2);
}

std::shared_ptr<const LipschitzNormalized> genus2(double half_extent) {
    const double lipschitz = estimate_lipschitz(genus2_implicit, half_extent);
    return std::make_shared<LipschitzNormalized>(genus2_implicit, lipschitz);
}

BlockLipschitz::BlockLipschitz(std::function<double(const Vec3&)> implicit, double half_extent, int blocks,
                               int samples_per_block, double safety)
    : implicit_(std::move(implicit)), half_extent_(half_extent), blocks_(blocks) {
    require(static_cast<bool>(implicit_), "implicit function is empty");
    require_positive(half_extent, "block domain half extent");
    require(blocks >= 1 && blocks <= 256, "block count must be in [1, 256]");
    require(samples_per_block >= 1 && samples_per_block <= 64, "samples per block must be in [1, 64]");
    require(std::isfinite(safety) && safety >= 1.0, "safety factor must be >= 1");
    block_ = 2.0 * half_extent / blocks;

    // Gradient maxima per block over a ring of blocks one wider than the domain.
    const int ext = blocks + 2;
    const int s = samples_per_block;
    const int lattice = ext * s + 1;
    const double spacing = block_ / s;
    const double origin = -half_extent - block_;
    constexpr double h = 1e-4;
    std::vector<double> block_max(static_cast<std::size_t>(ext) * ext * ext, 0.0);
    auto bidx = [ext](int a, int b, int c) { return (static_cast<std::size_t>(c) * ext + b) * ext + a; };
    for (int k = 0; k < lattice; ++k) {
        for (int j = 0; j < lattice; ++j) {
            for (int i = 0; i < lattice; ++i) {
                const Vec3 p{origin + i * spacing, origin + j * spacing, origin + k * spacing};
                const Vec3 grad{(implicit_(p + Vec3{h, 0, 0}) - implicit_(p - Vec3{h, 0, 0})) / (2 * h),
                                (implicit_(p + Vec3{0, h, 0}) - implicit_(p - Vec3{0, h, 0})) / (2 * h),
                                (implicit_(p + Vec3{0, 0, h}) - implicit_(p - Vec3{0, 0, h})) / (2 * h)};
                const double g = norm(grad);
                // Lattice points on block faces count for every block they touch.
                for (int c = std::max(0, (k - 1) / s); c <= std::min(ext - 1, k / s); ++c) {
                    for (int b = std::max(0, (j - 1) / s); b <= std::min(ext - 1, j / s); ++b) {
                        for (int a = std::max(0, (i - 1) / s); a <= std::min(ext - 1, i / s); ++a) {
                            double& m = block_max[bidx(a, b, c)];
                            m = std::max(m, g);
                        }
                    }
                }
            }
        }
    }
    bounds_.assign(static_cast<std::size_t>(blocks) * blocks * blocks, 0.0);
    for (int c = 0; c < blocks; ++c) {
        for (int b = 0; b < blocks; ++b) {
            for (int a = 0; a < blocks; ++a) {
                double m = 0.0;
                for (int dc = 0; dc < 3; ++dc) {
                    for (int db = 0; db < 3; ++db) {
                        for (int da = 0; da < 3; ++da) {
                            m = std::max(m, block_max[bidx(a + da, b + db, c + dc)]);
                        }
                    }
                }
                require(std::isfinite(m), "implicit function gradient is not finite");
                // A flat neighbourhood still needs a positive divisor.
                bounds_[(static_cast<std::size_t>(c) * blocks + b) * blocks + a] =
                    std::max(m * safety, std::numeric_limits<double>::min());
            }
        }
    }
}

int BlockLipschitz::index(double v) const {
    const double t = std::floor((v + half_extent_) / block_);
    return static_cast<int>(std::clamp(t, 0.0, static_cast<double>(blocks_ - 1)));
}

double BlockLipschitz::block_bound(int a, int b, int c) const {
    return bounds_.at((static_cast<std::size_t>(c) * blocks_ + b) * blocks_ + a);
}

double BlockLipschitz::max_bound() const { return *std::max_element(bounds_.begin(), bounds_.end()); }

double BlockLipschitz::evaluate(const Vec3& p) const {
    const double v = implicit_(p);
    const double d = std::min(std::abs(v) / block_bound(index(p.x), index(p.y), index(p.z)), block_);
    return v < 0.0 ? -d : d;
}

std::shared_ptr<const BlockLipschitz> genus2_blocks(double half_extent, int blocks) {
    return std::make_shared<BlockLipschitz>(genus2_implicit, half_extent, blocks);
}

// --- knot -------------------------------------------------------------------

Vec3 trefoil_point(double t) {
    constexpr double s = 0.1;
    const double r = 2.0 + std::cos(3.0 * t);
    return {s * r * std::cos(2.0 * t), s * r * std::sin(2.0 * t), s * std::sin(3.0 * t)};
}

KnotTube::KnotTube(int curve_samples, double tube_radius) : radius_(tube_radius) {
    require(curve_samples >= 8, "knot needs at least 8 curve samples");
    require_positive(tube_radius, "knot tube radius");

    const double step = 2.0 * std::numbers::pi / curve_samples;
    points_.reserve(curve_samples + 1);
    for (int i = 0; i < curve_samples; ++i) {
        points_.push_back(trefoil_point(i * step));
    }
    points_.push_back(points_.front());

    // Largest deviation of the curve from each chord.
    constexpr int kProbe = 64;
    delta_ = 0.0;
    for (int i = 0; i < curve_samples; ++i) {
        for (int m = 1; m < kProbe; ++m) {
            const Vec3 c = trefoil_point((i + static_cast<double>(m) / kProbe) * step);
            delta_ = std::max(delta_, segment_distance(c, points_[i], points_[i + 1]));
        }
    }
    require(tube_radius > delta_, "knot tube radius must exceed the chord sagitta " + std::to_string(delta_));

    constexpr int kChunk = 16;
    for (int first = 0; first < curve_samples; first += kChunk) {
        const int last = std::min(first + kChunk, curve_samples);
        Vec3 center{};
        for (int i = first; i <= last; ++i) {
            center = center + points_[i];
        }
        center = center / static_cast<double>(last - first + 1);
        double r = 0.0;
        for (int i = first; i <= last; ++i) {
            r = std::max(r, norm(points_[i] - center));
        }
        chunks_.push_back({center, r, first, last});
    }
}

double KnotTube::polyline_distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Chunk& chunk : chunks_) {
        // Segments lie in the chunk's bounding sphere, so none of them can beat `best`.
        if (norm(p - chunk.center) - chunk.radius >= best) {
            continue;
        }
        for (int i = chunk.first; i < chunk.last; ++i) {
            best = std::min(best, segment_distance(p, points_[i], points_[i + 1]));
        }
    }
    return best;
}

double KnotTube::polyline_distance_brute(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        best = std::min(best, segment_distance(p, points_[i], points_[i + 1]));
    }
    return best;
}

double KnotTube::evaluate(const Vec3& p) const {
    return polyline_distance(p) - radius_ - delta_;
}

std::shared_ptr<const KnotTube> knot_tube(int curve_samples, double tube_radius) {
    return std::make_shared<KnotTube>(curve_samples, tube_radius);
}

// --- Sierpinski -------------------------------------------------------------

namespace {

// Bound for the tetrahedron with vertices (1,1,1), (-1,-1,1), (1,-1,-1), (-1,1,-1).
double tetra_bound(const Vec3& p) {
    constexpr double inv_sqrt3 = 0.57735026918962576451;
    const double a = -(p.x + p.y + p.z) - 1.0;
    const double b = p.x + p.y - p.z - 1.0;
    const double c = -p.x + p.y + p.z - 1.0;
    const double d = p.x - p.y + p.z - 1.0;
    return std::max({a, b, c, d}) * inv_sqrt3;
}

}  // namespace

Field sierpinski_tetra(int iterations) {
    require(iterations >= 1 && iterations <= 24, "sierpinski iterations must be in [1, 24]");
    return make_field([iterations](const Vec3& world) {
        Vec3 p = world / kSierpinskiScale;
        double scale = 1.0;
        for (int n = 0; n < iterations; ++n) {
            // Reflections across x+y=0, x+z=0, y+z=0 towards the (1,1,1) corner.
            if (p.x + p.y < 0.0) {
                const double t = -p.x;
                p.x = -p.y;
                p.y = t;
            }
            if (p.x + p.z < 0.0) {
                const double t = -p.x;
                p.x = -p.z;
                p.z = t;
            }
            if (p.y + p.z < 0.0) {
                const double t = -p.y;
                p.y = -p.z;
                p.z = t;
            }
            p = p * 2.0 - Vec3{1.0, 1.0, 1.0};
            scale *= 0.5;
        }
        return tetra_bound(p) * scale * kSierpinskiScale;
    });
}

}  // namespace gridhop

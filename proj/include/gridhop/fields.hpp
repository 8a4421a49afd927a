#pragma once

#include "gridhop/geom.hpp"

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridhop {

/// Invalid parameters passed to a field constructor.
class FieldError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A signed distance bound: |f(p)| never exceeds the distance from p to the
/// zero set of f, negative inside. Implementations are immutable and may be
/// evaluated concurrently.
class FieldEvaluator {
public:
    virtual ~FieldEvaluator() = default;

    virtual double evaluate(const Vec3& p) const = 0;

    /// Must produce bit-identical results to calling evaluate() per point.
    virtual void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const;

    double operator()(const Vec3& p) const { return evaluate(p); }
};

using Field = std::shared_ptr<const FieldEvaluator>;

// --- planes and boxes -------------------------------------------------------

struct PlaneField {
    Vec3 normal;          // unit length
    Vec3 point_on_plane;
};

double plane_distance(const PlaneField& f, const Vec3& p);

/// Max of the six face-plane distances. A bound, not the exact distance.
double box_distance(const Vec3& half_extents, const Vec3& p);

/// Exact Euclidean signed distance to an axis-aligned box.
double exact_box_distance(const Vec3& half_extents, const Vec3& p);

Field plane(const PlaneField& f);
Field box(const Vec3& half_extents);
Field box_exact(const Vec3& half_extents);

// --- primitives -------------------------------------------------------------

Field sphere(double radius);

/// Torus around the z axis.
Field torus(double major_radius, double minor_radius);

/// Capped cylinder along z, centered at the origin; `height` is the full height.
Field cylinder(double radius, double height);

/// Cone along z with its apex at +height/2 and base at -height/2.
/// `half_angle` in radians, in (0, pi/2).
Field cone(double half_angle, double height);

Field capsule(const Vec3& a, const Vec3& b, double radius);

/// Hexagonal prism along z. `apothem` is the inradius of the hexagon,
/// `height` the full height. Max-of-planes bound.
Field hex_prism(double apothem, double height);

// --- combinators ------------------------------------------------------------

Field union_of(std::vector<Field> fields);
Field intersection_of(std::vector<Field> fields);
Field translate(Field f, const Vec3& offset);

/// f / lambda, lambda >= 1.
Field shrink(Field f, double lambda);

/// Shape scaled by s about the origin: g(p) = s * f(p / s).
Field scale_uniform(Field f, double s);

// --- implicit surfaces ------------------------------------------------------

/// An implicit function g divided by an estimate L of max |grad g| over a box.
class LipschitzNormalized final : public FieldEvaluator {
public:
    LipschitzNormalized(std::function<double(const Vec3&)> implicit, double lipschitz_bound);

    double evaluate(const Vec3& p) const override { return implicit_(p) / lipschitz_; }
    double lipschitz_bound() const { return lipschitz_; }

private:
    std::function<double(const Vec3&)> implicit_;
    double lipschitz_;
};

/// max |grad g| sampled with central differences (step 1e-4) on a
/// samples^3 lattice over [-half_extent, half_extent]^3, times `safety`.
double estimate_lipschitz(const std::function<double(const Vec3&)>& g, double half_extent,
                          int samples = 64, double safety = 1.5);

/// Left-hand side of 2y(y^2-3x^2)(1-z^2) + (x^2+y^2)^2 - (9z^2-1)(1-z^2).
double genus2_implicit(const Vec3& p);

/// Genus-2 surface normalized by its Lipschitz estimate over the cube of the
/// given half extent (the unit cube by default).
std::shared_ptr<const LipschitzNormalized> genus2(double half_extent = 0.5);

/// Implicit function normalized block by block. [-E, E]^3 is split into B^3
/// blocks of side h = 2E/B; block b stores an estimate L_b of max |grad g| over
/// the 3x3x3 blocks around it, and the value is sign(g) * min(|g| / L_b, h).
/// The ball of radius min(|g|/L_b, h) stays inside that neighbourhood, so the
/// value is a distance bound for points of the domain. Points outside the
/// domain use the nearest block.
class BlockLipschitz final : public FieldEvaluator {
public:
    BlockLipschitz(std::function<double(const Vec3&)> implicit, double half_extent, int blocks,
                   int samples_per_block = 8, double safety = 1.5);

    double evaluate(const Vec3& p) const override;

    double block_size() const { return block_; }
    double block_bound(int a, int b, int c) const;
    double max_bound() const;

private:
    int index(double v) const;

    std::function<double(const Vec3&)> implicit_;
    double half_extent_;
    int blocks_;
    double block_;
    std::vector<double> bounds_;
};

/// Genus-2 surface with block-wise normalization over [-E, E]^3.
std::shared_ptr<const BlockLipschitz> genus2_blocks(double half_extent, int blocks);

// --- knot -------------------------------------------------------------------

/// Point on the (2,3) torus knot, t in [0, 2pi). Fits in a sphere of radius 0.3.
Vec3 trefoil_point(double t);

/// Tube around an inscribed polyline of the trefoil, widened by the largest
/// chord sagitta so the tube encloses the tube around the smooth curve.
class KnotTube final : public FieldEvaluator {
public:
    KnotTube(int curve_samples, double tube_radius);

    double evaluate(const Vec3& p) const override;

    double sagitta() const { return delta_; }
    double tube_radius() const { return radius_; }
    const std::vector<Vec3>& polyline() const { return points_; }

    /// Unpruned distance to the polyline; used to check the pruned path.
    double polyline_distance_brute(const Vec3& p) const;

private:
    struct Chunk {
        Vec3 center;
        double radius;
        int first;
        int last;  // exclusive segment index
    };

    double polyline_distance(const Vec3& p) const;

    std::vector<Vec3> points_;
    std::vector<Chunk> chunks_;
    double radius_;
    double delta_;
};

std::shared_ptr<const KnotTube> knot_tube(int curve_samples = 512, double tube_radius = 0.04);

// --- fractal ----------------------------------------------------------------

/// Fold-and-scale distance estimate of the Sierpinski tetrahedron with
/// vertices at (+-0.45, +-0.45, +-0.45) (even number of minus signs).
Field sierpinski_tetra(int iterations);

inline constexpr double kSierpinskiScale = 0.45;

}  // namespace gridhop

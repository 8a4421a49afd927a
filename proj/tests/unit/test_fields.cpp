#include "gridhop/fields.hpp"
#include "gridhop/scene.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gridhop;

namespace {

constexpr double kEps = 1e-12;

std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

// Checks |f| <= oracle distance (+ tol) at `count` uniform points in the cube.
template <typename Oracle>
int soundness_violations(const FieldEvaluator& f, Oracle oracle, int count, std::uint64_t seed, double tol = 1e-9) {
    auto rng = rng_for(seed);
    int bad = 0;
    for (int i = 0; i < count; ++i) {
        const Vec3 p = oracle::random_point(rng);
        if (std::abs(f.evaluate(p)) > oracle(p) + tol) {
            ++bad;
        }
    }
    return bad;
}

}  // namespace

TEST_CASE("plane distance") {
    CHECK(plane_distance({{0, 0, 1}, {0, 0, 0}}, {0.2, 0.3, 0.4}) == doctest::Approx(0.4));
    CHECK(plane_distance({{1, 0, 0}, {0.5, 0, 0}}, {0, 0, 0}) == doctest::Approx(-0.5));
    const double r3 = 1.0 / std::sqrt(3.0);
    CHECK(plane_distance({{r3, r3, r3}, {0, 0, 0}}, {1, 1, 1}) == doctest::Approx(std::sqrt(3.0)));
    // z = C planes are exact in |p.z - C|.
    auto rng = rng_for(3);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p = oracle::random_point(rng);
        const double c = 0.123;
        CHECK(std::abs(plane_distance({{0, 0, 1}, {0, 0, c}}, p)) == std::abs(p.z - c));
    }
    CHECK_THROWS_AS(plane({{0, 0, 2}, {0, 0, 0}}), FieldError);
}

TEST_CASE("sphere") {
    const Field s = sphere(0.3);
    CHECK(s->evaluate({0, 0, 0}) == doctest::Approx(-0.3));
    CHECK(s->evaluate({0, 0, 0.5}) == doctest::Approx(0.2));
    CHECK(s->evaluate({0, 0, 0.3}) == 0.0);
    CHECK_THROWS_AS(sphere(0.0), FieldError);
    CHECK_THROWS_AS(sphere(-1.0), FieldError);
}

TEST_CASE("box bound") {
    const Vec3 h{0.25, 0.25, 0.25};
    CHECK(box_distance(h, {0, 0, 0}) == doctest::Approx(-0.25));
    CHECK(box_distance(h, {0.5, 0, 0}) == doctest::Approx(0.25));
    CHECK(box_distance(h, {0.5, 0.5, 0}) == doctest::Approx(0.25));
    CHECK(oracle::box({0.5, 0.5, 0}, h) == doctest::Approx(0.3535533906));
    CHECK(exact_box_distance(h, {0.5, 0.5, 0}) == doctest::Approx(0.3535533906));
    CHECK(soundness_violations(*box(h), [&](const Vec3& p) { return std::abs(oracle::box(p, h)); }, 1000, 5) == 0);
    CHECK(soundness_violations(*box_exact(h), [&](const Vec3& p) { return std::abs(oracle::box(p, h)); }, 1000, 5) == 0);
    // The exact variant agrees with the oracle everywhere.
    auto rng = rng_for(6);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(exact_box_distance(h, p) == doctest::Approx(oracle::box(p, h)).epsilon(1e-12));
    }
}

TEST_CASE("union and intersection are pointwise min and max") {
    const Field a = sphere(0.3);
    const Field b = translate(sphere(0.2), {0.3, 0.1, 0});
    const Field u = union_of({a, b});
    const Field i = intersection_of({a, b});
    CHECK(union_of({sphere(0.3), sphere(0.2)})->evaluate({0, 0, 0}) == doctest::Approx(-0.3));
    auto rng = rng_for(9);
    for (int n = 0; n < 100; ++n) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(u->evaluate(p) == std::min(a->evaluate(p), b->evaluate(p)));
        CHECK(i->evaluate(p) == std::max(a->evaluate(p), b->evaluate(p)));
        CHECK(union_of({a})->evaluate(p) == a->evaluate(p));
        CHECK(intersection_of({a})->evaluate(p) == a->evaluate(p));
    }
    CHECK_THROWS_AS(union_of({}), FieldError);
    CHECK_THROWS_AS(intersection_of({}), FieldError);
}

TEST_CASE("intersection of six face planes equals the box bound") {
    const Vec3 h{0.2, 0.1, 0.3};
    std::vector<Field> planes;
    for (int axis = 0; axis < 3; ++axis) {
        for (double sgn : {1.0, -1.0}) {
            Vec3 n{};
            n[axis] = sgn;
            planes.push_back(plane({n, n * h[axis]}));
        }
    }
    const Field f = intersection_of(planes);
    auto rng = rng_for(10);
    for (int i = 0; i < 300; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(f->evaluate(p) == doctest::Approx(box_distance(h, p)).epsilon(1e-15));
    }
}

TEST_CASE("intersection with a half space") {
    const Field f = intersection_of({sphere(0.3), plane({{0, 0, 1}, {0, 0, 0}})});
    CHECK(f->evaluate({0, 0, 0.2}) == doctest::Approx(0.2));
}

TEST_CASE("translate") {
    const Field s = sphere(0.3);
    CHECK(translate(s, {0.1, 0, 0})->evaluate({0.1, 0, 0}) == doctest::Approx(-0.3));
    auto rng = rng_for(12);
    const Field back = translate(translate(s, {0.1, -0.2, 0.05}), {-0.1, 0.2, -0.05});
    for (int i = 0; i < 100; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(translate(s, {0, 0, 0})->evaluate(p) == s->evaluate(p));
        CHECK(back->evaluate(p) == doctest::Approx(s->evaluate(p)).epsilon(1e-15));
    }
}

TEST_CASE("shrink") {
    const Field s = sphere(0.3);
    const Vec3 p{0, 0, 0.6};
    CHECK(shrink(s, 1.5)->evaluate(p) == doctest::Approx(0.2));
    CHECK(shrink(s, 1.0)->evaluate(p) == s->evaluate(p));
    CHECK_THROWS_AS(shrink(s, 0.9), FieldError);
    auto rng = rng_for(13);
    const Field g = shrink(s, 1.5);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 q = oracle::random_point(rng);
        CHECK((g->evaluate(q) < 0) == (s->evaluate(q) < 0));
    }
}

TEST_CASE("uniform scale") {
    const Field s = scale_uniform(sphere(0.5), 0.4);
    CHECK(s->evaluate({0, 0, 0}) == doctest::Approx(-0.2));
    CHECK(s->evaluate({0, 0.3, 0}) == doctest::Approx(0.1));
    CHECK_THROWS_AS(scale_uniform(sphere(0.5), 0.0), FieldError);
}

TEST_CASE("primitive examples") {
    CHECK(torus(0.3, 0.1)->evaluate({0.3, 0, 0}) == doctest::Approx(-0.1));
    CHECK(capsule({0, -0.2, 0}, {0, 0.2, 0}, 0.1)->evaluate({0, 0, 0}) == doctest::Approx(-0.1));
    CHECK(cylinder(0.2, 0.4)->evaluate({0, 0, 0.5}) == doctest::Approx(0.3));
    CHECK(oracle::cylinder({0, 0, 0.5}, 0.2, 0.4) == doctest::Approx(0.3));
    CHECK_THROWS_AS(torus(0.3, 0), FieldError);
    CHECK_THROWS_AS(cylinder(-1, 1), FieldError);
    CHECK_THROWS_AS(cone(2.0, 1), FieldError);
    CHECK_THROWS_AS(capsule({0, 0, 0}, {0, 0, 0}, 0.1), FieldError);
    CHECK_THROWS_AS(hex_prism(0.1, 0), FieldError);
}

TEST_CASE("primitive soundness against closed-form oracles") {
    const double a = 0.45;
    struct Case {
        const char* name;
        Field f;
        std::function<double(const Vec3&)> exact;
    };
    const std::vector<Case> cases = {
        {"sphere", sphere(0.3), [](const Vec3& p) { return oracle::sphere(p, 0.3); }},
        {"torus", torus(0.25, 0.08), [](const Vec3& p) { return oracle::torus(p, 0.25, 0.08); }},
        {"cylinder", cylinder(0.2, 0.5), [](const Vec3& p) { return oracle::cylinder(p, 0.2, 0.5); }},
        {"cone", cone(a, 0.6), [a](const Vec3& p) { return oracle::cone(p, a, 0.6); }},
        {"capsule", capsule({-0.2, 0.1, 0}, {0.2, -0.1, 0.1}, 0.1),
         [](const Vec3& p) { return oracle::capsule(p, {-0.2, 0.1, 0}, {0.2, -0.1, 0.1}, 0.1); }},
        {"hex_prism", hex_prism(0.2, 0.3), [](const Vec3& p) { return oracle::hex_prism(p, 0.2, 0.3); }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto rng = rng_for(21);
        int violations = 0;
        int sign_mismatch = 0;
        for (int i = 0; i < 1000; ++i) {
            const Vec3 p = oracle::random_point(rng);
            const double v = c.f->evaluate(p);
            const double d = c.exact(p);
            if (std::abs(v) > std::abs(d) + 1e-9) ++violations;
            if ((v < 0) != (d < 0) && std::abs(d) > 1e-12) ++sign_mismatch;
        }
        CHECK(violations == 0);
        CHECK(sign_mismatch == 0);
    }
}

TEST_CASE("exact primitives match their oracles") {
    auto rng = rng_for(22);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(torus(0.25, 0.08)->evaluate(p) == doctest::Approx(oracle::torus(p, 0.25, 0.08)).epsilon(kEps));
        CHECK(cylinder(0.2, 0.5)->evaluate(p) == doctest::Approx(oracle::cylinder(p, 0.2, 0.5)).epsilon(1e-9));
        CHECK(capsule({0, 0, -0.1}, {0, 0, 0.1}, 0.1)->evaluate(p) ==
              doctest::Approx(oracle::capsule(p, {0, 0, -0.1}, {0, 0, 0.1}, 0.1)).epsilon(kEps));
    }
}

TEST_CASE("sign consistency with containment tests") {
    auto rng = rng_for(23);
    const Field s = sphere(0.3);
    const Field b = box({0.2, 0.1, 0.3});
    const Field t = torus(0.25, 0.08);
    const Field c = capsule({0, -0.2, 0}, {0, 0.2, 0}, 0.1);
    const Field y = cylinder(0.2, 0.5);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p = oracle::random_point(rng);
        const double rho = std::hypot(p.x, p.y);
        if (s->evaluate(p) < 0) CHECK(p.x * p.x + p.y * p.y + p.z * p.z < 0.09);
        if (b->evaluate(p) < 0) CHECK((std::abs(p.x) < 0.2 && std::abs(p.y) < 0.1 && std::abs(p.z) < 0.3));
        if (t->evaluate(p) < 0) CHECK((rho - 0.25) * (rho - 0.25) + p.z * p.z < 0.0064);
        if (c->evaluate(p) < 0) {
            const double cy = std::clamp(p.y, -0.2, 0.2);
            CHECK(p.x * p.x + (p.y - cy) * (p.y - cy) + p.z * p.z < 0.01);
        }
        if (y->evaluate(p) < 0) CHECK((rho < 0.2 && std::abs(p.z) < 0.25));
    }
}

TEST_CASE("genus-2 implicit function") {
    CHECK(genus2_implicit({0, 0, 1}) == 0.0);
    CHECK(genus2_implicit({0, 0, 0}) == 1.0);
    const auto g = genus2();
    CHECK(g->evaluate({0, 0, 1}) == 0.0);
    CHECK(g->evaluate({0, 0, 0}) == doctest::Approx(1.0 / g->lipschitz_bound()));
    CHECK(g->evaluate({0, 0, 0}) > 0.0);
    // The estimate covers the sampled gradients with the 1.5 safety factor.
    CHECK(g->lipschitz_bound() >= estimate_lipschitz(genus2_implicit, 0.5, 64, 1.0));
}

TEST_CASE("genus-2 bounds against a sampled zero set") {
    auto rng = rng_for(31);
    // Global normalization, surface scaled into the cube.
    const Field global = scale_uniform(genus2(2.0), 0.25);
    const oracle::ZeroSet zs(*global, 160);
    REQUIRE(zs.size() > 1000);
    CHECK(soundness_violations(*global, [&](const Vec3& p) { return zs.distance(p); }, 1000, 32) == 0);

    const Field blocks = scale_uniform(genus2_blocks(2.0, 16), 0.25);
    const oracle::ZeroSet zb(*blocks, 160);
    CHECK(soundness_violations(*blocks, [&](const Vec3& p) { return zb.distance(p); }, 1000, 33) == 0);

    // Both share the zero set of the implicit function.
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK((global->evaluate(p) < 0) == (blocks->evaluate(p) < 0));
    }
}

TEST_CASE("block normalization near the surface") {
    // Points close to the zero set are where a loose bound would show.
    const auto g = genus2_blocks(2.0, 16);
    const Field f = scale_uniform(g, 0.25);
    const oracle::ZeroSet zs(*f, 160);
    auto rng = rng_for(34);
    int tested = 0;
    int bad = 0;
    while (tested < 500) {
        const Vec3 p = oracle::random_point(rng);
        const double v = f->evaluate(p);
        if (std::abs(v) > 0.02) continue;
        ++tested;
        if (std::abs(v) > zs.distance(p) + 1e-9) ++bad;
    }
    CHECK(bad == 0);
    CHECK(g->block_size() == doctest::Approx(0.25));
    CHECK(g->max_bound() > 0.0);
    CHECK_THROWS_AS(BlockLipschitz(genus2_implicit, 1.0, 0), FieldError);
}

TEST_CASE("knot tube") {
    const auto k = knot_tube(512, 0.04);
    CHECK(k->sagitta() > 0.0);
    CHECK(k->sagitta() < 0.04);
    // On a curve sample.
    CHECK(k->evaluate(trefoil_point(0.0)) == doctest::Approx(-0.04 - k->sagitta()).epsilon(1e-12));
    // Far outside the curve's bounding sphere (radius 0.3).
    const Vec3 far{0.5, 0.5, 0.5};
    CHECK(k->evaluate(far) >= norm(far) - 0.3 - 0.04 - k->sagitta());
    CHECK(k->evaluate(far) > 0.0);
    CHECK_THROWS_AS(knot_tube(4, 0.04), FieldError);
    CHECK_THROWS_AS(knot_tube(16, 0.001), FieldError);

    auto rng = rng_for(41);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(k->evaluate(p) == k->polyline_distance_brute(p) - 0.04 - k->sagitta());
    }
}

TEST_CASE("knot bound against the curve") {
    const auto k = knot_tube(512, 0.04);
    // The sagitta holds for a polyline 100 times denser than the tube's.
    std::vector<Vec3> dense;
    const int samples = 512 * 100;
    for (int i = 0; i < samples; ++i) {
        dense.push_back(trefoil_point(2.0 * M_PI * i / samples));
    }
    for (std::size_t i = 0; i < dense.size(); i += 37) {
        CHECK(k->polyline_distance_brute(dense[i]) <= k->sagitta() + 1e-12);
    }
    // Outside the widened tube the bound never exceeds the distance to the smooth tube.
    auto rng = rng_for(42);
    int tested = 0;
    int bad = 0;
    while (tested < 200) {
        const Vec3 p = oracle::random_point(rng, -0.4, 0.4);
        const double v = k->evaluate(p);
        if (v <= 0) continue;
        ++tested;
        const double smooth = oracle::polyline(p, dense, true) - 0.04;
        if (v > smooth + 1e-9) ++bad;
    }
    CHECK(bad == 0);
    // Own zero set: |f| is at most the distance to the level set of the polyline distance.
    int bad_all = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p = oracle::random_point(rng);
        const double d = oracle::polyline(p, k->polyline(), false);
        if (std::abs(k->evaluate(p)) > std::abs(d - 0.04 - k->sagitta()) + 1e-9) ++bad_all;
    }
    CHECK(bad_all == 0);
}

TEST_CASE("sierpinski estimator") {
    for (int it : {1, 3, 5, 8}) {
        const Field s = sierpinski_tetra(it);
        const double a = kSierpinskiScale;
        for (const Vec3& v : {Vec3{a, a, a}, Vec3{-a, -a, a}, Vec3{a, -a, -a}, Vec3{-a, a, -a}}) {
            CHECK(std::abs(s->evaluate(v)) <= 1e-6);
        }
    }
    // The centroid lies in the removed central octahedron from the second level on.
    for (int it = 2; it <= 8; ++it) {
        CHECK(sierpinski_tetra(it)->evaluate({0, 0, 0}) > 0.0);
    }
    CHECK_THROWS_AS(sierpinski_tetra(0), FieldError);
    CHECK_THROWS_AS(sierpinski_tetra(25), FieldError);
}

TEST_CASE("sierpinski estimate grows with iterations") {
    auto rng = rng_for(51);
    for (int k = 1; k < 8; ++k) {
        const Field a = sierpinski_tetra(k);
        const Field b = sierpinski_tetra(k + 1);
        for (int i = 0; i < 100; ++i) {
            const Vec3 p = oracle::random_point(rng);
            CHECK(b->evaluate(p) >= a->evaluate(p) - 1e-9);
        }
    }
}

TEST_CASE("sierpinski membership oracle") {
    // A point is in level-k set iff some sequence of k contractions towards
    // vertices maps back into the base tetrahedron.
    const double a = kSierpinskiScale;
    const std::vector<Vec3> verts = {{a, a, a}, {-a, -a, a}, {a, -a, -a}, {-a, a, -a}};
    std::function<bool(const Vec3&, int)> member = [&](const Vec3& p, int k) {
        if (k == 0) return std::max({-(p.x + p.y + p.z), p.x + p.y - p.z, -p.x + p.y + p.z, p.x - p.y + p.z}) <= a + 1e-12;
        for (const Vec3& v : verts) {
            const Vec3 q = v + (p - v) * 2.0;  // inverse of the contraction towards v
            if (member(q, k - 1)) return true;
        }
        return false;
    };
    auto rng = rng_for(52);
    const int k = 3;
    const Field s = sierpinski_tetra(k);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p = oracle::random_point(rng);
        const double v = s->evaluate(p);
        if (std::abs(v) < 1e-9) continue;
        CHECK((v < 0) == member(p, k));
    }
}

TEST_CASE("batch evaluation matches pointwise evaluation") {
    const SceneAst ast = parse_scene(
        "emit union(translate(sphere(0.1), 0.2, 0, 0), intersection(box(0.1, 0.2, 0.1), torus(0.2, 0.05)),"
        " shrink(scale(capsule(0, 0, 0, 0.1, 0.1, 0, 0.05), 0.8), 1.5));");
    const Field f = build_field(ast);
    auto rng = rng_for(61);
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back(oracle::random_point(rng));
    std::vector<double> out(pts.size());
    f->evaluate_batch(pts, out);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(out[i] == f->evaluate(pts[i]));
    }
}

#include "gridhop/bench.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace gridhop;

namespace {

BenchScene sphere_scene() { return {"sphere", sphere(0.3), {{0, 0, 0.3}}, false}; }

std::vector<BenchRecord> synthetic(const std::vector<int>& ns, double (*metric)(double)) {
    std::vector<BenchRecord> out;
    for (int n : ns) {
        BenchRecord r;
        r.scene = "synthetic";
        r.method = Method::Ghop;
        r.n = n;
        r.field_evals = static_cast<std::uint64_t>(std::llround(metric(n)));
        r.wall_time_s = metric(n) * 1e-9;
        out.push_back(r);
    }
    return out;
}

// Ordinary least squares slope written out directly.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("method and metric names") {
    for (Method m : {Method::Enum, Method::Cont, Method::Ghop}) CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("gridhop"), std::invalid_argument);
    CHECK(parse_metric("evals") == Metric::Evals);
    CHECK(parse_metric("time") == Metric::Time);
    CHECK_THROWS_AS(parse_metric("steps"), std::invalid_argument);
}

TEST_CASE("enumeration counting contract") {
    const std::vector<Method> methods{Method::Enum};
    const std::vector<int> ns{32, 64};
    const auto records = run_series(sphere_scene(), methods, ns);
    REQUIRE(records.size() == 2);
    CHECK(records[0].n == 32);
    CHECK(records[0].field_evals == 33ull * 33 * 33);
    CHECK(records[1].field_evals == 65ull * 65 * 65);
    CHECK(records[0].triangles > 0);
}

TEST_CASE("equality flag and record order") {
    const std::vector<Method> methods{Method::Ghop, Method::Cont, Method::Enum};
    const std::vector<int> ns{16, 32};
    const auto records = run_series(sphere_scene(), methods, ns);
    REQUIRE(records.size() == 6);
    const Method order[] = {Method::Enum, Method::Enum, Method::Cont, Method::Cont, Method::Ghop, Method::Ghop};
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].method == order[i]);
        CHECK(records[i].n == ns[i % 2]);
        REQUIRE(records[i].meshes_equal.has_value());
        CHECK(*records[i].meshes_equal);
        CHECK(records[i].field_evals >= 1);
        CHECK(records[i].triangles == records[i % 2].triangles);
    }
    CHECK(mismatches(records, false).empty());

    // Without enumeration there is nothing to compare against.
    const std::vector<Method> ghop_only{Method::Ghop};
    for (const auto& r : run_series(sphere_scene(), ghop_only, ns)) CHECK_FALSE(r.meshes_equal.has_value());
}

TEST_CASE("mismatches are reported except on fractal scenes") {
    std::vector<BenchRecord> records(2);
    records[0].meshes_equal = true;
    records[1].meshes_equal = false;
    CHECK(mismatches(records, false).size() == 1);
    CHECK(mismatches(records, true).empty());
}

TEST_CASE("series preconditions") {
    const std::vector<Method> methods{Method::Enum};
    CHECK_THROWS_AS(run_series(sphere_scene(), methods, std::vector<int>{}), std::invalid_argument);
    CHECK_THROWS_AS(run_series(sphere_scene(), methods, std::vector<int>{4, 8}), std::invalid_argument);
    CHECK_THROWS_AS(run_series(sphere_scene(), methods, std::vector<int>{32, 16}), std::invalid_argument);
    CHECK_THROWS_AS(run_series(sphere_scene(), methods, std::vector<int>{16, 16}), std::invalid_argument);
    BenchScene unseeded = sphere_scene();
    unseeded.seeds.clear();
    CHECK_THROWS_AS(run_series(unseeded, std::vector<Method>{Method::Cont}, std::vector<int>{16}),
                    std::invalid_argument);
}

TEST_CASE("exponent fits") {
    SUBCASE("exact cubic") {
        const auto r = synthetic({32, 64, 128}, [](double n) { return 5 * n * n * n; });
        const ExponentFit f = fit_exponent(r, Metric::Evals);
        CHECK(std::abs(f.slope - 3.0) <= 1e-9);
        CHECK(f.r_squared == doctest::Approx(1.0));
        CHECK(f.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-9));
    }
    SUBCASE("n^2 log n") {
        const std::vector<int> ns{32, 64, 128, 256};
        const auto r = synthetic(ns, [](double n) { return n * n * std::log2(n); });
        const ExponentFit f = fit_exponent(r, Metric::Evals);
        CHECK(f.slope >= 2.15);
        CHECK(f.slope <= 2.35);
        std::vector<double> x, y;
        for (int n : ns) {
            x.push_back(std::log(double(n)));
            y.push_back(std::log(double(n) * n * std::log2(double(n))));
        }
        CHECK(f.slope == doctest::Approx(ols_slope(x, y)).epsilon(1e-6));
    }
    SUBCASE("constant") {
        const auto r = synthetic({16, 32, 64}, [](double) { return 1000.0; });
        CHECK(std::abs(fit_exponent(r, Metric::Evals).slope) <= 1e-12);
        CHECK(fit_exponent(r, Metric::Time).slope == doctest::Approx(0.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_exponent(synthetic({16, 32}, [](double n) { return n; }), Metric::Evals),
                        std::invalid_argument);
        CHECK_THROWS_AS(fit_exponent(synthetic({16, 32, 64}, [](double) { return 0.0; }), Metric::Evals),
                        std::invalid_argument);
        CHECK_THROWS_AS(fit_exponent(synthetic({16, 16, 16}, [](double n) { return n; }), Metric::Evals),
                        std::invalid_argument);
    }
}

TEST_CASE("csv round trip") {
    const std::vector<Method> methods{Method::Enum, Method::Ghop};
    const std::vector<int> ns{8, 16};
    auto records = run_series(sphere_scene(), methods, ns);
    BenchRecord extra;
    extra.scene = "zzz";
    extra.method = Method::Cont;
    extra.n = 8;
    extra.field_evals = 1;
    extra.wall_time_s = 0.1;
    records.push_back(extra);

    std::ostringstream out;
    write_csv(out, records);
    const std::string text = out.str();
    CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(text.find("sphere,enum,8,729,") != std::string::npos);
    CHECK(text.find(",0.1,\n") != std::string::npos);

    std::istringstream in(text);
    const auto back = read_csv(in);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].scene == records[i].scene);
        CHECK(back[i].method == records[i].method);
        CHECK(back[i].n == records[i].n);
        CHECK(back[i].field_evals == records[i].field_evals);
        CHECK(back[i].march_steps == records[i].march_steps);
        CHECK(back[i].triangles == records[i].triangles);
        CHECK(back[i].wall_time_s == records[i].wall_time_s);
        CHECK(back[i].meshes_equal == records[i].meshes_equal);
    }

    std::istringstream bad_header("scene,method\n");
    CHECK_THROWS(read_csv(bad_header));
    std::istringstream bad_row(std::string(kCsvHeader) + "\nsphere,enum,x,1,1,1,0.1,true\n");
    CHECK_THROWS(read_csv(bad_row));
}

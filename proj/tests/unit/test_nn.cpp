#include "gridhop/nn.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace gridhop;

namespace {

// Straightforward forward pass, independent of the library's blocked kernel.
double reference_forward(const NnWeights& w, const Vec3& p) {
    std::vector<double> h{p.x, p.y, p.z};
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const DenseLayer& L = w.layers[l];
        std::vector<double> next(L.rows);
        for (int r = 0; r < L.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < L.cols; ++c) s += L.w(r, c) * h[c];
            s += L.bias[r];
            next[r] = (l + 1 < w.layers.size()) ? std::max(s, 0.0) : s;
        }
        h = std::move(next);
    }
    return h[0];
}

NnWeights single_layer(std::vector<double> weights, double bias) {
    NnWeights w;
    w.layers.push_back({1, 3, std::move(weights), {bias}});
    return w;
}

std::string text_of(const NnWeights& w) {
    std::ostringstream s;
    write_weights(s, w);
    return s.str();
}

const std::vector<int> kSmall{3, 16, 16, 1};

}  // namespace

TEST_CASE("forward pass examples") {
    CHECK(nn_evaluate(single_layer({0, 0, 1}, -0.3), {0, 0, 0.5}) == doctest::Approx(0.2));
    const NnWeights constant = single_layer({0, 0, 0}, 0.7);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) CHECK(nn_evaluate(constant, oracle::random_point(rng)) == 0.7);

    // Hidden ReLU clips negative pre-activations.
    NnWeights two;
    two.layers.push_back({1, 3, {1, 0, 0}, {0}});
    two.layers.push_back({1, 1, {2}, {0.5}});
    CHECK(nn_evaluate(two, {0.25, 0, 0}) == doctest::Approx(1.0));
    CHECK(nn_evaluate(two, {-0.25, 0, 0}) == doctest::Approx(0.5));
}

TEST_CASE("forward pass matches a naive reference") {
    const NnWeights w = init_weights(std::vector<int>{3, 64, 64, 64, 1}, 11);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        const Vec3 p = oracle::random_point(rng);
        CHECK(nn_evaluate(w, p) == doctest::Approx(reference_forward(w, p)).epsilon(1e-12));
    }
}

TEST_CASE("batched evaluation is bit-identical") {
    const NnWeights w = init_weights(std::vector<int>{3, 64, 64, 64, 1}, 12);
    std::mt19937_64 rng(3);
    std::vector<Vec3> pts(1000);
    for (auto& p : pts) p = oracle::random_point(rng);
    std::vector<double> out(pts.size());
    nn_evaluate_batch(w, pts, out);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(out[i] == nn_evaluate(w, pts[i]));
    const Field f = nn_field(w);
    std::vector<double> out2(pts.size());
    f->evaluate_batch(pts, out2);
    CHECK(out2 == out);
}

TEST_CASE("weights round-trip through text") {
    const NnWeights w = init_weights(std::vector<int>{3, 7, 5, 1}, 13);
    const std::string text = text_of(w);
    CHECK(text.rfind("nnsdb 1\n3\n7 3\n", 0) == 0);
    std::istringstream in(text);
    CHECK(read_weights(in) == w);

    const auto path = std::filesystem::temp_directory_path() / "gridhop_nn_roundtrip.nnsdb";
    save_weights(w, path);
    CHECK(load_weights(path) == w);
    std::filesystem::remove(path);
}

TEST_CASE("format errors") {
    SUBCASE("mismatched dimensions name the layer") {
        std::istringstream in(
            "nnsdb 1\n3\n"
            "2 3\n1 0 0\n0 1 0\n0 0\n"
            "2 2\n1 0\n0 1\n0 0\n"
            "1 3\n1 1 1\n0\n");
        try {
            read_weights(in);
            FAIL("no error");
        } catch (const WeightsFormatError& e) {
            REQUIRE(e.layer().has_value());
            CHECK(*e.layer() == 3);
        }
    }
    SUBCASE("truncated file") {
        const std::string text = text_of(init_weights(kSmall, 14));
        std::istringstream in(text.substr(0, text.size() / 2));
        CHECK_THROWS_AS(read_weights(in), WeightsFormatError);
    }
    SUBCASE("bad header") {
        std::istringstream in("nnsdb 2\n1\n1 3\n0 0 1\n0\n");
        CHECK_THROWS_AS(read_weights(in), WeightsFormatError);
    }
    SUBCASE("non-finite value") {
        std::istringstream in("nnsdb 1\n1\n1 3\n0 nan 1\n0\n");
        CHECK_THROWS_AS(read_weights(in), WeightsFormatError);
    }
    SUBCASE("first layer must take three inputs") {
        std::istringstream in("nnsdb 1\n1\n1 2\n0 1\n0\n");
        CHECK_THROWS_AS(read_weights(in), WeightsFormatError);
    }
    SUBCASE("last layer must have one output") {
        NnWeights w;
        w.layers.push_back({2, 3, std::vector<double>(6, 0.0), {0, 0}});
        CHECK_THROWS_AS(w.validate(), WeightsFormatError);
        CHECK_THROWS_AS(nn_field(w), WeightsFormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_weights("/nonexistent/dir/w.nnsdb"), WeightsIoError);
        CHECK_THROWS_AS(save_weights(init_weights(kSmall, 1), "/nonexistent/dir/w.nnsdb"), WeightsIoError);
    }
}

TEST_CASE("lipschitz bound holds on random pairs") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const NnWeights w = init_weights(std::vector<int>{3, 32, 32, 1}, seed);
        const double L = lipschitz_upper_bound(w);
        CHECK(L > 0.0);
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 2000; ++i) {
            const Vec3 p = oracle::random_point(rng);
            const Vec3 q = oracle::random_point(rng);
            CHECK(std::abs(nn_evaluate(w, p) - nn_evaluate(w, q)) <= L * norm(p - q) * (1 + 1e-12) + 1e-15);
        }
    }
    // A single linear layer: the bound is the row norm.
    CHECK(lipschitz_upper_bound(single_layer({0, 3, 4}, 0)) == doctest::Approx(5.0));
}

TEST_CASE("initialization") {
    const NnWeights a = init_weights(kSmall, 7);
    CHECK(a.architecture() == kSmall);
    CHECK(a == init_weights(kSmall, 7));
    CHECK_FALSE(a == init_weights(kSmall, 8));
    for (const auto& l : a.layers) {
        const double bound = std::sqrt(6.0 / l.cols);
        for (double v : l.weights) CHECK(std::abs(v) <= bound);
        for (double b : l.bias) CHECK(b == 0.0);
    }
    CHECK_THROWS_AS(init_weights(std::vector<int>{2, 4, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_weights(std::vector<int>{3, 4, 2}, 1), std::invalid_argument);
}

TEST_CASE("training samples") {
    const Field s = sphere(0.3);
    const auto pts = sample_training_points(*s, 2000, 0.1, 4);
    REQUIRE(pts.size() == 2000);
    int near = 0;
    for (const auto& p : pts) {
        CHECK(std::abs(p.x) <= 0.5);
        CHECK(std::abs(p.y) <= 0.5);
        CHECK(std::abs(p.z) <= 0.5);
        near += std::abs(s->evaluate(p)) < 0.1;
    }
    // Half are drawn from the band, and some uniform ones land there too.
    CHECK(near >= 1000);
    CHECK(near < 2000);
    CHECK(pts == sample_training_points(*s, 2000, 0.1, 4));
}

TEST_CASE("fit configuration") {
    FitConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.batch_size = cfg.sample_count + 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = FitConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("zero steps returns the initialization") {
    FitConfig cfg;
    cfg.steps = 0;
    cfg.sample_count = 512;
    cfg.rng_seed = 9;
    const FitResult r = fit(*sphere(0.3), kSmall, cfg);
    CHECK(r.weights == init_weights(kSmall, 9));
    CHECK(r.losses.empty());
}

TEST_CASE("training is deterministic and reduces the loss") {
    FitConfig cfg;
    cfg.steps = 1500;
    cfg.sample_count = 4000;
    cfg.rng_seed = 3;
    const Field target = sphere(0.3);
    const FitResult a = fit(*target, kSmall, cfg);
    const FitResult b = fit(*target, kSmall, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.losses == b.losses);
    REQUIRE(a.losses.size() == 1500);

    auto mean = [&](std::size_t from) {
        return std::accumulate(a.losses.begin() + from, a.losses.begin() + from + 100, 0.0) / 100.0;
    };
    CHECK(mean(1400) < mean(0));
    CHECK(mean(1400) < mean(700));

    std::mt19937_64 rng(99);
    double se = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p = oracle::random_point(rng);
        const double e = nn_evaluate(a.weights, p) - target->evaluate(p);
        se += e * e;
    }
    CHECK(std::sqrt(se / 2000) < 0.05);
}

#pragma once

#include "gridhop/fields.hpp"
#include "gridhop/geom.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gridhop {

/// Affine layer y = W x + b, W row-major rows x cols.
struct DenseLayer {
    int rows = 0;
    int cols = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double w(int r, int c) const { return weights[static_cast<std::size_t>(r) * cols + c]; }
    bool operator==(const DenseLayer&) const = default;
};

/// ReLU MLP from R^3 to R. No activation after the last layer.
struct NnWeights {
    std::vector<DenseLayer> layers;

    bool operator==(const NnWeights&) const = default;

    /// Throws WeightsFormatError naming the first bad layer (1-based).
    void validate() const;
    std::vector<int> architecture() const;
};

/// Malformed or inconsistent weights. `layer` is 1-based when known.
class WeightsFormatError : public std::runtime_error {
public:
    WeightsFormatError(const std::string& message, std::optional<int> layer = std::nullopt);
    std::optional<int> layer() const { return layer_; }

private:
    std::optional<int> layer_;
};

class WeightsIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double nn_evaluate(const NnWeights& w, const Vec3& p);

/// Bit-identical to nn_evaluate on every point.
void nn_evaluate_batch(const NnWeights& w, std::span<const Vec3> points, std::span<double> out);

NnWeights read_weights(std::istream& in);
void write_weights(std::ostream& out, const NnWeights& w);
NnWeights load_weights(const std::filesystem::path& path);
void save_weights(const NnWeights& w, const std::filesystem::path& path);

/// Product over layers of min(Frobenius norm, sqrt(|W|_1 |W|_inf)), each an
/// upper bound on the spectral norm. ReLU is 1-Lipschitz.
double lipschitz_upper_bound(const NnWeights& w);

class NnField final : public FieldEvaluator {
public:
    explicit NnField(NnWeights weights);

    double evaluate(const Vec3& p) const override;
    void evaluate_batch(std::span<const Vec3> points, std::span<double> out) const override;
    const NnWeights& weights() const { return weights_; }

private:
    NnWeights weights_;
};

Field nn_field(NnWeights weights);

struct FitConfig {
    int sample_count = 20000;
    int steps = 5000;
    int batch_size = 256;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon_adam = 1e-8;
    std::uint64_t rng_seed = 1;
    double near_surface_band = 0.1;

    void validate() const;
};

struct FitResult {
    NnWeights weights;
    std::vector<double> losses;  // mini-batch MSE per step
};

/// Uniform He initialization, biases zero. `arch` runs from 3 to 1.
NnWeights init_weights(std::span<const int> arch, std::uint64_t seed);

/// Training set: half uniform in the unit cube, half rejection-sampled where |f| < band.
std::vector<Vec3> sample_training_points(const FieldEvaluator& target, int count, double band, std::uint64_t seed);

FitResult fit(const FieldEvaluator& target, std::span<const int> arch, const FitConfig& cfg);

}  // namespace gridhop

#include "gridhop/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace gridhop {

WeightsFormatError::WeightsFormatError(const std::string& message, std::optional<int> layer)
    : std::runtime_error(layer ? "layer " + std::to_string(*layer) + ": " + message : message), layer_(layer) {}

void NnWeights::validate() const {
    if (layers.empty()) {
        throw WeightsFormatError("network has no layers");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        const int id = static_cast<int>(l) + 1;
        if (layer.rows < 1 || layer.cols < 1) {
            throw WeightsFormatError("non-positive dimensions", id);
        }
        const int expected_cols = l == 0 ? 3 : layers[l - 1].rows;
        if (layer.cols != expected_cols) {
            throw WeightsFormatError("has " + std::to_string(layer.cols) + " inputs, expected " +
                                         std::to_string(expected_cols),
                                     id);
        }
        if (layer.weights.size() != static_cast<std::size_t>(layer.rows) * layer.cols ||
            layer.bias.size() != static_cast<std::size_t>(layer.rows)) {
            throw WeightsFormatError("storage does not match dimensions", id);
        }
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
            !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
            throw WeightsFormatError("non-finite value", id);
        }
    }
    if (layers.back().rows != 1) {
        throw WeightsFormatError("output dimension must be 1", static_cast<int>(layers.size()));
    }
}

std::vector<int> NnWeights::architecture() const {
    std::vector<int> arch;
    if (!layers.empty()) {
        arch.push_back(layers.front().cols);
    }
    for (const auto& l : layers) {
        arch.push_back(l.rows);
    }
    return arch;
}

// ---------------------------------------------------------------------------
// Inference. Points go through in blocks; within a block every output is
// accumulated over inputs in ascending order, then the bias is added, so a
// block of one point performs exactly the same operations.
// ---------------------------------------------------------------------------
namespace {

constexpr std::size_t kBlock = 64;

void forward_block(const NnWeights& w, std::span<const Vec3> points, std::span<double> out) {
    const std::size_t n = points.size();
    std::size_t width = 3;
    for (const auto& l : w.layers) {
        width = std::max<std::size_t>(width, static_cast<std::size_t>(l.rows));
    }
    // Activations stored feature-major: h[c * n + p].
    std::vector<double> h(width * n);
    std::vector<double> next(width * n);
    for (std::size_t p = 0; p < n; ++p) {
        h[0 * n + p] = points[p].x;
        h[1 * n + p] = points[p].y;
        h[2 * n + p] = points[p].z;
    }
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const DenseLayer& layer = w.layers[l];
        const bool last = l + 1 == w.layers.size();
        for (int r = 0; r < layer.rows; ++r) {
            double* acc = next.data() + static_cast<std::size_t>(r) * n;
            std::fill(acc, acc + n, 0.0);
            for (int c = 0; c < layer.cols; ++c) {
                const double wrc = layer.w(r, c);
                const double* in = h.data() + static_cast<std::size_t>(c) * n;
                for (std::size_t p = 0; p < n; ++p) {
                    acc[p] += wrc * in[p];
                }
            }
            const double b = layer.bias[static_cast<std::size_t>(r)];
            for (std::size_t p = 0; p < n; ++p) {
                const double v = acc[p] + b;
                acc[p] = last ? v : std::max(v, 0.0);
            }
        }
        std::swap(h, next);
    }
    std::copy(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(n), out.begin());
}

}  // namespace

double nn_evaluate(const NnWeights& w, const Vec3& p) {
    double out = 0.0;
    forward_block(w, std::span<const Vec3>(&p, 1), std::span<double>(&out, 1));
    return out;
}

void nn_evaluate_batch(const NnWeights& w, std::span<const Vec3> points, std::span<double> out) {
    for (std::size_t first = 0; first < points.size(); first += kBlock) {
        const std::size_t count = std::min(kBlock, points.size() - first);
        forward_block(w, points.subspan(first, count), out.subspan(first, count));
    }
}

NnField::NnField(NnWeights weights) : weights_(std::move(weights)) { weights_.validate(); }

double NnField::evaluate(const Vec3& p) const { return nn_evaluate(weights_, p); }

void NnField::evaluate_batch(std::span<const Vec3> points, std::span<double> out) const {
    nn_evaluate_batch(weights_, points, out);
}

Field nn_field(NnWeights weights) { return std::make_shared<NnField>(std::move(weights)); }

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------
namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::vector<std::string> fields(const std::string& what, std::optional<int> layer) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw WeightsFormatError("unexpected end of file while reading " + what, layer);
        }
        std::istringstream s(line);
        std::vector<std::string> out;
        std::string f;
        while (s >> f) {
            out.push_back(f);
        }
        return out;
    }

private:
    std::istream& in_;
};

double parse_real(const std::string& s, std::optional<int> layer) {
    double v = 0.0;
    const char* first = s.data() + (!s.empty() && s.front() == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw WeightsFormatError("malformed number '" + s + "'", layer);
    }
    if (!std::isfinite(v)) {
        throw WeightsFormatError("non-finite value", layer);
    }
    return v;
}

int parse_count(const std::string& s, std::optional<int> layer) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
        throw WeightsFormatError("malformed count '" + s + "'", layer);
    }
    return v;
}

std::string format_real(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

}  // namespace

NnWeights read_weights(std::istream& in) {
    LineReader reader(in);
    const auto header = reader.fields("header", std::nullopt);
    if (header.size() != 2 || header[0] != "nnsdb" || header[1] != "1") {
        throw WeightsFormatError("bad header, expected 'nnsdb 1'");
    }
    const auto count_line = reader.fields("layer count", std::nullopt);
    if (count_line.size() != 1) {
        throw WeightsFormatError("bad layer count line");
    }
    const int count = parse_count(count_line[0], std::nullopt);
    if (count > 4096) {
        throw WeightsFormatError("implausible layer count");
    }
    NnWeights w;
    for (int l = 0; l < count; ++l) {
        const int id = l + 1;
        const auto dims = reader.fields("dimensions", id);
        if (dims.size() != 2) {
            throw WeightsFormatError("bad dimension line", id);
        }
        DenseLayer layer;
        layer.rows = parse_count(dims[0], id);
        layer.cols = parse_count(dims[1], id);
        if (layer.rows > 65536 || layer.cols > 65536) {
            throw WeightsFormatError("implausible dimensions", id);
        }
        const int expected_cols = l == 0 ? 3 : w.layers.back().rows;
        if (layer.cols != expected_cols) {
            throw WeightsFormatError("has " + std::to_string(layer.cols) + " inputs, expected " +
                                         std::to_string(expected_cols),
                                     id);
        }
        layer.weights.reserve(static_cast<std::size_t>(layer.rows) * layer.cols);
        for (int r = 0; r < layer.rows; ++r) {
            const auto row = reader.fields("weight row", id);
            if (row.size() != static_cast<std::size_t>(layer.cols)) {
                throw WeightsFormatError("weight row " + std::to_string(r + 1) + " has " +
                                             std::to_string(row.size()) + " values, expected " +
                                             std::to_string(layer.cols),
                                         id);
            }
            for (const auto& f : row) {
                layer.weights.push_back(parse_real(f, id));
            }
        }
        const auto bias = reader.fields("bias", id);
        if (bias.size() != static_cast<std::size_t>(layer.rows)) {
            throw WeightsFormatError("bias has " + std::to_string(bias.size()) + " values, expected " +
                                         std::to_string(layer.rows),
                                     id);
        }
        for (const auto& f : bias) {
            layer.bias.push_back(parse_real(f, id));
        }
        w.layers.push_back(std::move(layer));
    }
    w.validate();
    return w;
}

void write_weights(std::ostream& out, const NnWeights& w) {
    w.validate();
    out << "nnsdb 1\n" << w.layers.size() << '\n';
    for (const auto& layer : w.layers) {
        out << layer.rows << ' ' << layer.cols << '\n';
        for (int r = 0; r < layer.rows; ++r) {
            for (int c = 0; c < layer.cols; ++c) {
                out << (c ? " " : "") << format_real(layer.w(r, c));
            }
            out << '\n';
        }
        for (int r = 0; r < layer.rows; ++r) {
            out << (r ? " " : "") << format_real(layer.bias[static_cast<std::size_t>(r)]);
        }
        out << '\n';
    }
}

NnWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw WeightsIoError("cannot open weight file " + path.string());
    }
    return read_weights(in);
}

void save_weights(const NnWeights& w, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw WeightsIoError("cannot write weight file " + path.string());
    }
    write_weights(out, w);
    out.flush();
    if (!out) {
        throw WeightsIoError("write failed for " + path.string());
    }
}

double lipschitz_upper_bound(const NnWeights& w) {
    double bound = 1.0;
    for (const auto& layer : w.layers) {
        double frob = 0.0;
        std::vector<double> col_sums(static_cast<std::size_t>(layer.cols), 0.0);
        double max_row = 0.0;
        for (int r = 0; r < layer.rows; ++r) {
            double row = 0.0;
            for (int c = 0; c < layer.cols; ++c) {
                const double v = layer.w(r, c);
                frob += v * v;
                row += std::abs(v);
                col_sums[static_cast<std::size_t>(c)] += std::abs(v);
            }
            max_row = std::max(max_row, row);
        }
        const double max_col = *std::max_element(col_sums.begin(), col_sums.end());
        bound *= std::min(std::sqrt(frob), std::sqrt(max_col * max_row));
    }
    return bound;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------
void FitConfig::validate() const {
    if (sample_count < 1 || steps < 0 || batch_size < 1) {
        throw std::invalid_argument("sample_count and batch_size must be positive, steps non-negative");
    }
    if (batch_size > sample_count) {
        throw std::invalid_argument("batch_size must not exceed sample_count");
    }
    if (!(learning_rate > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1) || !(epsilon_adam > 0)) {
        throw std::invalid_argument("invalid Adam hyperparameters");
    }
    if (!(near_surface_band > 0)) {
        throw std::invalid_argument("near-surface band must be positive");
    }
}

namespace {

// Uniform double in [0, 1) with 53 random bits; independent of library distributions.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec3 random_in_cube(std::mt19937_64& rng) { return {unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5}; }

void check_arch(std::span<const int> arch) {
    if (arch.size() < 2 || arch.front() != 3 || arch.back() != 1) {
        throw std::invalid_argument("architecture must start at 3 and end at 1");
    }
    for (int v : arch) {
        if (v < 1) {
            throw std::invalid_argument("layer widths must be positive");
        }
    }
}

}  // namespace

NnWeights init_weights(std::span<const int> arch, std::uint64_t seed) {
    check_arch(arch);
    std::mt19937_64 rng(seed);
    NnWeights w;
    for (std::size_t l = 1; l < arch.size(); ++l) {
        DenseLayer layer;
        layer.cols = arch[l - 1];
        layer.rows = arch[l];
        const double limit = std::sqrt(6.0 / layer.cols);
        layer.weights.resize(static_cast<std::size_t>(layer.rows) * layer.cols);
        for (double& v : layer.weights) {
            v = (2.0 * unit(rng) - 1.0) * limit;
        }
        layer.bias.assign(static_cast<std::size_t>(layer.rows), 0.0);
        w.layers.push_back(std::move(layer));
    }
    return w;
}

std::vector<Vec3> sample_training_points(const FieldEvaluator& target, int count, double band, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(count));
    const int uniform = count / 2;
    for (int i = 0; i < uniform; ++i) {
        points.push_back(random_in_cube(rng));
    }
    const long long max_attempts = 1000LL * count + 100000;
    long long attempts = 0;
    while (static_cast<int>(points.size()) < count) {
        const Vec3 p = random_in_cube(rng);
        if (std::abs(target.evaluate(p)) < band) {
            points.push_back(p);
        } else if (++attempts > max_attempts) {
            throw std::runtime_error("target field has no zero set near the unit cube; cannot sample near-surface points");
        }
    }
    return points;
}

FitResult fit(const FieldEvaluator& target, std::span<const int> arch, const FitConfig& cfg) {
    check_arch(arch);
    cfg.validate();
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::VectorXd;

    FitResult result;
    result.weights = init_weights(arch, cfg.rng_seed);
    if (cfg.steps == 0) {
        return result;
    }

    const std::vector<Vec3> samples =
        sample_training_points(target, cfg.sample_count, cfg.near_surface_band, cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> targets(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        targets[i] = target.evaluate(samples[i]);
    }

    const std::size_t depth = result.weights.layers.size();
    std::vector<Matrix> W(depth);
    std::vector<Vector> b(depth);
    std::vector<Matrix> mW(depth), vW(depth);
    std::vector<Vector> mb(depth), vb(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const DenseLayer& layer = result.weights.layers[l];
        W[l] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            layer.weights.data(), layer.rows, layer.cols);
        b[l] = Eigen::Map<const Vector>(layer.bias.data(), layer.rows);
        mW[l] = Matrix::Zero(layer.rows, layer.cols);
        vW[l] = Matrix::Zero(layer.rows, layer.cols);
        mb[l] = Vector::Zero(layer.rows);
        vb[l] = Vector::Zero(layer.rows);
    }

    std::mt19937_64 rng(cfg.rng_seed ^ 0xd1b54a32d192ed03ULL);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::size_t cursor = order.size();
    const auto shuffle = [&] {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(order[i], order[j]);
        }
        cursor = 0;
    };

    const int B = cfg.batch_size;
    Matrix X(3, B);
    Vector y(B);
    std::vector<Matrix> Z(depth), H(depth + 1);
    double beta1_t = 1.0;
    double beta2_t = 1.0;
    result.losses.reserve(static_cast<std::size_t>(cfg.steps));

    for (int step = 0; step < cfg.steps; ++step) {
        for (int s = 0; s < B; ++s) {
            if (cursor >= order.size()) {
                shuffle();
            }
            const std::size_t idx = order[cursor++];
            X(0, s) = samples[idx].x;
            X(1, s) = samples[idx].y;
            X(2, s) = samples[idx].z;
            y(s) = targets[idx];
        }

        H[0] = X;
        for (std::size_t l = 0; l < depth; ++l) {
            Z[l] = (W[l] * H[l]).colwise() + b[l];
            H[l + 1] = l + 1 == depth ? Z[l] : Matrix(Z[l].cwiseMax(0.0));
        }
        const Eigen::RowVectorXd err = H[depth].row(0) - y.transpose();
        result.losses.push_back(err.squaredNorm() / B);

        Matrix dZ = (2.0 / B) * err;
        beta1_t *= cfg.beta1;
        beta2_t *= cfg.beta2;
        const double lr_t = cfg.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
        const double eps_t = cfg.epsilon_adam * std::sqrt(1.0 - beta2_t);
        for (std::size_t l = depth; l-- > 0;) {
            const Matrix gW = dZ * H[l].transpose();
            const Vector gb = dZ.rowwise().sum();
            if (l > 0) {
                Matrix dH = W[l].transpose() * dZ;
                dZ = dH.cwiseProduct((Z[l - 1].array() > 0.0).cast<double>().matrix());
            }
            mW[l] = cfg.beta1 * mW[l] + (1.0 - cfg.beta1) * gW;
            vW[l] = cfg.beta2 * vW[l] + (1.0 - cfg.beta2) * gW.cwiseAbs2();
            mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * gb;
            vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * gb.cwiseAbs2();
            W[l].array() -= lr_t * mW[l].array() / (vW[l].array().sqrt() + eps_t);
            b[l].array() -= lr_t * mb[l].array() / (vb[l].array().sqrt() + eps_t);
        }
    }

    for (std::size_t l = 0; l < depth; ++l) {
        DenseLayer& layer = result.weights.layers[l];
        for (int r = 0; r < layer.rows; ++r) {
            for (int c = 0; c < layer.cols; ++c) {
                layer.weights[static_cast<std::size_t>(r) * layer.cols + c] = W[l](r, c);
            }
            layer.bias[static_cast<std::size_t>(r)] = b[l](r);
        }
    }
    return result;
}

}  // namespace gridhop

#include "gridhop/bench.hpp"

#include "gridhop/polygonize.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gridhop {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Enum: return "enum";
        case Method::Cont: return "cont";
        case Method::Ghop: return "ghop";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    if (s == "enum") return Method::Enum;
    if (s == "cont") return Method::Cont;
    if (s == "ghop") return Method::Ghop;
    throw std::invalid_argument("unknown method '" + std::string(s) + "' (expected enum, cont or ghop)");
}

Metric parse_metric(std::string_view s) {
    if (s == "evals") return Metric::Evals;
    if (s == "time") return Metric::Time;
    throw std::invalid_argument("unknown metric '" + std::string(s) + "' (expected evals or time)");
}

std::vector<BenchRecord> run_series(const BenchScene& scene, std::span<const Method> methods,
                                    std::span<const int> resolutions, const SeriesOptions& options) {
    if (resolutions.empty()) {
        throw std::invalid_argument("no resolutions given");
    }
    if (methods.empty()) {
        throw std::invalid_argument("no methods given");
    }
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
        if (resolutions[i] < 8 || (i > 0 && resolutions[i] <= resolutions[i - 1])) {
            throw std::invalid_argument("resolutions must be strictly increasing and at least 8");
        }
    }
    std::vector<Method> order(methods.begin(), methods.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    if (std::find(order.begin(), order.end(), Method::Cont) != order.end() && scene.seeds.empty()) {
        throw std::invalid_argument("continuation needs at least one seed");
    }
    const bool have_enum = order.front() == Method::Enum;

    std::vector<BenchRecord> records;
    for (int n : resolutions) {
        PolygonizeConfig cfg = PolygonizeConfig::for_resolution(n);
        cfg.workers = options.workers;
        cfg.batch_size = options.batch_size;
        Mesh reference;
        for (Method m : order) {
            const auto start = std::chrono::steady_clock::now();
            PolygonizeResult r;
            switch (m) {
                case Method::Enum: r = enumerate_all(*scene.field, cfg); break;
                case Method::Cont: r = continuation(*scene.field, cfg, scene.seeds); break;
                case Method::Ghop: r = gridhop(*scene.field, cfg); break;
            }
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            BenchRecord rec;
            rec.scene = scene.id;
            rec.method = m;
            rec.n = n;
            rec.field_evals = r.stats.field_evals();
            rec.march_steps = r.stats.march_steps();
            rec.triangles = r.mesh.size();
            rec.wall_time_s = elapsed.count();
            if (m == Method::Enum) {
                reference = std::move(r.mesh);
                rec.meshes_equal = true;
            } else if (have_enum) {
                rec.meshes_equal = r.mesh == reference;
            }
            records.push_back(std::move(rec));
        }
    }
    std::stable_sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
        return std::tie(a.scene, a.method, a.n) < std::tie(b.scene, b.method, b.n);
    });
    return records;
}

std::vector<BenchRecord> mismatches(std::span<const BenchRecord> records, bool fractal) {
    std::vector<BenchRecord> out;
    if (fractal) {
        return out;
    }
    for (const auto& r : records) {
        if (r.meshes_equal && !*r.meshes_equal) {
            out.push_back(r);
        }
    }
    return out;
}

ExponentFit fit_power_law(std::span<const double> n, std::span<const double> values) {
    if (n.size() != values.size() || n.size() < 3) {
        throw std::invalid_argument("exponent fit needs at least 3 points");
    }
    const double count = static_cast<double>(n.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> x(n.size()), y(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) {
            throw std::invalid_argument("exponent fit needs positive resolutions and metric values");
        }
        x[i] = std::log(n[i]);
        y[i] = std::log(values[i]);
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / count;
    const double my = sy / count;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("exponent fit needs at least two distinct resolutions");
    }
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += e * e;
    }
    // A constant metric is fit perfectly by slope 0.
    fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

ExponentFit fit_exponent(std::span<const BenchRecord> records, Metric metric) {
    std::vector<double> n, v;
    for (const auto& r : records) {
        n.push_back(r.n);
        v.push_back(metric == Metric::Evals ? static_cast<double>(r.field_evals) : r.wall_time_s);
    }
    return fit_power_law(n, v);
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream s(line);
    while (std::getline(s, cur, sep)) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

template <typename T>
T parse_field(const std::string& s, int line, const char* what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::runtime_error("csv line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

}  // namespace

void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.scene << ',' << method_name(r.method) << ',' << r.n << ',' << r.field_evals << ','
            << r.march_steps << ',' << r.triangles << ',' << format_double(r.wall_time_s) << ','
            << (r.meshes_equal ? (*r.meshes_equal ? "true" : "false") : "") << '\n';
    }
}

std::vector<BenchRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("csv: missing or unexpected header");
    }
    std::vector<BenchRecord> out;
    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 8) {
            throw std::runtime_error("csv line " + std::to_string(number) + ": expected 8 fields");
        }
        BenchRecord r;
        r.scene = f[0];
        try {
            r.method = parse_method(f[1]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("csv line " + std::to_string(number) + ": " + e.what());
        }
        r.n = parse_field<int>(f[2], number, "n");
        r.field_evals = parse_field<std::uint64_t>(f[3], number, "field_evals");
        r.march_steps = parse_field<std::uint64_t>(f[4], number, "march_steps");
        r.triangles = parse_field<std::uint64_t>(f[5], number, "triangles");
        r.wall_time_s = parse_field<double>(f[6], number, "wall_time_s");
        if (f[7] == "true") {
            r.meshes_equal = true;
        } else if (f[7] == "false") {
            r.meshes_equal = false;
        } else if (!f[7].empty()) {
            throw std::runtime_error("csv line " + std::to_string(number) + ": bad meshes_equal '" + f[7] + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace gridhop

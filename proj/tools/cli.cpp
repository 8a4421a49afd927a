#include "cli.hpp"

#include "gridhop/bench.hpp"
#include "gridhop/nn.hpp"
#include "gridhop/obj.hpp"
#include "gridhop/polygonize.hpp"
#include "gridhop/scene.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace gridhop {

namespace {

/// Bad flag values found after CLI11 parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& s, const std::string& flag) {
    double v = 0.0;
    const char* first = s.data() + (!s.empty() && s.front() == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw UsageError(flag + ": '" + s + "' is not a number");
    }
    return v;
}

int to_int(const std::string& s, const std::string& flag) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw UsageError(flag + ": '" + s + "' is not an integer");
    }
    return v;
}

std::vector<int> int_list(const std::string& s, const std::string& flag) {
    std::vector<int> out;
    for (const auto& part : split_list(s)) {
        out.push_back(to_int(part, flag));
    }
    if (out.empty()) {
        throw UsageError(flag + " is empty");
    }
    return out;
}

Vec3 parse_seed(const std::string& s) {
    const auto parts = split_list(s);
    if (parts.size() != 3) {
        throw UsageError("--seed expects X,Y,Z");
    }
    Vec3 p{to_double(parts[0], "--seed"), to_double(parts[1], "--seed"), to_double(parts[2], "--seed")};
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(p[axis]) > 0.5) {
            throw UsageError("--seed " + s + " lies outside the unit cube");
        }
    }
    return p;
}

int resolve_workers(int flag) {
    if (flag > 0) {
        return flag;
    }
    if (const char* env = std::getenv("GRIDHOP_WORKERS")) {
        const int v = to_int(env, "GRIDHOP_WORKERS");
        if (v < 1) {
            throw UsageError("GRIDHOP_WORKERS must be positive");
        }
        return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct LoadedScene {
    std::string id;
    SceneAst ast;
    Field field;
};

LoadedScene load(const std::string& path) {
    const std::filesystem::path p(path);
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scene file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    LoadedScene s;
    s.id = p.stem().string();
    try {
        s.ast = parse_scene(text.str());
    } catch (const ParseError& e) {
        throw UsageError(path + ": line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) +
                         ": " + e.message() + (e.expected().empty() ? "" : " (expected " + e.expected() + ")"));
    }
    s.field = build_field(s.ast, p.parent_path());
    return s;
}

PolygonizeConfig make_config(int n, int workers, int batch_size) {
    if (n < 1) {
        throw UsageError("--resolution must be at least 1");
    }
    if (batch_size < 1) {
        throw UsageError("--batch-size must be positive");
    }
    PolygonizeConfig cfg = PolygonizeConfig::for_resolution(n);
    cfg.workers = resolve_workers(workers);
    cfg.batch_size = static_cast<std::size_t>(batch_size);
    return cfg;
}

void print_stats(std::ostream& out, const PolygonizeResult& r) {
    out << "field_evals=" << r.stats.field_evals() << '\n'
        << "march_steps=" << r.stats.march_steps() << '\n'
        << "cells_polygonized=" << r.stats.cells_polygonized() << '\n'
        << "triangles=" << r.mesh.size() << '\n';
}

std::string cell_text(const CellIndex& c) {
    return "(" + std::to_string(c.i) + ", " + std::to_string(c.j) + ", " + std::to_string(c.k) + ")";
}

struct Options {
    std::string scene;
    std::string method;
    int resolution = -1;
    std::string output;
    std::vector<std::string> seeds;
    std::string methods = "enum,ghop";
    std::string resolutions = "32,64,128,256";
    std::string csv;
    std::string metric = "evals";
    std::string fit_method;
    std::string arch = "3,64,64,64,1";
    int steps = 5000;
    std::uint64_t rng_seed = 1;
    int samples = 20000;
    int workers = 0;
    int batch_size = -1;
};

int cmd_polygonize(const Options& o, std::ostream& out, std::ostream& err) {
    const Method method = parse_method(o.method);
    PolygonizeConfig cfg = make_config(o.resolution, o.workers, o.batch_size < 0 ? 10000 : o.batch_size);
    const LoadedScene scene = load(o.scene);
    std::vector<Vec3> seeds;
    for (const auto& s : o.seeds) {
        seeds.push_back(parse_seed(s));
    }
    if (seeds.empty()) {
        seeds = scene.ast.seeds;
    }
    if (method == Method::Cont && seeds.empty()) {
        throw UsageError("method cont needs at least one --seed or a seed statement in the scene");
    }
    PolygonizeResult r;
    switch (method) {
        case Method::Enum: r = enumerate_all(*scene.field, cfg); break;
        case Method::Cont: r = continuation(*scene.field, cfg, seeds); break;
        case Method::Ghop: r = gridhop(*scene.field, cfg); break;
    }
    for (const auto& w : r.warnings) {
        err << "warning: " << w << '\n';
    }
    std::ofstream file(o.output, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot write " + o.output);
    }
    write_obj(file, r.mesh, {scene.id, std::string(method_name(method)), o.resolution});
    file.flush();
    if (!file) {
        throw IoError("write failed for " + o.output);
    }
    print_stats(out, r);
    return kExitOk;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream&) {
    PolygonizeConfig cfg = make_config(o.resolution, o.workers, o.batch_size < 0 ? 10000 : o.batch_size);
    const LoadedScene scene = load(o.scene);
    const PolygonizeResult e = enumerate_all(*scene.field, cfg);
    const PolygonizeResult g = gridhop(*scene.field, cfg);
    out << "enum_triangles=" << e.mesh.size() << '\n' << "ghop_triangles=" << g.mesh.size() << '\n';
    const auto diff = first_difference(e.mesh, g.mesh);
    if (!diff) {
        out << "meshes_equal=true\n";
        return kExitOk;
    }
    out << "meshes_equal=false\n";
    const std::size_t t = *diff;
    out << "first_difference=" << t << '\n';
    if (t < e.mesh.size()) {
        out << "enum_cell=" << cell_text(e.mesh.triangles[t].cell) << '\n';
    }
    if (t < g.mesh.size()) {
        out << "ghop_cell=" << cell_text(g.mesh.triangles[t].cell) << '\n';
    }
    return kExitMismatch;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
    std::vector<Method> methods;
    for (const auto& m : split_list(o.methods)) {
        methods.push_back(parse_method(m));
    }
    const std::vector<int> resolutions = int_list(o.resolutions, "--resolutions");
    const LoadedScene scene = load(o.scene);
    BenchScene bs{scene.id, scene.field, scene.ast.seeds, scene.ast.root->name == "sierpinski"};
    SeriesOptions so;
    so.workers = resolve_workers(o.workers);
    if (o.batch_size >= 0) {
        if (o.batch_size < 1) {
            throw UsageError("--batch-size must be positive");
        }
        so.batch_size = static_cast<std::size_t>(o.batch_size);
    }
    const auto records = run_series(bs, methods, resolutions, so);
    std::ofstream file(o.csv, std::ios::trunc);
    if (!file) {
        throw IoError("cannot write " + o.csv);
    }
    write_csv(file, records);
    file.flush();
    if (!file) {
        throw IoError("write failed for " + o.csv);
    }
    for (const auto& r : mismatches(records, bs.fractal)) {
        err << "mesh mismatch: " << method_name(r.method) << " at n=" << r.n << '\n';
    }
    out << "rows=" << records.size() << '\n';
    return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream&) {
    const Metric metric = parse_metric(o.metric);
    std::ifstream file(o.csv);
    if (!file) {
        throw IoError("cannot open " + o.csv);
    }
    const auto records = read_csv(file);
    std::map<std::pair<std::string, Method>, std::vector<BenchRecord>> groups;
    for (const auto& r : records) {
        if (o.fit_method.empty() || parse_method(o.fit_method) == r.method) {
            groups[{r.scene, r.method}].push_back(r);
        }
    }
    if (groups.empty()) {
        throw std::runtime_error("no matching rows in " + o.csv);
    }
    for (const auto& [key, rows] : groups) {
        const ExponentFit fit = fit_exponent(rows, metric);
        out << key.first << ' ' << method_name(key.second) << " slope=" << fit.slope << " intercept=" << fit.intercept
            << " r2=" << fit.r_squared << '\n';
    }
    return kExitOk;
}

int cmd_nn_fit(const Options& o, std::ostream& out, std::ostream&) {
    const std::vector<int> arch = int_list(o.arch, "--arch");
    FitConfig cfg;
    cfg.steps = o.steps;
    cfg.rng_seed = o.rng_seed;
    cfg.sample_count = o.samples;
    if (o.batch_size >= 0) {
        cfg.batch_size = o.batch_size;
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (arch.size() < 2 || arch.front() != 3 || arch.back() != 1) {
        throw UsageError("--arch must start with 3 and end with 1");
    }
    const LoadedScene scene = load(o.scene);
    const FitResult r = fit(*scene.field, arch, cfg);
    try {
        save_weights(r.weights, o.output);
    } catch (const WeightsIoError& e) {
        throw IoError(e.what());
    }
    if (!r.losses.empty()) {
        out << "final_loss=" << r.losses.back() << '\n';
    }
    out << "lipschitz_bound=" << lipschitz_upper_bound(r.weights) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Polygonize signed distance bounds by enumeration, continuation or gridhopping", "gridhop"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--workers", o.workers, "Worker threads (default: GRIDHOP_WORKERS or hardware threads)");
        sub->add_option("--batch-size", o.batch_size, "Points per evaluation batch");
    };

    auto* poly = app.add_subcommand("polygonize", "Write the mesh of a scene as OBJ");
    poly->add_option("--scene", o.scene, "Scene file")->required();
    poly->add_option("--method", o.method, "enum, cont or ghop")->required();
    poly->add_option("--resolution", o.resolution, "Cells per axis")->required();
    poly->add_option("--output", o.output, "OBJ output path")->required();
    poly->add_option("--seed", o.seeds, "Continuation seed X,Y,Z (repeatable)")->allow_extra_args(false);
    add_common(poly);

    auto* check = app.add_subcommand("check", "Compare enumeration and gridhopping meshes");
    check->add_option("--scene", o.scene, "Scene file")->required();
    check->add_option("--resolution", o.resolution, "Cells per axis")->required();
    add_common(check);

    auto* bench = app.add_subcommand("bench", "Run methods over resolutions and write CSV");
    bench->add_option("--scene", o.scene, "Scene file")->required();
    bench->add_option("--methods", o.methods, "Comma separated methods")->capture_default_str();
    bench->add_option("--resolutions", o.resolutions, "Comma separated resolutions")->capture_default_str();
    bench->add_option("--csv", o.csv, "CSV output path")->required();
    add_common(bench);

    auto* fitc = app.add_subcommand("fit", "Fit log-log exponents to a bench CSV");
    fitc->add_option("--csv", o.csv, "Bench CSV")->required();
    fitc->add_option("--metric", o.metric, "evals or time")->capture_default_str();
    fitc->add_option("--method", o.fit_method, "Only rows of this method");

    auto* nnfit = app.add_subcommand("nn-fit", "Train an MLP on a scene's field");
    nnfit->add_option("--scene", o.scene, "Scene file providing the target")->required();
    nnfit->add_option("--arch", o.arch, "Layer widths")->capture_default_str();
    nnfit->add_option("--output", o.output, "Weight file path")->required();
    nnfit->add_option("--steps", o.steps, "Adam steps")->capture_default_str();
    nnfit->add_option("--rng-seed", o.rng_seed, "Random seed")->capture_default_str();
    nnfit->add_option("--samples", o.samples, "Training set size")->capture_default_str();
    nnfit->add_option("--batch-size", o.batch_size, "Mini-batch size (default 256)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp") {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        for (auto* sub : app.get_subcommands()) {
            err << sub->help();
        }
        return kExitUsage;
    }

    try {
        if (poly->parsed()) return cmd_polygonize(o, out, err);
        if (check->parsed()) return cmd_check(o, out, err);
        if (bench->parsed()) return cmd_bench(o, out, err);
        if (fitc->parsed()) return cmd_fit(o, out, err);
        if (nnfit->parsed()) return cmd_nn_fit(o, out, err);
        err << app.help();
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FieldError& e) {
        err << "invalid scene: " << e.what() << '\n';
        return kExitUsage;
    } catch (const WeightsFormatError& e) {
        err << "invalid weights: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const WeightsIoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const PolygonizeError& e) {
        err << "polygonization failed: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace gridhop

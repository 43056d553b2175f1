// fritv command-line front end: acquire | mask | recon | eval | compare.
//
// Exit codes: 0 success, 2 usage/argument error, 3 file IO error,
// 4 geometry error (empty valid region, window larger than image),
// 5 solver divergence.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include <fritv/fritv.hpp>

namespace fs = std::filesystem;
using fritv::json;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string manifest_dir;
    bool quiet = false;
    std::string config_path;
    std::vector<std::string> argv; ///< original command line, for the manifest
};

void info(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::fprintf(stderr, "%s\n", msg.c_str());
}

/// "65x49" -> {65, 49}; throws CLI::ValidationError on anything else.
std::pair<int, int> parse_pair(const std::string& s, const std::string& flag) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos || x == 0 || x + 1 >= s.size()) throw std::invalid_argument(s);
        std::size_t ea = 0, eb = 0;
        const int a = std::stoi(s.substr(0, x), &ea);
        const int b = std::stoi(s.substr(x + 1), &eb);
        if (ea != x || eb != s.size() - x - 1) throw std::invalid_argument(s);
        return {a, b};
    } catch (const std::exception&) {
        throw CLI::ValidationError(flag, "expected WxH, got '" + s + "'");
    }
}

std::vector<double> parse_lambdas(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        const std::string tok = s.substr(pos, comma - pos);
        try {
            std::size_t end = 0;
            const double v = std::stod(tok, &end);
            if (end != tok.size() || !std::isfinite(v) || v < 0.0)
                throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--lambdas", "bad value '" + tok + "'");
        }
        pos = comma + 1;
    }
    return out;
}

/// JSON-safe encoding of possibly infinite dB values.
json db_json(double v) {
    if (std::isfinite(v)) return v;
    return "inf";
}

fs::path manifest_path(const GlobalOpts& g, const std::string& cmd, const fs::path& primary) {
    if (!g.manifest_dir.empty()) {
        fs::create_directories(g.manifest_dir);
        return fs::path(g.manifest_dir) / (cmd + ".manifest.json");
    }
    return fs::path(primary.string() + "." + cmd + ".manifest.json");
}

void emit_manifest(const GlobalOpts& g, fritv::RunManifest m, const fs::path& primary) {
    m.argv = g.argv;
    m.seed = g.seed;
    const fs::path mp = manifest_path(g, m.command, primary);
    fritv::write_manifest(mp, m);
    info(g, "manifest: " + mp.string());
}

fritv::PhantomSpec load_phantom(const std::string& name) {
    if (name.ends_with(".json")) return fritv::read_phantom_json(name);
    if (name == "shepp-logan" || name == "shepp_logan") return fritv::shepp_logan_spec();
    throw CLI::ValidationError("--phantom",
                               "unknown phantom '" + name + "' (builtin: shepp-logan, or a .json path)");
}

// ---------------------------------------------------------------------------
// acquire
// ---------------------------------------------------------------------------

struct AcquireOpts {
    std::string phantom = "shepp-logan";
    int kx = 32, ky = 24;
    double snr_db = std::numeric_limits<double>::infinity();
    std::string out;
};

int run_acquire(const GlobalOpts& g, const AcquireOpts& o) {
    const fritv::PhantomSpec spec = load_phantom(o.phantom);
    for (const std::string& w : fritv::validate(spec)) info(g, "warning: " + w);
    const fritv::KSpaceGrid clean = fritv::ellipse_kspace(spec, o.kx, o.ky);
    const fritv::NoisyKSpace noisy = fritv::add_noise(clean, o.snr_db, g.seed);

    json meta{{"phantom", spec.name},
              {"snr_db", db_json(o.snr_db)},
              {"seed", g.seed},
              {"sigma", noisy.sigma}};
    fritv::write_kspace(o.out, noisy.grid, meta);
    info(g, "wrote " + o.out + " (" + std::to_string(noisy.grid.nx()) + "x" +
                std::to_string(noisy.grid.ny()) + " samples)");

    fritv::RunManifest m;
    m.command = "acquire";
    m.config = json{{"phantom", o.phantom},
                    {"kx", o.kx},
                    {"ky", o.ky},
                    {"snr_db", db_json(o.snr_db)},
                    {"seed", g.seed}};
    if (o.phantom.ends_with(".json")) m.inputs.push_back(fritv::digest_file(o.phantom));
    m.outputs.push_back(fritv::digest_file(o.out));
    m.metrics = json{{"sigma", noisy.sigma}, {"n_samples", noisy.grid.size()}};
    emit_manifest(g, std::move(m), o.out);
    return 0;
}

// ---------------------------------------------------------------------------
// mask
// ---------------------------------------------------------------------------

struct MaskOpts {
    std::string in;
    std::string method = "nullavg";
    std::string filter;          // required, "K1xL1"
    double delta = 0.1;
    int rank = 0;
    int cadzow_iters = 10;
    std::string render = "256x256";
    std::string out_mask;
    std::string out_filter;
};

fritv::MaskMethod parse_method(const std::string& s) {
    if (s == "ls") return fritv::MaskMethod::least_squares;
    if (s == "cadzow") return fritv::MaskMethod::cadzow;
    if (s == "nullavg") return fritv::MaskMethod::null_average;
    throw CLI::ValidationError("--method", "expected ls|cadzow|nullavg, got '" + s + "'");
}

void write_spectrum_csv(const fs::path& path, const fritv::RVector& sv) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw fritv::io_error("cannot open for writing: " + tmp.string());
        out << "index,sigma\n";
        out.precision(17);
        for (Eigen::Index i = 0; i < sv.size(); ++i) out << i << ',' << sv[i] << '\n';
        if (!out) throw fritv::io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw fritv::io_error("rename failed: " + path.string() + ": " + ec.message());
}

int run_mask(const GlobalOpts& g, const MaskOpts& o) {
    if (o.out_mask.empty() && o.out_filter.empty())
        throw CLI::ValidationError("--out-mask/--out-filter", "at least one output is required");
    const auto [k1, l1] = parse_pair(o.filter, "--filter");
    const auto [rnx, rny] = parse_pair(o.render, "--render");
    const fritv::MaskMethod method = parse_method(o.method);

    const fritv::LoadedKSpace lk = fritv::read_kspace(o.in);
    fritv::PipelineParams params;
    params.support = fritv::FilterSupport{k1, l1};
    params.delta = o.delta;
    params.cadzow_rank = o.rank;
    params.cadzow_iters = o.cadzow_iters;
    params.render_nx = rnx;
    params.render_ny = rny;
    params.with_spectrum = true;
    const fritv::PipelineResult res = fritv::estimate_pipeline(lk.grid, method, params);

    if (res.nonunique) info(g, "warning: least-squares system is rank-deficient");
    if (res.basis.fallback)
        info(g, "warning: no singular value under delta threshold; using the smallest");

    fritv::RunManifest m;
    m.command = "mask";
    m.inputs.push_back(fritv::digest_file(o.in));
    const fs::path primary = o.out_mask.empty() ? o.out_filter : o.out_mask;

    if (!o.out_mask.empty()) {
        fritv::write_mask(o.out_mask, res.mask);
        m.outputs.push_back(fritv::digest_file(o.out_mask));
    }
    if (!o.out_filter.empty()) {
        const fritv::FilterCoefficients c =
            method == fritv::MaskMethod::null_average
                ? fritv::FilterCoefficients(res.basis.support, res.basis.vectors.col(0))
                : res.coeffs;
        fritv::write_filter(o.out_filter, c, json{{"method", o.method}});
        m.outputs.push_back(fritv::digest_file(o.out_filter));
    }
    const fs::path spectrum = primary.string() + ".spectrum.csv";
    write_spectrum_csv(spectrum, res.singular_values);
    m.outputs.push_back(fritv::digest_file(spectrum));

    m.config = json{{"in", o.in},           {"method", o.method},
                    {"filter", o.filter},   {"delta", o.delta},
                    {"rank", o.rank},       {"cadzow_iters", o.cadzow_iters},
                    {"render", o.render}};
    m.metrics = json{{"residual", res.residual},
                     {"null_dim", res.null_dim},
                     {"nonunique", res.nonunique},
                     {"fallback", res.basis.fallback}};
    emit_manifest(g, std::move(m), primary);
    info(g, "mask method=" + o.method + " residual=" + std::to_string(res.residual));
    return 0;
}

// ---------------------------------------------------------------------------
// recon
// ---------------------------------------------------------------------------

struct ReconOpts {
    std::string in;
    std::string mask;
    double lambda = 0.0;
    int iters = 2000;
    double tol = 1e-6;
    std::string size = "256x256";
    double gamma = 1.0;
    double floor = 0.0;
    std::string out;
};

/// Measured samples are Fourier-series coefficients; the solver's unitary
/// operator expects them scaled by sqrt(nx*ny) so that A applied to the
/// ground-truth raster reproduces the data.
fritv::KSpaceGrid to_solver_scale(const fritv::KSpaceGrid& ksp, int nx, int ny) {
    fritv::KSpaceGrid b = ksp;
    b.values *= std::sqrt(static_cast<double>(nx) * ny);
    return b;
}

int run_recon(const GlobalOpts& g, const ReconOpts& o) {
    const auto [nx, ny] = parse_pair(o.size, "--size");
    const fritv::LoadedKSpace lk = fritv::read_kspace(o.in);
    const fritv::PartialFourierOp op =
        fritv::forward_op(nx, ny, lk.grid.kx_half, lk.grid.ky_half);

    fritv::WeightMap weights = fritv::uniform_weights(nx, ny);
    if (!o.mask.empty()) {
        const fritv::LoadedImage mi = fritv::read_image(o.mask);
        if (mi.dtype != "f64")
            throw CLI::ValidationError("--mask", "mask must be a real (f64) image");
        if (mi.real.cols() != nx || mi.real.rows() != ny)
            throw CLI::ValidationError("--mask", "mask size does not match --size");
        weights = fritv::weights_from_mask(fritv::EdgeMask{mi.real, {}}, o.gamma, o.floor);
    }

    fritv::ReconConfig cfg;
    cfg.lambda = o.lambda;
    cfg.max_iters = o.iters;
    cfg.tol = o.tol;
    const fritv::ReconResult res =
        fritv::wtv_recon(to_solver_scale(lk.grid, nx, ny), op, weights, cfg);

    json meta{{"lambda", o.lambda},
              {"objective", res.objective},
              {"iters", res.iters},
              {"converged", res.converged},
              {"source", o.in}};
    fritv::write_image(o.out, res.image, meta);
    info(g, "wrote " + o.out + " objective=" + std::to_string(res.objective) +
                " iters=" + std::to_string(res.iters));

    fritv::RunManifest m;
    m.command = "recon";
    m.inputs.push_back(fritv::digest_file(o.in));
    if (!o.mask.empty()) m.inputs.push_back(fritv::digest_file(o.mask));
    m.outputs.push_back(fritv::digest_file(o.out));
    m.config = json{{"in", o.in},       {"mask", o.mask},   {"lambda", o.lambda},
                    {"iters", o.iters}, {"tol", o.tol},     {"size", o.size},
                    {"gamma", o.gamma}, {"floor", o.floor}};
    m.metrics = json{{"objective", res.objective},
                     {"iters", res.iters},
                     {"converged", res.converged}};
    emit_manifest(g, std::move(m), o.out);
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string recon;
    std::string ref;
    std::string csv;
};

int run_eval(const GlobalOpts& g, const EvalOpts& o) {
    const fritv::LoadedImage a = fritv::read_image(o.recon);
    const fritv::LoadedImage r = fritv::read_image(o.ref);
    const auto dims = [](const fritv::LoadedImage& im) {
        return im.dtype == "c128" ? std::pair<Eigen::Index, Eigen::Index>{im.cplx.rows(),
                                                                          im.cplx.cols()}
                                  : std::pair<Eigen::Index, Eigen::Index>{im.real.rows(),
                                                                          im.real.cols()};
    };
    if (dims(a) != dims(r))
        throw CLI::ValidationError("--recon/--ref", "image sizes do not match");

    // Complex against complex compares directly; any real operand compares
    // magnitudes (reconstructions are complex, references usually real).
    double s = 0.0;
    if (a.dtype == "c128" && r.dtype == "c128") {
        s = fritv::snr_db(r.cplx, a.cplx);
    } else {
        const fritv::RMatrix am = a.dtype == "c128" ? a.cplx.cwiseAbs() : a.real;
        const fritv::RMatrix rm = r.dtype == "c128" ? r.cplx.cwiseAbs() : r.real;
        s = fritv::snr_db(rm.cast<fritv::Complex>(), am.cast<fritv::Complex>());
    }

    if (std::isinf(s))
        std::printf("inf\n");
    else
        std::printf("%.1f\n", s);

    if (!o.csv.empty()) {
        const bool fresh = !fs::exists(o.csv);
        std::ofstream out(o.csv, std::ios::app);
        if (!out) throw fritv::io_error("cannot open for appending: " + o.csv);
        if (fresh) out << "recon,ref,snr_db\n";
        out.precision(17);
        out << o.recon << ',' << o.ref << ',' << s << '\n';
        if (!out) throw fritv::io_error("write failed: " + o.csv);
    }

    fritv::RunManifest m;
    m.command = "eval";
    m.inputs.push_back(fritv::digest_file(o.recon));
    m.inputs.push_back(fritv::digest_file(o.ref));
    if (!o.csv.empty()) m.outputs.push_back(fritv::digest_file(o.csv));
    m.config = json{{"recon", o.recon}, {"ref", o.ref}, {"csv", o.csv}};
    m.metrics = json{{"snr_db", db_json(s)}};
    emit_manifest(g, std::move(m), o.recon);
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareOpts {
    std::string phantom = "shepp-logan";
    int kx = 32, ky = 24;
    double snr_db = std::numeric_limits<double>::infinity();
    std::string size = "256x256";
    std::string filter;   // default: half the data half-widths
    std::string method = "nullavg";
    double delta = 0.1;
    double gamma = 1.0;
    double floor = 0.0;
    int supersample = 8;
    int iters = 2000;
    double tol = 1e-6;
    std::string lambdas = "1e-4,3e-4,1e-3,3e-3,1e-2,3e-2,1e-1";
    std::string lambdas_tv;  // optional per-method overrides
    std::string lambdas_wtv;
    std::string out_prefix;
};

int run_compare(const GlobalOpts& g, const CompareOpts& o) {
    const auto [nx, ny] = parse_pair(o.size, "--size");
    const fritv::PhantomSpec spec = load_phantom(o.phantom);
    for (const std::string& w : fritv::validate(spec)) info(g, "warning: " + w);

    const fritv::KSpaceGrid clean = fritv::ellipse_kspace(spec, o.kx, o.ky);
    const fritv::NoisyKSpace noisy = fritv::add_noise(clean, o.snr_db, g.seed);
    const fritv::RMatrix truth = fritv::rasterize(spec, nx, ny, o.supersample);
    const fritv::Image truth_c = truth.cast<fritv::Complex>();

    fritv::PipelineParams params;
    params.support = o.filter.empty()
                         ? fritv::default_support(noisy.grid)
                         : fritv::FilterSupport{parse_pair(o.filter, "--filter").first,
                                                parse_pair(o.filter, "--filter").second};
    params.delta = o.delta;
    params.render_nx = nx;
    params.render_ny = ny;
    const fritv::PipelineResult mask_res =
        fritv::estimate_pipeline(noisy.grid, parse_method(o.method), params);
    fritv::write_mask(o.out_prefix + "-mask.img", mask_res.mask);

    const fritv::PartialFourierOp op = fritv::forward_op(nx, ny, o.kx, o.ky);
    const fritv::KSpaceGrid b = to_solver_scale(noisy.grid, nx, ny);
    fritv::ReconConfig cfg;
    cfg.max_iters = o.iters;
    cfg.tol = o.tol;

    const std::vector<double> grid_tv =
        parse_lambdas(o.lambdas_tv.empty() ? o.lambdas : o.lambdas_tv);
    const std::vector<double> grid_wtv =
        parse_lambdas(o.lambdas_wtv.empty() ? o.lambdas : o.lambdas_wtv);

    info(g, "sweeping tv over " + std::to_string(grid_tv.size()) + " lambdas");
    const fritv::SweepResult tv =
        fritv::lambda_sweep(b, op, fritv::uniform_weights(nx, ny), truth_c, grid_tv, cfg);
    info(g, "sweeping wtv over " + std::to_string(grid_wtv.size()) + " lambdas");
    const fritv::SweepResult wtv = fritv::lambda_sweep(
        b, op, fritv::weights_from_mask(mask_res.mask, o.gamma, o.floor), truth_c, grid_wtv,
        cfg);

    fritv::write_sweep_csv(o.out_prefix + "-tv.csv", tv.rows);
    fritv::write_sweep_csv(o.out_prefix + "-wtv.csv", wtv.rows);
    fritv::write_image(o.out_prefix + "-tv.img", tv.best_image,
                       json{{"lambda", tv.rows[tv.best_index].lambda}});
    fritv::write_image(o.out_prefix + "-wtv.img", wtv.best_image,
                       json{{"lambda", wtv.rows[wtv.best_index].lambda}});

    const fritv::SweepRow& bt = tv.rows[tv.best_index];
    const fritv::SweepRow& bw = wtv.rows[wtv.best_index];
    std::printf("tv   best snr_db=%.1f lambda=%g iters=%d\n", bt.snr_db, bt.lambda, bt.iters);
    std::printf("wtv  best snr_db=%.1f lambda=%g iters=%d\n", bw.snr_db, bw.lambda, bw.iters);

    fritv::RunManifest m;
    m.command = "compare";
    if (o.phantom.ends_with(".json")) m.inputs.push_back(fritv::digest_file(o.phantom));
    for (const char* suffix : {"-mask.img", "-tv.csv", "-wtv.csv", "-tv.img", "-wtv.img"})
        m.outputs.push_back(fritv::digest_file(o.out_prefix + suffix));
    m.config = json{{"phantom", o.phantom},
                    {"kx", o.kx},
                    {"ky", o.ky},
                    {"snr_db", db_json(o.snr_db)},
                    {"size", o.size},
                    {"filter", o.filter},
                    {"method", o.method},
                    {"delta", o.delta},
                    {"gamma", o.gamma},
                    {"floor", o.floor},
                    {"supersample", o.supersample},
                    {"iters", o.iters},
                    {"tol", o.tol},
                    {"lambdas_tv", grid_tv},
                    {"lambdas_wtv", grid_wtv},
                    {"seed", g.seed}};
    m.metrics = json{{"tv_best_snr_db", bt.snr_db},
                     {"tv_best_lambda", bt.lambda},
                     {"wtv_best_snr_db", bw.snr_db},
                     {"wtv_best_lambda", bw.lambda},
                     {"mask_residual", mask_res.residual},
                     {"mask_null_dim", mask_res.null_dim}};
    emit_manifest(g, std::move(m), o.out_prefix + "-wtv.csv");
    return 0;
}

// ---------------------------------------------------------------------------
// config file: JSON object mirroring long flag names; command line wins.
// Implemented by injecting "--key=value" arguments right after the subcommand
// name, with every option taking the last occurrence.
// ---------------------------------------------------------------------------

std::vector<std::string> inject_config(const std::vector<std::string>& args,
                                       const std::vector<std::string>& subcommands) {
    // locate --config and the subcommand token
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].starts_with("--config=")) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw fritv::io_error("cannot open config: " + config_path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw fritv::io_error("config must be a JSON object: " + config_path);

    std::vector<std::string> extra;
    for (const auto& [key, value] : j.items()) {
        if (key == "config") throw fritv::io_error("config may not set 'config'");
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back("--" + key);
        } else if (value.is_string()) {
            extra.push_back("--" + key + "=" + value.get<std::string>());
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value)
                joined += (joined.empty() ? "" : ",") +
                          (v.is_string() ? v.get<std::string>() : v.dump());
            extra.push_back("--" + key + "=" + joined);
        } else {
            extra.push_back("--" + key + "=" + value.dump());
        }
    }

    std::vector<std::string> out;
    bool injected = false;
    for (const std::string& a : args) {
        out.push_back(a);
        if (!injected &&
            std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end()) {
            out.insert(out.end(), extra.begin(), extra.end());
            injected = true;
        }
    }
    if (!injected)
        throw fritv::io_error("--config given but no subcommand to apply it to");
    return out;
}

/// Every option takes the last value given, so config-injected arguments are
/// overridden by anything typed later on the command line.
CLI::Option* last_wins(CLI::Option* opt) {
    return opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

} // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    g.argv.assign(argv, argv + argc);
    if (!g.argv.empty()) g.argv[0] = "fritv"; // manifests record a stable program name

    CLI::App app{"Edge-mask estimation and weighted-TV reconstruction from partial Fourier data"};
    app.require_subcommand(1);
    app.fallthrough();
    last_wins(app.add_option("--seed", g.seed, "RNG seed for noise realizations"));
    last_wins(app.add_option("--threads", g.threads, "matrix-kernel thread count (0 = default)"));
    last_wins(app.add_option("--manifest-dir", g.manifest_dir,
                             "directory for run manifests (default: <output>.<cmd>.manifest.json)"));
    app.add_flag("--quiet", g.quiet, "suppress progress output");
    last_wins(app.add_option("--config", g.config_path,
                             "JSON file of long-option defaults; command line wins"));

    AcquireOpts ao;
    CLI::App* acquire =
        app.add_subcommand("acquire", "simulate k-space samples of a phantom");
    acquire->fallthrough();
    last_wins(acquire->add_option("--phantom", ao.phantom, "builtin name or .json path"));
    last_wins(acquire->add_option("--kx", ao.kx, "k-space half-width in x")->check(CLI::NonNegativeNumber));
    last_wins(acquire->add_option("--ky", ao.ky, "k-space half-width in y")->check(CLI::NonNegativeNumber));
    last_wins(acquire->add_option("--snr-db", ao.snr_db, "additive complex noise level (inf = clean)"));
    last_wins(acquire->add_option("--out", ao.out, "output KSP1 path")->required());

    MaskOpts mo;
    CLI::App* mask = app.add_subcommand("mask", "estimate an edge mask from k-space data");
    mask->fallthrough();
    last_wins(mask->add_option("--in", mo.in, "input KSP1 path")->required());
    last_wins(mask->add_option("--method", mo.method, "ls|cadzow|nullavg"));
    last_wins(mask->add_option("--filter", mo.filter, "filter support K1xL1")->required());
    last_wins(mask->add_option("--delta", mo.delta, "relative singular-value threshold"));
    last_wins(mask->add_option("--rank", mo.rank, "Cadzow target rank (0 = |support|-1)"));
    last_wins(mask->add_option("--cadzow-iters", mo.cadzow_iters, "Cadzow rounds"));
    last_wins(mask->add_option("--render", mo.render, "mask raster size NxN"));
    last_wins(mask->add_option("--out-mask", mo.out_mask, "rendered mask IMG1 path"));
    last_wins(mask->add_option("--out-filter", mo.out_filter, "coefficients FLT1 path"));

    ReconOpts ro;
    CLI::App* recon = app.add_subcommand("recon", "weighted-TV reconstruction");
    recon->fallthrough();
    last_wins(recon->add_option("--in", ro.in, "input KSP1 path")->required());
    last_wins(recon->add_option("--mask", ro.mask, "edge-mask IMG1 path (absent = standard TV)"));
    last_wins(recon->add_option("--lambda", ro.lambda, "regularization weight (0 = adjoint only)"));
    last_wins(recon->add_option("--iters", ro.iters, "max solver iterations"));
    last_wins(recon->add_option("--tol", ro.tol, "relative objective tolerance"));
    last_wins(recon->add_option("--size", ro.size, "reconstruction raster NxN"));
    last_wins(recon->add_option("--gamma", ro.gamma, "mask-to-weight exponent"));
    last_wins(recon->add_option("--floor", ro.floor, "minimum weight"));
    last_wins(recon->add_option("--out", ro.out, "output IMG1 (c128) path")->required());

    EvalOpts eo;
    CLI::App* eval_cmd = app.add_subcommand("eval", "SNR of a reconstruction against a reference");
    eval_cmd->fallthrough();
    last_wins(eval_cmd->add_option("--recon", eo.recon, "reconstruction image")->required());
    last_wins(eval_cmd->add_option("--ref", eo.ref, "reference image")->required());
    last_wins(eval_cmd->add_option("--csv", eo.csv, "append 'recon,ref,snr_db' to this CSV"));

    CompareOpts co;
    CLI::App* compare =
        app.add_subcommand("compare", "full TV vs weighted-TV pipeline with lambda sweeps");
    compare->fallthrough();
    last_wins(compare->add_option("--phantom", co.phantom, "builtin name or .json path"));
    last_wins(compare->add_option("--kx", co.kx, "k-space half-width in x"));
    last_wins(compare->add_option("--ky", co.ky, "k-space half-width in y"));
    last_wins(compare->add_option("--snr-db", co.snr_db, "noise level (inf = clean)"));
    last_wins(compare->add_option("--size", co.size, "reconstruction raster NxN"));
    last_wins(compare->add_option("--filter", co.filter, "mask filter support K1xL1"));
    last_wins(compare->add_option("--method", co.method, "mask method ls|cadzow|nullavg"));
    last_wins(compare->add_option("--delta", co.delta, "singular-value threshold"));
    last_wins(compare->add_option("--gamma", co.gamma, "mask-to-weight exponent"));
    last_wins(compare->add_option("--floor", co.floor, "minimum weight"));
    last_wins(compare->add_option("--supersample", co.supersample, "truth rasterization oversampling"));
    last_wins(compare->add_option("--iters", co.iters, "max solver iterations"));
    last_wins(compare->add_option("--tol", co.tol, "relative objective tolerance"));
    last_wins(compare->add_option("--lambdas", co.lambdas, "comma-separated lambda grid"));
    last_wins(compare->add_option("--lambdas-tv", co.lambdas_tv, "override grid for TV"));
    last_wins(compare->add_option("--lambdas-wtv", co.lambdas_wtv, "override grid for weighted TV"));
    last_wins(compare->add_option("--out-prefix", co.out_prefix, "prefix for emitted files")->required());

    int rc = 0;
    auto dispatch = [&](auto fn) {
        if (g.threads > 0) Eigen::setNbThreads(g.threads);
        rc = fn();
    };
    acquire->callback([&] { dispatch([&] { return run_acquire(g, ao); }); });
    mask->callback([&] { dispatch([&] { return run_mask(g, mo); }); });
    recon->callback([&] { dispatch([&] { return run_recon(g, ro); }); });
    eval_cmd->callback([&] { dispatch([&] { return run_eval(g, eo); }); });
    compare->callback([&] { dispatch([&] { return run_compare(g, co); }); });

    try {
        std::vector<std::string> args(g.argv.begin() + 1, g.argv.end());
        args = inject_config(args, {"acquire", "mask", "recon", "eval", "compare"});
        // CLI11's vector interface consumes arguments in reverse order
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::Success& e) {
        return app.exit(e); // --help and friends
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const fritv::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const fritv::geometry_error& e) {
        std::fprintf(stderr, "geometry error: %s\n", e.what());
        return 4;
    } catch (const fritv::divergence_error& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 5;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "argument error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}

// Command-line front end: degrade/restore/benchmark Poisson-blurred images
// with the adaptive-basis PnP solver and the TV baseline.

#include "qab/admm.hpp"
#include "qab/bench.hpp"
#include "qab/image.hpp"
#include "qab/noise.hpp"
#include "qab/tv.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using Map = std::map<std::string, std::string>;

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "image",   "synthetic",  "side",     "blur-size", "blur-sigma",
        "snr",     "realizations", "realization", "seed",  "method",
        "out",     "energy",     "lambda0",  "gamma",     "planck",
        "sigma-qab", "s",        "rho",      "iters",     "no-omp",
        "tv-weight", "tv-lambda0", "tv-gamma", "tv-iters", "threads",
        "reference", "peak",
    };
    return keys;
}

std::string trimmed(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Flat key=value lines, '#' comments. CLI flags win over file entries.
void merge_config_file(Map& kv, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trimmed(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value");
        const std::string key = trimmed(text.substr(0, eq));
        const std::string value = trimmed(text.substr(eq + 1));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw std::invalid_argument("config: unknown key '" + key + "'");
        kv.emplace(key, value); // emplace: existing CLI value stays
    }
}

bool has(const Map& kv, const std::string& key) { return kv.count(key) != 0; }

std::string get_str(const Map& kv, const std::string& key, const std::string& def) {
    const auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

std::string require_str(const Map& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty())
        throw std::invalid_argument("missing required option --" + key);
    return it->second;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (used != value.size())
        throw std::invalid_argument("option --" + key + ": '" + value +
                                    "' is not a number");
    return v;
}

double get_double(const Map& kv, const std::string& key, double def) {
    const auto it = kv.find(key);
    return it == kv.end() ? def : parse_double(key, it->second);
}

long long parse_ll(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (used != value.size())
        throw std::invalid_argument("option --" + key + ": '" + value +
                                    "' is not an integer");
    return v;
}

int get_int(const Map& kv, const std::string& key, int def) {
    const auto it = kv.find(key);
    return it == kv.end() ? def : static_cast<int>(parse_ll(key, it->second));
}

std::uint64_t get_u64(const Map& kv, const std::string& key, std::uint64_t def) {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(it->second, &used);
        if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("option --" + key + ": '" + it->second +
                                "' is not an unsigned integer");
}

bool get_bool(const Map& kv, const std::string& key, bool def) {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("option --" + key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const std::string part = trimmed(
            value.substr(start, comma == std::string::npos ? std::string::npos
                                                           : comma - start));
        if (!part.empty()) parts.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parts;
}

std::vector<double> get_dlist(const Map& kv, const std::string& key,
                              std::vector<double> def) {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    std::vector<double> out;
    for (const std::string& part : split_list(it->second))
        out.push_back(parse_double(key, part));
    if (out.empty())
        throw std::invalid_argument("option --" + key + ": empty list");
    return out;
}

std::vector<std::string> get_slist(const Map& kv, const std::string& key,
                                   std::vector<std::string> def) {
    const auto it = kv.find(key);
    if (it == kv.end()) return def;
    auto out = split_list(it->second);
    if (out.empty())
        throw std::invalid_argument("option --" + key + ": empty list");
    return out;
}

qab::QabOverrides qab_overrides(const Map& kv) {
    qab::QabOverrides o;
    if (has(kv, "energy")) o.energy = get_double(kv, "energy", 0);
    if (has(kv, "lambda0")) o.lambda0 = get_double(kv, "lambda0", 0);
    if (has(kv, "gamma")) o.gamma = get_double(kv, "gamma", 0);
    if (has(kv, "planck")) o.planck = get_double(kv, "planck", 0);
    if (has(kv, "sigma-qab")) o.sigma_qab = get_double(kv, "sigma-qab", 0);
    if (has(kv, "s")) o.s = get_int(kv, "s", 0);
    if (has(kv, "rho")) o.rho = get_int(kv, "rho", 0);
    if (has(kv, "iters")) o.iters = get_int(kv, "iters", 0);
    if (get_bool(kv, "no-omp", false)) o.use_omp = false;
    return o;
}

qab::TvOverrides tv_overrides(const Map& kv) {
    qab::TvOverrides o;
    if (has(kv, "tv-weight")) o.tv_weight = get_double(kv, "tv-weight", 0);
    if (has(kv, "tv-lambda0")) o.lambda0 = get_double(kv, "tv-lambda0", 0);
    if (has(kv, "tv-gamma")) o.gamma = get_double(kv, "tv-gamma", 0);
    if (has(kv, "tv-iters")) o.iters = get_int(kv, "tv-iters", 0);
    return o;
}

qab::ExperimentSpec spec_from(const Map& kv) {
    qab::ExperimentSpec spec;
    spec.image_path = get_str(kv, "image", "");
    spec.synthetic = qab::synthetic_kind_from(get_str(kv, "synthetic", "shapes"));
    spec.side = get_int(kv, "side", 64);
    spec.blur_size = get_int(kv, "blur-size", 4);
    spec.blur_sigma = get_double(kv, "blur-sigma", 3.0);
    spec.snr_db = get_dlist(kv, "snr", {15.0});
    spec.realizations = get_int(kv, "realizations", 20);
    spec.seed = get_u64(kv, "seed", 1);
    spec.methods = get_slist(kv, "method", {"qab", "tv"});
    spec.out_dir = get_str(kv, "out", "");
    spec.threads = get_int(kv, "threads", 0);
    spec.qab = qab_overrides(kv);
    spec.tv = tv_overrides(kv);
    return spec;
}

qab::Image clean_from(const Map& kv) {
    const std::string path = get_str(kv, "image", "");
    if (!path.empty()) return qab::load_image_auto(path);
    return qab::make_synthetic(
        qab::synthetic_kind_from(get_str(kv, "synthetic", "shapes")),
        get_int(kv, "side", 64), get_u64(kv, "seed", 1));
}

std::string format_db(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

int cmd_synth(const Map& kv) {
    const std::string out = require_str(kv, "out");
    const qab::Image img = qab::make_synthetic(
        qab::synthetic_kind_from(get_str(kv, "synthetic", "shapes")),
        get_int(kv, "side", 64), get_u64(kv, "seed", 1));
    qab::save_image_auto(img, out);
    std::cout << "wrote " << out << " (" << img.side() << "x" << img.side()
              << ", range [" << img.min_value() << ", " << img.max_value()
              << "])\n";
    return 0;
}

int cmd_degrade(const Map& kv) {
    const std::string out_dir = require_str(kv, "out");
    const qab::Image clean = clean_from(kv);
    const qab::BlurOperator blur(
        qab::gaussian_psf(get_int(kv, "blur-size", 4),
                          get_double(kv, "blur-sigma", 3.0)),
        clean.side());
    const double snr = get_dlist(kv, "snr", {15.0}).front();
    const qab::NoiseModel model =
        qab::calibrate_peak(clean, blur, snr, get_u64(kv, "seed", 1));
    const qab::Degraded deg =
        qab::degrade_image(clean, blur, model, get_u64(kv, "realization", 0));

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    qab::write_image(clean, (dir / "clean.csv").string(), qab::ImageFormat::csv);
    qab::write_image(deg.scaled_clean, (dir / "scaled_clean.csv").string(),
                     qab::ImageFormat::csv);
    qab::write_image(deg.blurred, (dir / "blurred.csv").string(),
                     qab::ImageFormat::csv);
    qab::write_image(deg.observed, (dir / "observed.csv").string(),
                     qab::ImageFormat::csv);

    std::cout << "peak scale " << model.peak << ", target "
              << format_db(model.target_snr_db) << " dB, measured "
              << format_db(deg.snr_db) << " dB\n"
              << "wrote clean/scaled_clean/blurred/observed CSVs to " << out_dir
              << "\n";
    return 0;
}

int cmd_restore(const Map& kv) {
    const std::string out_dir = require_str(kv, "out");
    const qab::Image observed = qab::load_image_auto(require_str(kv, "image"));
    const qab::BlurOperator blur(
        qab::gaussian_psf(get_int(kv, "blur-size", 4),
                          get_double(kv, "blur-sigma", 3.0)),
        observed.side());
    const std::string method = get_slist(kv, "method", {"qab"}).front();
    const double snr = get_dlist(kv, "snr", {15.0}).front();

    qab::Image reference;
    const qab::Image* ref_ptr = nullptr;
    if (has(kv, "reference")) {
        reference = qab::load_image_auto(require_str(kv, "reference"));
        ref_ptr = &reference;
    }

    std::pair<qab::Image, qab::AdmmTrace> run;
    if (method == "qab")
        run = qab::run_qab_pnp(observed, blur, qab::make_qab_config(snr, qab_overrides(kv)),
                               ref_ptr);
    else if (method == "tv")
        run = qab::run_tv_admm(observed, blur, qab::make_tv_config(snr, tv_overrides(kv)),
                               ref_ptr);
    else
        throw std::invalid_argument("unknown method '" + method + "' (qab, tv)");

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    qab::write_image(run.first, (dir / ("restored_" + method + ".csv")).string(),
                     qab::ImageFormat::csv);
    if (has(kv, "peak")) {
        const double peak = get_double(kv, "peak", 1.0);
        if (!(peak > 0.0)) throw std::invalid_argument("option --peak must be positive");
        qab::write_image(qab::Image(run.first.side(), run.first.vec() / peak),
                         (dir / ("restored_" + method + "_unit.csv")).string(),
                         qab::ImageFormat::csv);
    }
    qab::write_trace_csv((dir / ("trace_" + method + ".csv")).string(), run.second);

    const qab::IterationRecord& last = run.second.records.back();
    std::cout << method << ": " << run.second.records.size() << " iterations, "
              << "final objective " << last.objective << ", primal residual "
              << last.primal_residual;
    if (ref_ptr) std::cout << ", final rmse " << last.rmse;
    if (run.second.sparsity) std::cout << ", T=" << run.second.sparsity;
    std::cout << "\nwrote restored image and trace to " << out_dir << "\n";
    return 0;
}

int cmd_bench(const Map& kv) {
    const qab::ExperimentSpec spec = spec_from(kv);
    const qab::ExperimentResult result = qab::run_experiment(spec);

    std::printf("%-26s %-6s %8s %22s %19s %12s\n", "sample", "method", "snr(dB)",
                "psnr(dB)", "ssim", "time(s)");
    for (const qab::ResultRow& row : result.rows) {
        std::printf("%-26s %-6s %8.6g %12.2f +- %6.2f %12.4f +- %.4f %12.2f\n",
                    row.sample.c_str(), row.method.c_str(), row.target_snr_db,
                    row.psnr_mean, row.psnr_std, row.ssim_mean, row.ssim_std,
                    row.mean_millis / 1000.0);
        if (!row.note.empty()) std::printf("    note: %s\n", row.note.c_str());
    }
    if (!spec.out_dir.empty())
        std::cout << "wrote results.csv, records.csv, timings.csv and traces to "
                  << spec.out_dir << "\n";

    int attempted = 0, failed = 0;
    for (const qab::RunRecord& rec : result.records)
        if (rec.method != "obs") {
            ++attempted;
            failed += rec.failed ? 1 : 0;
        }
    return attempted > 0 && failed == attempted ? 2 : 0;
}

int cmd_ablate(const Map& kv) {
    // The sweep consumes --energy as a list; keep it away from the per-run
    // overrides, which expect a single value (the ablation sets the cutoff
    // per row anyway).
    Map rest = kv;
    rest.erase("energy");
    qab::ExperimentSpec spec = spec_from(rest);
    if (!has(kv, "realizations")) spec.realizations = 2;
    std::vector<double> cutoffs;
    if (has(kv, "energy"))
        cutoffs = get_dlist(kv, "energy", {});
    else
        cutoffs = {qab::make_qab_config(spec.snr_db.front(), spec.qab).energy_cutoff};

    const std::vector<qab::AblationRow> rows = qab::run_omp_ablation(spec, cutoffs);
    std::printf("%10s %-5s %9s %13s %10s %10s\n", "cutoff", "mode", "T",
                "realizations", "psnr(dB)", "time(s)");
    for (const qab::AblationRow& row : rows) {
        std::printf("%10.6g %-5s %9d %13d %10.2f %10.2f\n", row.energy_cutoff,
                    row.use_omp ? "omp" : "full", row.sparsity, row.realizations,
                    row.psnr_mean, row.mean_millis / 1000.0);
        if (!row.note.empty()) std::printf("    note: %s\n", row.note.c_str());
    }
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2)
        if (rows[i].mean_millis > 0.0 && rows[i + 1].mean_millis > 0.0)
            std::printf("cutoff %.6g: speedup %.2fx\n", rows[i].energy_cutoff,
                        rows[i + 1].mean_millis / rows[i].mean_millis);
    if (!spec.out_dir.empty())
        std::cout << "wrote ablation.csv to " << spec.out_dir << "\n";
    return 0;
}

int cmd_trace(const Map& kv) {
    const std::string out_dir = require_str(kv, "out");
    const qab::Image clean = clean_from(kv);
    const qab::BlurOperator blur(
        qab::gaussian_psf(get_int(kv, "blur-size", 4),
                          get_double(kv, "blur-sigma", 3.0)),
        clean.side());
    const double snr = get_dlist(kv, "snr", {15.0}).front();
    const std::string method = get_slist(kv, "method", {"qab"}).front();
    const qab::NoiseModel model =
        qab::calibrate_peak(clean, blur, snr, get_u64(kv, "seed", 1));
    const qab::Degraded deg =
        qab::degrade_image(clean, blur, model, get_u64(kv, "realization", 0));

    std::pair<qab::Image, qab::AdmmTrace> run;
    if (method == "qab")
        run = qab::run_qab_pnp(deg.observed, blur,
                               qab::make_qab_config(snr, qab_overrides(kv)),
                               &deg.scaled_clean);
    else if (method == "tv")
        run = qab::run_tv_admm(deg.observed, blur,
                               qab::make_tv_config(snr, tv_overrides(kv)),
                               &deg.scaled_clean);
    else
        throw std::invalid_argument("unknown method '" + method + "' (qab, tv)");

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    qab::emit_convergence_trace(run.second,
                                (dir / ("convergence_" + method + ".csv")).string());
    qab::write_trace_csv((dir / ("trace_" + method + ".csv")).string(), run.second);

    const double first = std::log10(run.second.records.front().rmse);
    const double last = std::log10(run.second.records.back().rmse);
    std::cout << method << ": log10 rmse " << first << " -> " << last << " over "
              << run.second.records.size() << " iterations\n"
              << "wrote convergence and trace CSVs to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    // Threaded BLAS backends may reduce in nondeterministic order; results
    // are specified to be reproducible, so pin the backend to one thread.
    setenv("OPENBLAS_NUM_THREADS", "1", 0);

    CLI::App app{"Poisson deblurring with an adaptive Schrodinger-eigenbasis "
                 "plug-and-play ADMM solver and a TV baseline"};
    app.require_subcommand(1);

    Map kv;
    std::string config_path;

    const auto opt = [&kv](CLI::App* cmd, const std::string& key,
                           const std::string& desc) {
        cmd->add_option_function<std::string>(
            "--" + key, [&kv, key](const std::string& v) { kv[key] = v; }, desc);
    };
    const auto flag = [&kv](CLI::App* cmd, const std::string& key,
                            const std::string& desc) {
        cmd->add_flag_callback(
            "--" + key, [&kv, key] { kv[key] = "1"; }, desc);
    };
    const auto add_config = [&config_path](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "flat key=value file mirroring the flags; flags win");
    };
    const auto add_input = [&](CLI::App* cmd) {
        opt(cmd, "image", "input image (.pgm or .csv)");
        opt(cmd, "synthetic", "synthetic kind when no image: shapes|blocks|gradient");
        opt(cmd, "side", "synthetic image side (default 64)");
        opt(cmd, "seed", "master seed (default 1)");
    };
    const auto add_blur = [&](CLI::App* cmd) {
        opt(cmd, "blur-size", "blur kernel size k (default 4)");
        opt(cmd, "blur-sigma", "blur kernel std-dev (default 3)");
    };
    const auto add_hyper = [&](CLI::App* cmd) {
        opt(cmd, "energy", "energy cutoff E (comma list to sweep in ablate-omp)");
        opt(cmd, "lambda0", "initial penalty");
        opt(cmd, "gamma", "penalty growth factor");
        opt(cmd, "planck", "kinetic coupling of the Hamiltonian");
        opt(cmd, "sigma-qab", "guide smoothing std-dev");
        opt(cmd, "s", "full-weight band of the threshold profile");
        opt(cmd, "rho", "decay length of the threshold profile");
        opt(cmd, "iters", "outer ADMM iterations");
        flag(cmd, "no-omp", "full-projection z-step instead of the pursuit");
        opt(cmd, "tv-weight", "TV regularization strength");
        opt(cmd, "tv-lambda0", "TV initial penalty");
        opt(cmd, "tv-gamma", "TV penalty growth factor");
        opt(cmd, "tv-iters", "TV outer iterations");
    };

    CLI::App* synth = app.add_subcommand("synth", "write a synthetic test image");
    opt(synth, "synthetic", "kind: shapes|blocks|gradient");
    opt(synth, "side", "image side (default 64)");
    opt(synth, "seed", "placement seed (default 1)");
    opt(synth, "out", "output file (.pgm or .csv)");
    add_config(synth);

    CLI::App* degrade = app.add_subcommand("degrade", "blur + Poisson-sample an image");
    add_input(degrade);
    add_blur(degrade);
    opt(degrade, "snr", "target SNR in dB (default 15)");
    opt(degrade, "realization", "noise realization index (default 0)");
    opt(degrade, "out", "output directory");
    add_config(degrade);

    CLI::App* restore = app.add_subcommand("restore", "restore a degraded image");
    opt(restore, "image", "observed image in counts (.pgm or .csv)");
    add_blur(restore);
    opt(restore, "method", "qab or tv (default qab)");
    opt(restore, "snr", "SNR band selecting hyperparameter defaults (default 15)");
    opt(restore, "reference", "ground truth in counts, enables the rmse trace");
    opt(restore, "peak", "calibration scale; also writes the unit-scale result");
    opt(restore, "out", "output directory");
    add_hyper(restore);
    add_config(restore);

    CLI::App* bench = app.add_subcommand("bench", "full degrade/restore/score protocol");
    add_input(bench);
    add_blur(bench);
    opt(bench, "snr", "target SNR list, e.g. 10,15,20 (default 15)");
    opt(bench, "realizations", "noise realizations per SNR (default 20)");
    opt(bench, "method", "methods to run (default qab,tv)");
    opt(bench, "threads", "worker threads (default: hardware)");
    opt(bench, "out", "output directory for CSVs");
    add_hyper(bench);
    add_config(bench);

    CLI::App* ablate = app.add_subcommand("ablate-omp",
                                          "pursuit-with-cutoff vs full projection");
    add_input(ablate);
    add_blur(ablate);
    opt(ablate, "snr", "target SNR (default 15)");
    opt(ablate, "realizations", "realizations per mode (default 2)");
    opt(ablate, "out", "output directory");
    add_hyper(ablate);
    add_config(ablate);

    CLI::App* trace = app.add_subcommand("trace", "single-run convergence trace");
    add_input(trace);
    add_blur(trace);
    opt(trace, "snr", "target SNR (default 15)");
    opt(trace, "method", "qab or tv (default qab)");
    opt(trace, "realization", "noise realization index (default 0)");
    opt(trace, "out", "output directory");
    add_hyper(trace);
    add_config(trace);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (!config_path.empty()) merge_config_file(kv, config_path);
        if (synth->parsed()) return cmd_synth(kv);
        if (degrade->parsed()) return cmd_degrade(kv);
        if (restore->parsed()) return cmd_restore(kv);
        if (bench->parsed()) return cmd_bench(kv);
        if (ablate->parsed()) return cmd_ablate(kv);
        if (trace->parsed()) return cmd_trace(kv);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

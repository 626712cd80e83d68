#pragma once

#include "qab/admm.hpp"
#include "qab/image.hpp"
#include "qab/noise.hpp"
#include "qab/tv.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qab {

enum class SyntheticKind { shapes, blocks, gradient };

SyntheticKind synthetic_kind_from(const std::string& name);
std::string to_string(SyntheticKind kind);

/// Deterministic piecewise test images in [0,1] with at least three distinct
/// intensity levels; the seed jitters shape placement.
Image make_synthetic(SyntheticKind kind, int side, std::uint64_t seed);

/// Per-target-SNR hyperparameter defaults (nearest of the 10/15/20 dB sets).
AdmmConfig default_qab_config(double target_snr_db);
TvConfig default_tv_config(double target_snr_db);

/// Field-level overrides applied on top of the per-SNR defaults, mirroring
/// the CLI flags.
struct QabOverrides {
    std::optional<double> energy, lambda0, gamma, planck, sigma_qab;
    std::optional<int> s, rho, iters;
    std::optional<bool> use_omp;
};

struct TvOverrides {
    std::optional<double> tv_weight, lambda0, gamma;
    std::optional<int> iters;
};

AdmmConfig make_qab_config(double target_snr_db, const QabOverrides& overrides);
TvConfig make_tv_config(double target_snr_db, const TvOverrides& overrides);

struct ExperimentSpec {
    std::string image_path; // empty: use the synthetic generator below
    SyntheticKind synthetic = SyntheticKind::shapes;
    int side = 64;
    int blur_size = 4;
    double blur_sigma = 3.0;
    std::vector<double> snr_db = {15.0};
    int realizations = 20;
    std::uint64_t seed = 1;
    std::vector<std::string> methods = {"qab", "tv"};
    QabOverrides qab;
    TvOverrides tv;
    std::string out_dir; // empty: keep results in memory only
    int threads = 0;     // 0: hardware concurrency
};

/// One (snr, method, realization) cell. Metrics are scored against the clean
/// image in its original intensity scale; the pseudo-method "obs" scores the
/// raw degraded observation.
struct RunRecord {
    std::string sample;
    std::string method;
    double target_snr_db = 0.0;
    int realization = 0;
    double measured_snr_db = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double rmse = 0.0;
    double millis = 0.0;
    bool failed = false;
    std::string error;
};

struct ResultRow {
    std::string sample;
    std::string method;
    double target_snr_db = 0.0;
    int realizations = 0; // successful runs entering the aggregate
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
    double mean_millis = 0.0;
    std::string note; // failure summary when some cells failed
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<RunRecord> records;
    std::vector<AdmmTrace> traces; // aligned with records; empty for "obs"
};

/// Degrade/restore/score over all (snr, method, realization) cells with a
/// worker pool; realizations use derived seed streams so the schedule cannot
/// change any output. With out_dir set, writes results.csv, records.csv,
/// per-run convergence traces (all deterministic under a fixed seed) and
/// timings.csv (wall clock, excluded from the determinism guarantee).
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct AblationRow {
    double energy_cutoff = 0.0;
    bool use_omp = true;
    int sparsity = 0;
    int realizations = 0;
    double psnr_mean = 0.0;
    double mean_millis = 0.0;
    std::string note;
};

/// Cutoff-restricted pursuit vs full-projection reference at each cutoff;
/// wall time covers the whole restoration including basis construction.
std::vector<AblationRow> run_omp_ablation(const ExperimentSpec& spec,
                                          const std::vector<double>& energy_cutoffs);

/// Plot-ready (iteration, log10 rmse) columns; requires a trace recorded
/// with a reference.
void emit_convergence_trace(const AdmmTrace& trace, std::ostream& out);
bool emit_convergence_trace(const AdmmTrace& trace, const std::string& path);

struct Aggregate {
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation
};

Aggregate aggregate_two_pass(const std::vector<double>& values);
Aggregate aggregate_streaming(const std::vector<double>& values);

/// Reads PGM or CSV by extension.
Image load_image_auto(const std::string& path);
void save_image_auto(const Image& image, const std::string& path);

} // namespace qab

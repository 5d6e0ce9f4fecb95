// Experiment harness: two-phase layer/hidden sweeps, CPU inference latency,
// the SoR ablation, and the peak-detector comparison.
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cfs/models.hpp"
#include "cfs/peakdetect.hpp"
#include "cfs/simulate.hpp"

namespace cfs::bench {

struct SweepGrid {
    std::vector<models::ModelKind> kinds{models::ModelKind::Fcn, models::ModelKind::Rnn,
                                         models::ModelKind::Transformer};
    std::vector<int> layer_options{1, 2, 4, 8};
    std::vector<int> hidden_options{64, 128, 256, 512, 1024};
    int phase1_hidden = 256;
    int seeds = 3;
    std::uint64_t seed0 = 1;
};

struct SweepRow {
    models::ModelKind kind = models::ModelKind::Fcn;
    int phase = 1;
    int layers = 0;
    int hidden = 0;
    int heads = 0;
    std::uint64_t seed = 0;
    double test_mae = 0.0;
    double train_s = 0.0;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::map<models::ModelKind, int> best_layers;  // phase-1 argmin (median over seeds)
};

/// Phase 1 sweeps layers at hidden = phase1_hidden; phase 2 sweeps hidden at
/// each kind's phase-1 best layer count. Per-cell learning rates follow
/// default_lr. Cell failures are recorded and the sweep continues.
SweepResult run_sweep(const SweepGrid& grid, const prep::WindowedDataset& dataset,
                      const models::TrainConfig& cfg);

struct LatencyReport {
    double mean_ms = 0.0;
    double p99_ms = 0.0;
    int n_windows = 0;
    int repetitions = 0;
    std::string host;
};

/// Per-window wall-clock inference over a deterministic stream; the first
/// 10% of repetitions warm up and are discarded. Throws EmptyRun.
LatencyReport measure_latency(const models::ModelParams& model, int n_windows, int repetitions);

struct AblationRow {
    models::ModelSpec spec;
    double mae_sor_free = 0.0;   // medians over seeds
    double mae_sor_heavy = 0.0;
};

struct SorAblation {
    std::vector<AblationRow> rows;
    // MAE(first rnn spec) / MAE(first fcn spec) per dataset.
    double gru_over_fcn_free = 0.0;
    double gru_over_fcn_heavy = 0.0;
};

SorAblation sor_ablation(const prep::WindowedDataset& sor_free,
                         const prep::WindowedDataset& sor_heavy,
                         const std::vector<models::ModelSpec>& specs,
                         const models::TrainConfig& cfg, int seeds = 3,
                         std::uint64_t seed0 = 1);

struct PeakComparison {
    std::array<kde::PeakStats, 3> per_sensor{};  // a = KDE picks, b = baseline picks
    std::array<double, 3> bragg{};
    std::array<int, 3> kde_failures{};  // frames with no detected peak
    int frames = 0;
};

/// 0 g spectra per sensor; per-frame picks by both algorithms, Table-layout
/// stats (mean and sigma per sensor and method).
PeakComparison peak_comparison(int n_frames, const sim::SpectrumConfig& cfg,
                               const FbgPhysics& phys, const kde::KdeParams& params);

std::string host_descriptor();

// Result rendering: aligned text for the console, CSV for files. The CSV's
// train_s column is the only timing field.
std::string sweep_csv(const SweepResult& r);
std::string sweep_text(const SweepResult& r);
std::string ablation_text(const SorAblation& r);
std::string peak_comparison_text(const PeakComparison& r);

}  // namespace cfs::bench

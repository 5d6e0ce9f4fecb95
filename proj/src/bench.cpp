#include "cfs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "cfs/rng.hpp"

namespace cfs::bench {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* format, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

double run_cell(const models::ModelSpec& spec, const prep::WindowedDataset& dataset,
                const models::TrainConfig& base_cfg, std::uint64_t seed, double* train_s) {
    models::TrainConfig cfg = base_cfg;
    cfg.lr = models::default_lr(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const models::ModelParams init = models::build_model(spec, seed);
    const models::TrainResult result = models::train(init, dataset, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (train_s) *train_s = std::chrono::duration<double>(t1 - t0).count();

    prep::WindowedDataset test;
    for (int id : result.split.test) test.push_back(dataset[static_cast<std::size_t>(id)]);
    if (test.empty())  // tiny datasets: fall back to validation episodes
        for (int id : result.split.val) test.push_back(dataset[static_cast<std::size_t>(id)]);
    return models::evaluate_mae(result.best, test);
}

}  // namespace

SweepResult run_sweep(const SweepGrid& grid, const prep::WindowedDataset& dataset,
                      const models::TrainConfig& cfg) {
    SweepResult out;
    auto run_rows = [&](const models::ModelSpec& spec, int phase) {
        std::vector<double> maes;
        for (int s = 0; s < std::max(1, grid.seeds); ++s) {
            SweepRow row;
            row.kind = spec.kind;
            row.phase = phase;
            row.layers = spec.layers;
            row.hidden = spec.hidden;
            row.heads = spec.kind == models::ModelKind::Transformer
                            ? models::resolve_heads(spec.hidden, spec.heads)
                            : 0;
            row.seed = grid.seed0 + static_cast<std::uint64_t>(s);
            try {
                row.test_mae = run_cell(spec, dataset, cfg, row.seed, &row.train_s);
                maes.push_back(row.test_mae);
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
            out.rows.push_back(std::move(row));
        }
        return median(std::move(maes));
    };

    // Phase 1: fix the hidden dimension, find each kind's best layer count.
    for (models::ModelKind kind : grid.kinds) {
        double best = std::numeric_limits<double>::infinity();
        int best_layers = grid.layer_options.empty() ? 1 : grid.layer_options.front();
        for (int layers : grid.layer_options) {
            models::ModelSpec spec{kind, layers, grid.phase1_hidden, 0, 300};
            const double m = run_rows(spec, 1);
            if (std::isfinite(m) && m < best) {
                best = m;
                best_layers = layers;
            }
        }
        if (!grid.layer_options.empty()) out.best_layers[kind] = best_layers;
    }

    // Phase 2: fix the best layer count, vary the hidden dimension.
    for (models::ModelKind kind : grid.kinds) {
        if (out.best_layers.find(kind) == out.best_layers.end()) continue;
        for (int hidden : grid.hidden_options) {
            models::ModelSpec spec{kind, out.best_layers[kind], hidden, 0, 300};
            run_rows(spec, 2);
        }
    }
    return out;
}

LatencyReport measure_latency(const models::ModelParams& model, int n_windows, int repetitions) {
    if (n_windows <= 0 || repetitions <= 0)
        throw Error(ErrorCode::EmptyRun, "measure_latency: need n_windows and repetitions >= 1");

    Rng rng(0xbe9c, 7);
    std::vector<std::vector<double>> windows(static_cast<std::size_t>(n_windows),
                                             std::vector<double>(300));
    for (auto& w : windows)
        for (double& v : w) v = rng.normal(0.0, 0.05);

    const int warmup = std::max(1, repetitions / 10);
    std::vector<double> per_window_ms;
    per_window_ms.reserve(static_cast<std::size_t>(n_windows) *
                          static_cast<std::size_t>(repetitions));
    models::SequenceRunner runner(model);
    for (int rep = 0; rep < repetitions + warmup; ++rep) {
        runner.reset();
        for (const auto& w : windows) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile double sink = runner.step(w);
            (void)sink;
            const auto t1 = std::chrono::steady_clock::now();
            if (rep >= warmup)
                per_window_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }

    LatencyReport rep;
    rep.n_windows = n_windows;
    rep.repetitions = repetitions;
    rep.host = host_descriptor();
    double acc = 0.0;
    for (double v : per_window_ms) acc += v;
    rep.mean_ms = acc / static_cast<double>(per_window_ms.size());
    std::sort(per_window_ms.begin(), per_window_ms.end());
    const std::size_t idx = per_window_ms.empty()
                                ? 0
                                : std::min(per_window_ms.size() - 1,
                                           static_cast<std::size_t>(std::ceil(
                                               0.99 * static_cast<double>(per_window_ms.size()))) -
                                               1);
    rep.p99_ms = per_window_ms.empty() ? 0.0 : per_window_ms[idx];
    return rep;
}

SorAblation sor_ablation(const prep::WindowedDataset& sor_free,
                         const prep::WindowedDataset& sor_heavy,
                         const std::vector<models::ModelSpec>& specs,
                         const models::TrainConfig& cfg, int seeds, std::uint64_t seed0) {
    SorAblation out;
    for (const auto& spec : specs) {
        AblationRow row;
        row.spec = spec;
        std::vector<double> free_maes, heavy_maes;
        for (int s = 0; s < std::max(1, seeds); ++s) {
            const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(s);
            free_maes.push_back(run_cell(spec, sor_free, cfg, seed, nullptr));
            heavy_maes.push_back(run_cell(spec, sor_heavy, cfg, seed, nullptr));
        }
        row.mae_sor_free = median(std::move(free_maes));
        row.mae_sor_heavy = median(std::move(heavy_maes));
        out.rows.push_back(row);
    }

    auto find_mae = [&](models::ModelKind kind, bool heavy) {
        for (const auto& row : out.rows)
            if (row.spec.kind == kind) return heavy ? row.mae_sor_heavy : row.mae_sor_free;
        return std::numeric_limits<double>::quiet_NaN();
    };
    out.gru_over_fcn_free =
        find_mae(models::ModelKind::Rnn, false) / find_mae(models::ModelKind::Fcn, false);
    out.gru_over_fcn_heavy =
        find_mae(models::ModelKind::Rnn, true) / find_mae(models::ModelKind::Fcn, true);
    return out;
}

PeakComparison peak_comparison(int n_frames, const sim::SpectrumConfig& cfg,
                               const FbgPhysics& phys, const kde::KdeParams& params) {
    if (n_frames < 100)
        throw Error(ErrorCode::InvalidSpec, "peak_comparison: need at least 100 frames");
    PeakComparison out;
    out.frames = n_frames;
    for (int s = 0; s < 3; ++s) {
        out.bragg[static_cast<std::size_t>(s)] = phys.lambda_b[static_cast<std::size_t>(s)];
        std::vector<double> kde_picks, base_picks;
        kde_picks.reserve(static_cast<std::size_t>(n_frames));
        base_picks.reserve(static_cast<std::size_t>(n_frames));
        for (int f = 0; f < n_frames; ++f) {
            Rng rng(cfg.seed, static_cast<std::uint64_t>(s) * 1000003ULL +
                                  static_cast<std::uint64_t>(f));
            const SpectrumFrame frame =
                sim::gen_spectrum(out.bragg[static_cast<std::size_t>(s)], cfg, rng);
            base_picks.push_back(kde::baseline_peak(frame));
            try {
                kde_picks.push_back(kde::peak_wavelength(frame, params));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoPeak) throw;
                ++out.kde_failures[static_cast<std::size_t>(s)];
            }
        }
        out.per_sensor[static_cast<std::size_t>(s)] = kde::compare_stats(kde_picks, base_picks);
    }
    return out;
}

std::string host_descriptor() {
    std::string model = "unknown-cpu";
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(colon + 1);
                while (!model.empty() && model.front() == ' ') model.erase(model.begin());
            }
            break;
        }
    }
    return model + " | threads=" + std::to_string(std::thread::hardware_concurrency()) +
           " | cxx=" __VERSION__;
}

std::string sweep_csv(const SweepResult& r) {
    std::string out = "kind,phase,layers,hidden,heads,seed,status,test_mae_g,train_s\n";
    for (const auto& row : r.rows) {
        out += models::kind_name(row.kind) + "," + std::to_string(row.phase) + "," +
               std::to_string(row.layers) + "," + std::to_string(row.hidden) + "," +
               std::to_string(row.heads) + "," + std::to_string(row.seed) + "," +
               (row.failed ? "failed" : "ok") + "," +
               (row.failed ? "" : fmt("%.6f", row.test_mae)) + "," + fmt("%.3f", row.train_s) +
               "\n";
    }
    return out;
}

std::string sweep_text(const SweepResult& r) {
    std::string out = "kind         phase layers hidden heads seed  test MAE (g)\n";
    for (const auto& row : r.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-12s %5d %6d %6d %5d %4llu  %s\n",
                      models::kind_name(row.kind).c_str(), row.phase, row.layers, row.hidden,
                      row.heads, static_cast<unsigned long long>(row.seed),
                      row.failed ? ("failed: " + row.error).c_str()
                                 : fmt("%.4f", row.test_mae).c_str());
        out += buf;
    }
    for (const auto& [kind, layers] : r.best_layers)
        out += "best layers for " + models::kind_name(kind) + ": " + std::to_string(layers) + "\n";
    return out;
}

std::string ablation_text(const SorAblation& r) {
    std::string out = "model              sor-free MAE (g)  sor-heavy MAE (g)\n";
    for (const auto& row : r.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-12s-%d-%-4d %16.4f %18.4f\n",
                      models::kind_name(row.spec.kind).c_str(), row.spec.layers, row.spec.hidden,
                      row.mae_sor_free, row.mae_sor_heavy);
        out += buf;
    }
    out += "GRU/FCN MAE ratio: sor-free " + fmt("%.3f", r.gru_over_fcn_free) + ", sor-heavy " +
           fmt("%.3f", r.gru_over_fcn_heavy) + "\n";
    return out;
}

std::string peak_comparison_text(const PeakComparison& r) {
    std::string out = "              KDE                    baseline\n";
    out += "sensor   mean (nm)   sigma (nm)   mean (nm)   sigma (nm)\n";
    for (int s = 0; s < 3; ++s) {
        const auto& st = r.per_sensor[static_cast<std::size_t>(s)];
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%6d  %10.4f  %10.2e  %10.4f  %10.2e\n", s + 1, st.mean_a,
                      st.std_a, st.mean_b, st.std_b);
        out += buf;
    }
    return out;
}

}  // namespace cfs::bench

// cfs — command-line front end for the contact-force sensing pipeline:
// synthetic episode generation, peak detection, preprocessing, training,
// evaluation, benchmarks, and (streaming) inference.
#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfs/bench.hpp"
#include "cfs/dataio.hpp"
#include "cfs/models.hpp"
#include "cfs/peakdetect.hpp"
#include "cfs/preprocess.hpp"
#include "cfs/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfs;

namespace {

// Thrown for semantic flag problems; maps to exit code 2 like parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file " + path);
    try {
        json j;
        is >> j;
        return j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
}

// Layering: compiled defaults, then the config-file section, then flags.
template <typename T>
void layer(const CLI::App& app, const std::string& flag, const json& cfg, const char* section,
           const char* key, T& value) {
    if (app.count(flag) > 0) return;
    if (cfg.contains(section) && cfg[section].contains(key))
        value = cfg[section][key].get<T>();
}

void write_manifest(const fs::path& out, const json& manifest) {
    fs::create_directories(out);
    std::ofstream os(out / "manifest.json");
    os << manifest.dump(2) << "\n";
}

prep::WindowedDataset load_windows(const fs::path& data_dir) {
    prep::WindowedDataset dataset;
    for (const Episode& ep : io::read_dataset(data_dir))
        dataset.push_back(prep::process_episode(ep));
    return dataset;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

// ---------------------------------------------------------------- generate
struct GenerateCmd {
    sim::SimConfig cfg;
    FbgPhysics phys;
    std::string out;
    std::string config_path;

    void run(const CLI::App& app) {
        const json file_cfg = load_config(config_path);
        layer(app, "--episodes", file_cfg, "sim", "episodes", cfg.episodes);
        layer(app, "--duration", file_cfg, "sim", "duration", cfg.duration);
        layer(app, "--contact-rate", file_cfg, "sim", "contact_rate", cfg.contact_rate);
        layer(app, "--sor-prob", file_cfg, "sim", "sor_prob", cfg.sor_prob);
        layer(app, "--bend-prob", file_cfg, "sim", "bend_prob", cfg.bend_prob);
        layer(app, "--noise-sigma", file_cfg, "sim", "noise_sigma", cfg.noise_sigma);
        layer(app, "--seed", file_cfg, "sim", "seed", cfg.seed);

        if (cfg.episodes < 1) throw UsageError("--episodes must be at least 1");
        const auto violations = sim::validate_config(cfg);
        if (!violations.empty()) throw UsageError("invalid config: " + violations.front());

        const auto episodes = sim::gen_dataset(cfg, phys);
        io::write_dataset(episodes, cfg, phys, out);
        std::cout << "wrote " << cfg.episodes << " episodes to " << out << "\n";
    }
};

// ------------------------------------------------------------------- train
struct TrainCmd {
    std::string model = "fcn";
    int layers = 2;
    int hidden = 64;
    int heads = 0;
    double lr = 0.0;  // 0 resolves per architecture via default_lr
    double delta = 1.0;
    int epochs = 200;
    int patience = 20;
    int batch = 256;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 7;
    std::string data;
    std::string out;
    std::string config_path;

    void run(const CLI::App& app) {
        const json file_cfg = load_config(config_path);
        layer(app, "--epochs", file_cfg, "train", "epochs", epochs);
        layer(app, "--patience", file_cfg, "train", "patience", patience);
        layer(app, "--batch", file_cfg, "train", "batch", batch);
        layer(app, "--delta", file_cfg, "train", "huber_delta", delta);
        layer(app, "--lr", file_cfg, "train", "lr", lr);

        models::ModelSpec spec;
        spec.layers = layers;
        spec.hidden = hidden;
        spec.heads = heads;
        try {
            spec.kind = models::kind_from_name(model);
            models::validate_spec(spec);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (lr < 0.0 || (app.count("--lr") > 0 && lr == 0.0))
            throw UsageError("--lr must be positive");
        if (epochs < 1 || patience < 0 || batch < 1) throw UsageError("bad training flags");

        models::TrainConfig cfg;
        cfg.lr = lr > 0.0 ? lr : models::default_lr(spec);
        cfg.huber_delta = delta;
        cfg.batch = batch;
        cfg.max_epochs = epochs;
        cfg.patience = patience;
        cfg.split_seed = split_seed;

        const auto dataset = load_windows(data);
        const auto init = models::build_model(spec, seed);
        const auto result = models::train(init, dataset, cfg);

        fs::create_directories(out);
        models::save_model(result.best, fs::path(out) / "checkpoint.bin");
        {
            std::ofstream os(fs::path(out) / "history.csv");
            os << "epoch,train_loss,val_mae_g\n";
            char buf[96];
            for (const auto& row : result.history) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.train_loss,
                              row.val_mae);
                os << buf;
            }
        }
        write_manifest(out, json{{"command", "train"},
                                 {"model", model},
                                 {"layers", layers},
                                 {"hidden", hidden},
                                 {"heads", heads},
                                 {"lr", cfg.lr},
                                 {"huber_delta", cfg.huber_delta},
                                 {"batch", cfg.batch},
                                 {"max_epochs", cfg.max_epochs},
                                 {"patience", cfg.patience},
                                 {"seed", seed},
                                 {"split_seed", split_seed},
                                 {"train_episodes", result.split.train},
                                 {"val_episodes", result.split.val},
                                 {"test_episodes", result.split.test},
                                 {"best_val_mae_g", result.best_val_mae}});
        std::cout << "val_mae_g=" << result.best_val_mae << "\n";
    }
};

// -------------------------------------------------------------------- eval
struct EvalCmd {
    std::string ckpt;
    std::string data;

    void run() {
        const auto model = models::load_model(ckpt);
        const auto dataset = load_windows(data);
        std::cout << "mae_g=" << models::evaluate_mae(model, dataset) << "\n";
    }
};

// -------------------------------------------------------------- preprocess
struct PreprocessCmd {
    std::string data;
    std::string out;

    void run() {
        const auto episodes = io::read_dataset(data);
        fs::create_directories(out);
        json index = json::array();
        for (const Episode& ep : episodes) {
            const auto ref = prep::estimate_reference(ep.interrogator);
            const auto pair = prep::align(ep.interrogator, ep.scale, ref);
            char name[16];
            std::snprintf(name, sizeof(name), "ep%03d", ep.meta.index);
            const fs::path dir = fs::path(out) / name;
            fs::create_directories(dir);
            io::write_timeseries(pair.shifts, "time,d0,d1,d2", dir / "shifts.csv");
            io::write_timeseries(pair.forces, "time,force", dir / "forces.csv");
            index.push_back(
                {{"dir", name}, {"windows", pair.forces.size()}, {"reference", pair.reference}});
        }
        write_manifest(out, json{{"command", "preprocess"}, {"episodes", index}});
        std::cout << "preprocessed " << episodes.size() << " episodes to " << out << "\n";
    }
};

// ------------------------------------------------------------------- peaks
struct PeaksCmd {
    std::string input;
    int synthetic = 0;
    double bragg = 1540.0;
    double snr = 200.0;
    std::uint64_t seed = 1;
    kde::KdeParams params;
    std::string config_path;

    static void emit(int frame, const SpectrumFrame& spec, const kde::KdeParams& params,
                     std::vector<double>& kde_picks, std::vector<double>& base_picks) {
        try {
            const double k = kde::peak_wavelength(spec, params);
            kde_picks.push_back(k);
            std::cout << frame << ",kde," << k << "\n";
        } catch (const Error&) {
            std::cout << frame << ",kde,\n";
        }
        try {
            const double b = kde::baseline_peak(spec);
            base_picks.push_back(b);
            std::cout << frame << ",baseline," << b << "\n";
        } catch (const Error&) {
            std::cout << frame << ",baseline,\n";
        }
    }

    void run(const CLI::App& app) {
        const json file_cfg = load_config(config_path);
        layer(app, "--kde-k", file_cfg, "kde", "k", params.k);
        layer(app, "--kde-w", file_cfg, "kde", "w", params.w);
        layer(app, "--kde-h", file_cfg, "kde", "h", params.h);
        if ((input.empty() && synthetic == 0) || (!input.empty() && synthetic > 0))
            throw UsageError("need exactly one of --input or --synthetic");

        std::vector<double> kde_picks, base_picks;
        std::cout << "frame,method,peak_nm\n";
        if (synthetic > 0) {
            sim::SpectrumConfig scfg;
            scfg.snr = snr;
            scfg.seed = seed;
            for (int f = 0; f < synthetic; ++f) {
                Rng rng(seed, static_cast<std::uint64_t>(f));
                emit(f, sim::gen_spectrum(bragg, scfg, rng), params, kde_picks, base_picks);
            }
        } else {
            std::ifstream is(input);
            if (!is) throw Error(ErrorCode::MissingFile, "cannot open " + input);
            std::string line;
            if (!std::getline(is, line) || line != "frame,wavelength,intensity")
                throw Error(ErrorCode::ParseError,
                            input + ": expected header 'frame,wavelength,intensity'");
            SpectrumFrame spec;
            int frame = -1;
            std::size_t line_no = 1;
            while (std::getline(is, line)) {
                ++line_no;
                std::stringstream ss(line);
                std::string fcell, wcell, icell;
                if (!std::getline(ss, fcell, ',') || !std::getline(ss, wcell, ',') ||
                    !std::getline(ss, icell))
                    throw Error(ErrorCode::ParseError,
                                input + ": expected 3 fields at line " + std::to_string(line_no));
                const int f = std::stoi(fcell);
                if (f != frame && frame >= 0) {
                    emit(frame, spec, params, kde_picks, base_picks);
                    spec = SpectrumFrame{};
                }
                frame = f;
                spec.wavelength.push_back(std::stod(wcell));
                spec.intensity.push_back(std::stod(icell));
            }
            if (frame >= 0) emit(frame, spec, params, kde_picks, base_picks);
        }

        auto summary = [](const char* method, const std::vector<double>& v) {
            double mean = 0.0, sd = 0.0;
            for (double x : v) mean += x;
            if (!v.empty()) mean /= static_cast<double>(v.size());
            for (double x : v) sd += (x - mean) * (x - mean);
            if (v.size() > 1) sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
            std::cout << "# summary method=" << method << " n=" << v.size() << " mean_nm=" << mean
                      << " std_nm=" << sd << "\n";
        };
        summary("kde", kde_picks);
        summary("baseline", base_picks);
    }
};

// ------------------------------------------------------------------- infer
struct InferCmd {
    std::string ckpt;
    std::string input;
    bool stream = false;
    double lead_s = 0.5;

    void run() {
        const auto model = models::load_model(ckpt);
        if (stream) {
            run_stream(model);
            return;
        }
        if (input.empty()) throw UsageError("--input is required without --stream");
        fs::path path(input);
        if (fs::is_directory(path)) path /= "interrogator.csv";
        std::ifstream is(path);
        if (!is) throw Error(ErrorCode::MissingFile, "missing input " + path.string());
        std::string line;
        std::getline(is, line);
        if (line != "time,s0,s1,s2")
            throw Error(ErrorCode::ParseError, path.string() + ": expected interrogator CSV");
        TimeSeries raw;
        raw.channels = 3;
        while (std::getline(is, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            raw.t.push_back(std::stod(cell));
            for (int c = 0; c < 3; ++c) {
                std::getline(ss, cell, ',');
                raw.values.push_back(std::stod(cell));
            }
        }

        std::cout << "time,pred\n";
        if (raw.size() < 4 || raw.t.back() - raw.t.front() < 0.1) {
            std::cerr << "warning: input shorter than one window; no predictions\n";
            return;
        }
        const auto ref = prep::estimate_reference(raw, lead_s);
        const TimeSeries grid = prep::resample_cubic(raw, 1000.0);
        const TimeSeries shifts = prep::compute_shift(grid, ref);
        const std::size_t n_win = shifts.size() / 100;
        if (n_win == 0) {
            std::cerr << "warning: input shorter than one window; no predictions\n";
            return;
        }
        models::SequenceRunner runner(model);
        for (std::size_t w = 0; w < n_win; ++w) {
            const double pred =
                runner.step(std::span<const double>(shifts.values.data() + w * 300, 300));
            std::cout << shifts.t[(w + 1) * 100 - 1] << "," << pred << "\n";
        }
    }

    // Stream mode: stdin rows; bounded state (a 4-sample resampler
    // look-behind plus the current partial window); each prediction is
    // written before the row after its window is consumed.
    void run_stream(const models::ModelParams& model) {
        models::SequenceRunner runner(model);
        std::string line;
        if (!std::getline(std::cin, line) || line != "time,s0,s1,s2")
            throw Error(ErrorCode::ParseError, "stdin: expected header time,s0,s1,s2");

        std::deque<std::array<double, 4>> look;  // t, s0, s1, s2
        std::vector<std::array<double, 4>> lead_rows;
        std::array<double, 3> reference{};
        bool have_reference = false;
        double t_first = 0.0;
        bool have_first = false;
        long long grid_k = 0;
        std::vector<double> window;
        window.reserve(300);
        std::vector<std::array<double, 4>> pending;  // resampled rows pre-reference
        std::size_t windows_emitted = 0;
        std::cout << "time,pred\n";

        auto feed_row = [&](double t, const std::array<double, 3>& lambda) {
            for (int c = 0; c < 3; ++c)
                window.push_back(lambda[static_cast<std::size_t>(c)] -
                                 reference[static_cast<std::size_t>(c)]);
            if (window.size() == 300) {
                const double pred = runner.step(window);
                std::cout << t << "," << pred << "\n" << std::flush;
                window.clear();
                ++windows_emitted;
            }
        };

        auto lagrange = [&](double tg, int channel) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                double term = look[i][static_cast<std::size_t>(channel) + 1];
                for (std::size_t j = 0; j < 4; ++j) {
                    if (i == j) continue;
                    term *= (tg - look[j][0]) / (look[i][0] - look[j][0]);
                }
                acc += term;
            }
            return acc;
        };

        auto emit_through = [&](double t_limit) {
            while (true) {
                const double tg = static_cast<double>(grid_k) / 1000.0;
                if (tg > t_limit) break;
                if (tg >= look.front()[0]) {
                    const std::array<double, 3> lambda{lagrange(tg, 0), lagrange(tg, 1),
                                                       lagrange(tg, 2)};
                    if (have_reference)
                        feed_row(tg, lambda);
                    else
                        pending.push_back({tg, lambda[0], lambda[1], lambda[2]});
                }
                ++grid_k;
            }
        };

        auto finalize_reference = [&] {
            for (std::size_t c = 0; c < 3; ++c) {
                std::vector<double> col;
                col.reserve(lead_rows.size());
                for (const auto& row : lead_rows) col.push_back(row[c + 1]);
                std::nth_element(col.begin(), col.begin() + static_cast<long>(col.size() / 2),
                                 col.end());
                double med = col[col.size() / 2];
                if (col.size() % 2 == 0) {
                    std::nth_element(col.begin(),
                                     col.begin() + static_cast<long>(col.size() / 2 - 1),
                                     col.end());
                    med = 0.5 * (med + col[col.size() / 2 - 1]);
                }
                reference[c] = med;
            }
            have_reference = true;
            for (const auto& row : pending) feed_row(row[0], {row[1], row[2], row[3]});
            pending.clear();
            lead_rows.clear();
        };

        while (std::getline(std::cin, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::array<double, 4> row{};
            std::string cell;
            for (std::size_t c = 0; c < 4; ++c) {
                if (!std::getline(ss, cell, ','))
                    throw Error(ErrorCode::ParseError, "stdin: malformed row '" + line + "'");
                row[c] = std::stod(cell);
            }
            if (!have_first) {
                t_first = row[0];
                grid_k = std::max<long long>(0, static_cast<long long>(
                                                    std::ceil(row[0] * 1000.0 - 1e-9)));
                have_first = true;
            }
            if (!have_reference) {
                lead_rows.push_back(row);
                if (row[0] >= t_first + lead_s) finalize_reference();
            }
            look.push_back(row);
            if (look.size() > 4) look.pop_front();
            if (look.size() == 4) emit_through(look[2][0]);
        }
        if (look.size() == 4) emit_through(look[3][0]);
        if (windows_emitted == 0)
            std::cerr << "warning: input shorter than one window; no predictions\n";
    }
};

// ------------------------------------------------------------------- bench
struct BenchSweepCmd {
    std::string data;
    std::string out;
    std::string kinds = "fcn,rnn,transformer";
    std::string layers = "1,2,4,8";
    std::string hiddens = "64,128,256,512,1024";
    int phase1_hidden = 256;
    int seeds = 3;
    int epochs = 60;
    int patience = 10;

    void run() {
        bench::SweepGrid grid;
        grid.kinds.clear();
        std::stringstream ss(kinds);
        std::string item;
        try {
            while (std::getline(ss, item, ','))
                if (!item.empty()) grid.kinds.push_back(models::kind_from_name(item));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        grid.layer_options = parse_int_list(layers);
        grid.hidden_options = parse_int_list(hiddens);
        grid.phase1_hidden = phase1_hidden;
        grid.seeds = seeds;

        models::TrainConfig cfg;
        cfg.max_epochs = epochs;
        cfg.patience = patience;
        const auto dataset = load_windows(data);
        const auto result = bench::run_sweep(grid, dataset, cfg);
        std::cout << bench::sweep_text(result);
        if (!out.empty()) {
            fs::create_directories(out);
            std::ofstream os(fs::path(out) / "sweep.csv");
            os << bench::sweep_csv(result);
            json best = json::object();
            for (const auto& [kind, l] : result.best_layers) best[models::kind_name(kind)] = l;
            write_manifest(out, json{{"command", "bench sweep"},
                                     {"kinds", kinds},
                                     {"layers", layers},
                                     {"hiddens", hiddens},
                                     {"phase1_hidden", phase1_hidden},
                                     {"seeds", seeds},
                                     {"epochs", epochs},
                                     {"patience", patience},
                                     {"best_layers", best}});
        }
    }
};

struct BenchLatencyCmd {
    std::string ckpt;
    std::string model = "fcn";
    int layers = 2;
    int hidden = 64;
    int windows = 50;
    int reps = 20;
    std::uint64_t seed = 1;
    std::string out;

    void run() {
        models::ModelSpec spec{models::ModelKind::Fcn, layers, hidden, 0, 300};
        if (ckpt.empty()) {
            try {
                spec.kind = models::kind_from_name(model);
                models::validate_spec(spec);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        const models::ModelParams mp =
            ckpt.empty() ? models::build_model(spec, seed) : models::load_model(ckpt);
        const auto report = bench::measure_latency(mp, windows, reps);
        std::cout << "mean_ms=" << report.mean_ms << " p99_ms=" << report.p99_ms
                  << " windows=" << report.n_windows << " reps=" << report.repetitions << "\n"
                  << "host: " << report.host << "\n";
        if (!out.empty()) {
            write_manifest(out,
                           json{{"command", "bench latency"},
                                {"model", models::kind_name(mp.spec.kind)},
                                {"layers", mp.spec.layers},
                                {"hidden", mp.spec.hidden},
                                {"windows", windows},
                                {"reps", reps},
                                {"host", report.host},
                                {"timing", {{"mean_ms", report.mean_ms}, {"p99_ms", report.p99_ms}}}});
        }
    }
};

struct BenchSorCmd {
    int episodes = 12;
    double duration = 30.0;
    double sor_prob = 0.7;
    int seeds = 3;
    int epochs = 40;
    int patience = 8;
    std::uint64_t seed = 1;
    std::string out;

    void run() {
        sim::SimConfig free_cfg;
        free_cfg.episodes = episodes;
        free_cfg.duration = duration;
        free_cfg.seed = seed;
        free_cfg.sor_prob = 0.0;
        sim::SimConfig heavy_cfg = free_cfg;
        heavy_cfg.sor_prob = sor_prob;

        prep::WindowedDataset sor_free, sor_heavy;
        for (const auto& g : sim::gen_dataset(free_cfg, {}))
            sor_free.push_back(prep::process_episode(g.episode));
        for (const auto& g : sim::gen_dataset(heavy_cfg, {}))
            sor_heavy.push_back(prep::process_episode(g.episode));

        models::TrainConfig cfg;
        cfg.max_epochs = epochs;
        cfg.patience = patience;
        const std::vector<models::ModelSpec> specs{
            {models::ModelKind::Fcn, 2, 64, 0, 300},
            {models::ModelKind::Rnn, 4, 64, 0, 300},
        };
        const auto result = bench::sor_ablation(sor_free, sor_heavy, specs, cfg, seeds, seed);
        std::cout << bench::ablation_text(result);
        if (!out.empty()) {
            json rows = json::array();
            for (const auto& row : result.rows)
                rows.push_back({{"kind", models::kind_name(row.spec.kind)},
                                {"layers", row.spec.layers},
                                {"hidden", row.spec.hidden},
                                {"mae_sor_free", row.mae_sor_free},
                                {"mae_sor_heavy", row.mae_sor_heavy}});
            write_manifest(out, json{{"command", "bench sor"},
                                     {"episodes", episodes},
                                     {"duration", duration},
                                     {"sor_prob", sor_prob},
                                     {"seeds", seeds},
                                     {"seed", seed},
                                     {"epochs", epochs},
                                     {"rows", rows},
                                     {"gru_over_fcn_heavy", result.gru_over_fcn_heavy},
                                     {"gru_over_fcn_free", result.gru_over_fcn_free}});
        }
    }
};

struct BenchPeaksCmd {
    int frames = 1000;
    double snr = 15.0;
    std::uint64_t seed = 1;
    kde::KdeParams params{25, 1, 1.5};
    std::string out;

    void run() {
        sim::SpectrumConfig cfg;
        cfg.snr = snr;
        cfg.seed = seed;
        const FbgPhysics phys;
        const auto result = bench::peak_comparison(frames, cfg, phys, params);
        std::cout << bench::peak_comparison_text(result);
        if (!out.empty()) {
            json rows = json::array();
            for (int s = 0; s < 3; ++s) {
                const auto& st = result.per_sensor[static_cast<std::size_t>(s)];
                rows.push_back(
                    {{"sensor", s + 1},
                     {"bragg_nm", result.bragg[static_cast<std::size_t>(s)]},
                     {"kde_mean_nm", st.mean_a},
                     {"kde_std_nm", st.std_a},
                     {"baseline_mean_nm", st.mean_b},
                     {"baseline_std_nm", st.std_b},
                     {"kde_failures", result.kde_failures[static_cast<std::size_t>(s)]}});
            }
            write_manifest(out, json{{"command", "bench peaks"},
                                     {"frames", frames},
                                     {"snr", snr},
                                     {"seed", seed},
                                     {"rows", rows}});
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfs — FBG contact-force sensing pipeline"};
    app.require_subcommand(1);

    GenerateCmd generate;
    auto* gen_cmd = app.add_subcommand("generate", "Generate synthetic episode datasets");
    gen_cmd->add_option("--episodes", generate.cfg.episodes, "Episode count");
    gen_cmd->add_option("--duration", generate.cfg.duration, "Episode length, seconds");
    gen_cmd->add_option("--contact-rate", generate.cfg.contact_rate, "Pokes per minute");
    gen_cmd->add_option("--sor-prob", generate.cfg.sor_prob, "Per-poke SoR probability");
    gen_cmd->add_option("--bend-prob", generate.cfg.bend_prob, "Per-poke bent-tip probability");
    gen_cmd->add_option("--noise-sigma", generate.cfg.noise_sigma, "Wavelength noise, nm");
    gen_cmd->add_option("--seed", generate.cfg.seed, "Master seed");
    gen_cmd->add_option("--out", generate.out, "Output dataset directory")->required();
    gen_cmd->add_option("--config", generate.config_path, "JSON config file");

    TrainCmd train;
    auto* train_cmd = app.add_subcommand("train", "Train a force estimator");
    train_cmd->add_option("--model", train.model, "fcn|rnn|transformer")->required();
    train_cmd->add_option("--layers", train.layers, "Layer count");
    train_cmd->add_option("--hidden", train.hidden, "Hidden dimension");
    train_cmd->add_option("--heads", train.heads, "Attention heads (0 = auto)");
    train_cmd->add_option("--lr", train.lr, "Learning rate (0 = architecture default)");
    train_cmd->add_option("--delta", train.delta, "Huber delta, grams");
    train_cmd->add_option("--epochs", train.epochs, "Max epochs");
    train_cmd->add_option("--patience", train.patience, "Early-stop patience");
    train_cmd->add_option("--batch", train.batch, "Batch size (FCN windows)");
    train_cmd->add_option("--seed", train.seed, "Init seed");
    train_cmd->add_option("--split-seed", train.split_seed, "Episode split seed");
    train_cmd->add_option("--data", train.data, "Dataset directory")->required();
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    train_cmd->add_option("--config", train.config_path, "JSON config file");

    EvalCmd eval;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--model", eval.ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();

    PreprocessCmd preprocess;
    auto* prep_cmd = app.add_subcommand("preprocess", "Resample and align a dataset");
    prep_cmd->add_option("--data", preprocess.data, "Dataset directory")->required();
    prep_cmd->add_option("--out", preprocess.out, "Output directory")->required();

    PeaksCmd peaks;
    auto* peaks_cmd = app.add_subcommand("peaks", "Peak detection on spectrum frames");
    peaks_cmd->add_option("--input", peaks.input, "CSV of frame,wavelength,intensity rows");
    peaks_cmd->add_option("--synthetic", peaks.synthetic, "Generate N synthetic frames instead");
    peaks_cmd->add_option("--bragg", peaks.bragg, "Synthetic Bragg wavelength, nm");
    peaks_cmd->add_option("--snr", peaks.snr, "Synthetic SNR");
    peaks_cmd->add_option("--seed", peaks.seed, "Synthetic seed");
    peaks_cmd->add_option("--kde-k", peaks.params.k, "Context half-width");
    peaks_cmd->add_option("--kde-w", peaks.params.w, "Bandwidth window offset");
    peaks_cmd->add_option("--kde-h", peaks.params.h, "Chebyshev multiplier");
    peaks_cmd->add_option("--config", peaks.config_path, "JSON config file");

    InferCmd infer;
    auto* infer_cmd = app.add_subcommand("infer", "Predict forces from interrogator data");
    infer_cmd->add_option("--model", infer.ckpt, "Checkpoint file")->required();
    infer_cmd->add_option("--input", infer.input, "Episode dir or interrogator CSV");
    infer_cmd->add_flag("--stream", infer.stream, "Read rows from stdin, bounded latency");
    infer_cmd->add_option("--lead", infer.lead_s, "Reference lead-in, seconds");

    auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
    bench_cmd->require_subcommand(1);

    BenchSweepCmd sweep;
    auto* sweep_cmd = bench_cmd->add_subcommand("sweep", "Two-phase layer/hidden sweep");
    sweep_cmd->add_option("--data", sweep.data, "Dataset directory")->required();
    sweep_cmd->add_option("--out", sweep.out, "Output directory");
    sweep_cmd->add_option("--kinds", sweep.kinds, "Comma-separated model kinds");
    sweep_cmd->add_option("--layers", sweep.layers, "Comma-separated layer counts");
    sweep_cmd->add_option("--hiddens", sweep.hiddens, "Comma-separated hidden dims");
    sweep_cmd->add_option("--phase1-hidden", sweep.phase1_hidden, "Phase-1 hidden dim");
    sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds per cell");
    sweep_cmd->add_option("--epochs", sweep.epochs, "Max epochs per cell");
    sweep_cmd->add_option("--patience", sweep.patience, "Early-stop patience");

    BenchLatencyCmd latency;
    auto* lat_cmd = bench_cmd->add_subcommand("latency", "Single-window inference latency");
    lat_cmd->add_option("--ckpt", latency.ckpt, "Checkpoint (default: random init)");
    lat_cmd->add_option("--model", latency.model, "fcn|rnn|transformer");
    lat_cmd->add_option("--layers", latency.layers, "Layer count");
    lat_cmd->add_option("--hidden", latency.hidden, "Hidden dimension");
    lat_cmd->add_option("--windows", latency.windows, "Windows per repetition");
    lat_cmd->add_option("--reps", latency.reps, "Repetitions");
    lat_cmd->add_option("--out", latency.out, "Output directory");

    BenchSorCmd sor;
    auto* sor_cmd = bench_cmd->add_subcommand("sor", "SoR ablation (paired datasets)");
    sor_cmd->add_option("--episodes", sor.episodes, "Episodes per dataset");
    sor_cmd->add_option("--duration", sor.duration, "Episode length, seconds");
    sor_cmd->add_option("--sor-prob", sor.sor_prob, "Heavy dataset per-poke SoR probability");
    sor_cmd->add_option("--seeds", sor.seeds, "Seeds per cell");
    sor_cmd->add_option("--seed", sor.seed, "Master seed");
    sor_cmd->add_option("--epochs", sor.epochs, "Max epochs per run");
    sor_cmd->add_option("--out", sor.out, "Output directory");

    BenchPeaksCmd bpeaks;
    auto* bpeaks_cmd = bench_cmd->add_subcommand("peaks", "Table-style peak detector comparison");
    bpeaks_cmd->add_option("--frames", bpeaks.frames, "Frames per sensor");
    bpeaks_cmd->add_option("--snr", bpeaks.snr, "Spectrum SNR");
    bpeaks_cmd->add_option("--seed", bpeaks.seed, "Seed");
    bpeaks_cmd->add_option("--kde-k", bpeaks.params.k, "Context half-width");
    bpeaks_cmd->add_option("--out", bpeaks.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen_cmd->parsed()) generate.run(*gen_cmd);
        if (train_cmd->parsed()) train.run(*train_cmd);
        if (eval_cmd->parsed()) eval.run();
        if (prep_cmd->parsed()) preprocess.run();
        if (peaks_cmd->parsed()) peaks.run(*peaks_cmd);
        if (infer_cmd->parsed()) infer.run();
        if (sweep_cmd->parsed()) sweep.run();
        if (lat_cmd->parsed()) latency.run();
        if (sor_cmd->parsed()) sor.run();
        if (bpeaks_cmd->parsed()) bpeaks.run();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

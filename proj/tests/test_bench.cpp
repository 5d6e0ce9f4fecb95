#include <cmath>

#include "cfs/bench.hpp"
#include "doctest.h"

using namespace cfs;
using models::ModelKind;

namespace {

prep::WindowedDataset tiny_dataset(std::uint64_t seed) {
    sim::SimConfig cfg;
    cfg.episodes = 4;
    cfg.duration = 6.0;
    cfg.seed = seed;
    prep::WindowedDataset out;
    for (const auto& gen : sim::gen_dataset(cfg, {}))
        out.push_back(prep::process_episode(gen.episode));
    return out;
}

models::TrainConfig quick_train() {
    models::TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.patience = 3;
    return cfg;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("sweep runs both phases and pins phase-2 layers to the phase-1 argmin") {
    bench::SweepGrid grid;
    grid.kinds = {ModelKind::Fcn};
    grid.layer_options = {1, 2};
    grid.hidden_options = {8, 16};
    grid.phase1_hidden = 8;
    grid.seeds = 1;
    const auto dataset = tiny_dataset(61);
    const auto result = bench::run_sweep(grid, dataset, quick_train());

    REQUIRE(result.rows.size() == 4);  // 2 phase-1 + 2 phase-2 rows
    CHECK(result.rows[0].phase == 1);
    CHECK(result.rows[1].phase == 1);
    CHECK(result.rows[2].phase == 2);
    CHECK(result.rows[3].phase == 2);
    REQUIRE(result.best_layers.count(ModelKind::Fcn) == 1);
    const int best = result.best_layers.at(ModelKind::Fcn);
    CHECK(result.rows[2].layers == best);
    CHECK(result.rows[3].layers == best);
    for (const auto& row : result.rows) CHECK(!row.failed);

    const std::string csv = bench::sweep_csv(result);
    CHECK(csv.find("kind,phase,layers,hidden,heads,seed,status,test_mae_g,train_s") == 0);
}

TEST_CASE("an empty grid yields an empty result") {
    bench::SweepGrid grid;
    grid.kinds = {};
    const auto result = bench::run_sweep(grid, tiny_dataset(62), quick_train());
    CHECK(result.rows.empty());
    CHECK(result.best_layers.empty());
}

TEST_CASE("a single-cell grid yields one row per seed") {
    bench::SweepGrid grid;
    grid.kinds = {ModelKind::Fcn};
    grid.layer_options = {1};
    grid.hidden_options = {};
    grid.phase1_hidden = 8;
    grid.seeds = 2;
    const auto result = bench::run_sweep(grid, tiny_dataset(63), quick_train());
    CHECK(result.rows.size() == 2);
}

TEST_CASE("an identical dataset pair ablates to exactly equal columns") {
    const auto ds = tiny_dataset(64);
    const std::vector<models::ModelSpec> specs{{ModelKind::Fcn, 1, 8, 0, 300}};
    const auto result = bench::sor_ablation(ds, ds, specs, quick_train(), 1);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].mae_sor_free == result.rows[0].mae_sor_heavy);
}

TEST_CASE("latency measurement needs a non-empty run") {
    const auto mp = models::build_model({ModelKind::Fcn, 2, 64, 0, 300}, 1);
    try {
        bench::measure_latency(mp, 0, 10);
        FAIL("expected EmptyRun");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyRun);
    }
}

TEST_CASE("single-window CPU inference stays far under the 0.1 s budget") {
    for (const auto spec : {models::ModelSpec{ModelKind::Fcn, 2, 64, 0, 300},
                            models::ModelSpec{ModelKind::Rnn, 4, 64, 0, 300}}) {
        const auto mp = models::build_model(spec, 1);
        const auto report = bench::measure_latency(mp, 20, 10);
        CHECK(report.mean_ms < 100.0);
        CHECK(report.p99_ms >= report.mean_ms * 0.01);
        CHECK(!report.host.empty());
    }
}

TEST_CASE("peak comparison reports three sensors against their bragg centers") {
    sim::SpectrumConfig cfg;
    cfg.snr = 1000.0;
    cfg.grid_min = 1538.0;
    cfg.grid_max = 1542.0;
    const FbgPhysics phys;
    const auto result = bench::peak_comparison(120, cfg, phys, {25, 1, 1.0});
    CHECK(result.frames == 120);
    for (int s = 0; s < 3; ++s) {
        const auto& st = result.per_sensor[static_cast<std::size_t>(s)];
        CHECK(std::abs(st.mean_b - phys.lambda_b[static_cast<std::size_t>(s)]) < 0.02);
        CHECK(st.std_b < 0.05);
        CHECK(st.std_a >= 0.0);
    }
    const std::string text = bench::peak_comparison_text(result);
    CHECK(text.find("sensor") != std::string::npos);
    CHECK_THROWS_AS(bench::peak_comparison(10, cfg, phys, {25, 1, 1.0}), Error);
}

}  // TEST_SUITE

#include <cmath>
#include <vector>

#include "cfs/preprocess.hpp"
#include "cfs/rng.hpp"
#include "cfs/simulate.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

struct Cubic {
    double a, b, c, d;
    double operator()(double t) const { return a + t * (b + t * (c + t * d)); }
};

TimeSeries sample_irregular(const Cubic& poly, std::size_t n, Rng& rng) {
    std::vector<double> ts(n);
    for (double& t : ts) t = rng.uniform(0.0, 3.0);
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 1; i < n; ++i)
        if (ts[i] <= ts[i - 1]) ts[i] = std::nextafter(ts[i - 1], 10.0);
    TimeSeries s;
    s.channels = 1;
    s.t = ts;
    s.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.values[i] = poly(ts[i]);
    return s;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("not-a-knot resampling reproduces cubic polynomials") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Cubic poly{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                         rng.uniform(-2.0, 2.0)};
        const std::size_t n = 37 + rng.uniform_int(175);
        const TimeSeries s = sample_irregular(poly, n, rng);
        const TimeSeries r = prep::resample_cubic(s, 100.0);
        REQUIRE(r.size() > 10);
        double worst = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            worst = std::max(worst, std::abs(r.values[i] - poly(r.t[i])));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("constant series resamples to the same constant") {
    TimeSeries s;
    s.channels = 1;
    for (int i = 0; i < 12; ++i) {
        s.t.push_back(0.13 * i + 0.05);
        s.values.push_back(4.25);
    }
    const TimeSeries r = prep::resample_cubic(s, 50.0);
    for (double v : r.values) CHECK(v == doctest::Approx(4.25).epsilon(1e-12));
    CHECK(r.t.front() >= s.t.front() - 1e-12);
    CHECK(r.t.back() <= s.t.back() + 1e-12);
}

TEST_CASE("resampling preconditions") {
    TimeSeries s;
    s.channels = 1;
    s.t = {0.0, 0.1, 0.2};
    s.values = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(prep::resample_cubic(s, 10.0), Error);

    s.t = {0.0, 0.2, 0.1, 0.3};
    s.values = {1.0, 2.0, 3.0, 4.0};
    try {
        prep::resample_cubic(s, 10.0);
        FAIL("expected NonMonotonic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonMonotonic);
    }
}

TEST_CASE("spline and linear interpolation agree at O(h^2) on smooth signals") {
    auto max_diff = [](double hz_in) {
        TimeSeries s;
        s.channels = 1;
        const double dt = 1.0 / hz_in;
        for (double t = 0.0; t <= 2.0 + 1e-12; t += dt) {
            s.t.push_back(t);
            s.values.push_back(std::sin(2.0 * 3.14159265358979 * t));
        }
        const TimeSeries r = prep::resample_cubic(s, 500.0);
        double worst = 0.0;
        std::size_t seg = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            while (seg + 2 < s.size() && s.t[seg + 1] < r.t[i]) ++seg;
            const double frac = (r.t[i] - s.t[seg]) / (s.t[seg + 1] - s.t[seg]);
            const double lin = s.values[seg] + frac * (s.values[seg + 1] - s.values[seg]);
            worst = std::max(worst, std::abs(r.values[i] - lin));
        }
        return worst;
    };
    const double coarse = max_diff(25.0);
    const double fine = max_diff(50.0);
    // Halving the spacing should shrink the disagreement ~4x.
    CHECK(coarse / fine > 2.5);
    CHECK(coarse / fine < 7.0);
}

TEST_CASE("compute_shift subtracts per-channel references") {
    TimeSeries s;
    s.channels = 2;
    s.t = {0.0, 1.0};
    s.values = {1540.10, 1541.00, 1540.00, 1541.50};
    const TimeSeries d = prep::compute_shift(s, std::vector<double>{1540.00, 1541.00});
    CHECK(d.value(0, 0) == doctest::Approx(0.10));
    CHECK(d.value(0, 1) == doctest::Approx(0.0));
    CHECK(d.value(1, 0) == doctest::Approx(0.0));
    CHECK(d.value(1, 1) == doctest::Approx(0.50));
    CHECK_THROWS_AS(prep::compute_shift(s, std::vector<double>{1.0}), Error);
}

TEST_CASE("shift against an identical reference is exactly zero") {
    TimeSeries s;
    s.channels = 3;
    for (int i = 0; i < 5; ++i) {
        s.t.push_back(0.1 * i);
        for (int c = 0; c < 3; ++c) s.values.push_back(1539.5 + c);
    }
    const TimeSeries d = prep::compute_shift(s, std::vector<double>{1539.5, 1540.5, 1541.5});
    for (double v : d.values) CHECK(v == 0.0);
}

TEST_CASE("align produces the documented rate and length relation") {
    sim::SimConfig cfg;
    cfg.seed = 21;
    cfg.sor_prob = 0.0;
    const auto gen = sim::gen_episode(cfg, {}, 0);
    const auto ref = prep::estimate_reference(gen.episode.interrogator);
    const auto pair = prep::align(gen.episode.interrogator, gen.episode.scale, ref);

    CHECK(pair.forces.size() >= 599);
    CHECK(pair.forces.size() <= 601);
    CHECK(pair.shifts.size() == 100 * pair.forces.size());
    CHECK(pair.shifts.t.front() == 0.0);
    CHECK(pair.forces.t.front() == doctest::Approx(0.1));
}

TEST_CASE("align rejects disjoint spans") {
    TimeSeries a, b;
    a.channels = 3;
    b.channels = 1;
    for (int i = 0; i < 10; ++i) {
        a.t.push_back(0.01 * i);
        for (int c = 0; c < 3; ++c) a.values.push_back(1540.0);
        b.t.push_back(5.0 + 0.1 * i);
        b.values.push_back(0.0);
    }
    try {
        prep::align(a, b, std::vector<double>{1540.0, 1540.0, 1540.0});
        FAIL("expected NoOverlap");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoOverlap);
    }
}

TEST_CASE("resampled forces track the dense ground truth") {
    sim::SimConfig cfg;
    cfg.seed = 33;
    cfg.sor_prob = 0.0;
    const auto gen = sim::gen_episode(cfg, {}, 0);
    const auto ref = prep::estimate_reference(gen.episode.interrogator);
    const auto pair = prep::align(gen.episode.interrogator, gen.episode.scale, ref);

    // The aligned clock is rebased to the overlap start.
    const double origin = std::max(gen.episode.interrogator.t.front(),
                                   gen.episode.scale.t.front());
    double acc = 0.0;
    for (std::size_t i = 0; i < pair.forces.size(); ++i) {
        const double t = pair.forces.t[i] + origin;
        const std::size_t k = static_cast<std::size_t>(std::llround(t * 1000.0));
        const double truth =
            k < gen.force_truth.size() ? gen.force_truth.values[k] : 0.0;
        acc += std::abs(pair.forces.values[i] - truth);
    }
    CHECK(acc / static_cast<double>(pair.forces.size()) < 0.05);
}

TEST_CASE("reference estimation from the 0 g lead-in nulls the shifts") {
    sim::SimConfig cfg;
    cfg.seed = 5;
    cfg.sor_prob = 0.0;
    const auto gen = sim::gen_episode(cfg, {}, 1);
    const FbgPhysics phys;
    const auto ref = prep::estimate_reference(gen.episode.interrogator);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(ref[static_cast<std::size_t>(c)] -
                       phys.lambda_b[static_cast<std::size_t>(c)]) < 3.0 * cfg.noise_sigma);
}

TEST_CASE("windowing is a lossless ordered partition") {
    sim::SimConfig cfg;
    cfg.seed = 8;
    const auto gen = sim::gen_episode(cfg, {}, 0);
    const auto ref = prep::estimate_reference(gen.episode.interrogator);
    const auto pair = prep::align(gen.episode.interrogator, gen.episode.scale, ref);
    const auto examples = prep::window(pair);

    REQUIRE(examples.size() == pair.forces.size());
    for (std::size_t i = 0; i < 300; ++i)
        CHECK(examples[0].x[i] == pair.shifts.values[i]);

    std::vector<double> rebuilt;
    for (const auto& ex : examples) rebuilt.insert(rebuilt.end(), ex.x.begin(), ex.x.end());
    CHECK(rebuilt == pair.shifts.values);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        CHECK(examples[i].t == static_cast<int>(i));
        CHECK(examples[i].y == pair.forces.value(i, 0));
    }
}

}  // TEST_SUITE

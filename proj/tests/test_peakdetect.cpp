#include <algorithm>
#include <cmath>
#include <vector>

#include "cfs/peakdetect.hpp"
#include "cfs/rng.hpp"
#include "cfs/simulate.hpp"
#include "doctest.h"

using namespace cfs;

namespace {

// Scalar reference for the entropy score: a direct, independent
// transliteration of the score's definition. Shares the conventions
// (sorted multiset, wrap-around bandwidth partner, 1e-12 floor, zero
// entropy for constant windows) but none of the code.
double oracle_entropy(std::vector<double> a, int w) {
    std::sort(a.begin(), a.end());
    const std::size_t m = a.size();
    if (m == 0 || a.front() == a.back()) return 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double bw = std::abs(a[i] - a[(i + static_cast<std::size_t>(w)) % m]);
        if (bw == 0.0) bw = 1e-12;
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double u = (a[i] - a[j]) / bw;
            sum += std::exp(-0.5 * u * u) / std::sqrt(2.0 * 3.14159265358979323846);
        }
        const double p = sum / (static_cast<double>(m) * bw);
        h -= p * std::log(p);
    }
    return h;
}

std::vector<double> oracle_scores(const std::vector<double>& x, int k, int w) {
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> without, with;
        const std::size_t lo = i >= static_cast<std::size_t>(k) ? i - static_cast<std::size_t>(k) : 0;
        const std::size_t hi = std::min(x.size() - 1, i + static_cast<std::size_t>(k));
        for (std::size_t j = lo; j <= hi; ++j) {
            with.push_back(x[j]);
            if (j != i) without.push_back(x[j]);
        }
        s[i] = oracle_entropy(without, w) - oracle_entropy(with, w);
    }
    return s;
}

std::vector<std::size_t> oracle_peaks(const std::vector<double>& x, const kde::KdeParams& p) {
    const auto s = oracle_scores(x, p.k, p.w);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size()));

    std::vector<std::size_t> out;
    std::size_t best = 0;
    bool in_run = false;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        const bool q = i < s.size() && s[i] > mean && std::abs(s[i] - mean) > p.h * sd;
        if (q) {
            if (!in_run || s[i] > s[best]) best = i;
            in_run = true;
        } else if (in_run) {
            out.push_back(best);
            in_run = false;
        }
    }
    return out;
}

SpectrumFrame gaussian_frame(double bragg, double step = 0.005) {
    SpectrumFrame f;
    for (double wl = 1535.0; wl <= 1545.0 + 1e-12; wl += step) {
        f.wavelength.push_back(wl);
        const double d = wl - bragg;
        f.intensity.push_back(std::exp(-4.0 * std::log(2.0) * d * d / 0.25));
    }
    return f;
}

}  // namespace

TEST_SUITE("peakdetect") {

TEST_CASE("constant signal scores zero everywhere") {
    std::vector<double> x(32, 3.5);
    const auto scores = kde::kde_score(x, {5, 1, 1.5});
    CHECK(scores.degenerate);
    for (double s : scores.score) CHECK(s == 0.0);
    CHECK(kde::detect_peaks(x, {5, 1, 1.5}).indices.empty());
}

TEST_CASE("single spike matches the scalar oracle and scores strictly maximal") {
    std::vector<double> x(9, 0.0);
    x[4] = 1.0;
    const kde::KdeParams params{3, 1, 1.5};
    const auto scores = kde::kde_score(x, params);
    const auto expected = oracle_scores(x, params.k, params.w);
    REQUIRE(scores.score.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(scores.score[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (i != 4) CHECK(std::abs(scores.score[4]) > std::abs(scores.score[i]));

    const auto peaks = kde::detect_peaks(x, params);
    CHECK(peaks.indices == std::vector<std::size_t>{4});
    CHECK(oracle_peaks(x, params) == peaks.indices);
}

TEST_CASE("two separated spikes are both found, ascending") {
    std::vector<double> x(40, 0.0);
    x[9] = 2.0;
    x[29] = 1.5;
    const kde::KdeParams params{3, 1, 1.0};
    const auto peaks = kde::detect_peaks(x, params);
    CHECK(peaks.indices == std::vector<std::size_t>{9, 29});
    CHECK(oracle_peaks(x, params) == peaks.indices);
}

TEST_CASE("window entropy is permutation invariant") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w(11);
        for (double& v : w) v = rng.uniform(-2.0, 2.0);
        const double before = kde::window_entropy(w, 1);
        for (std::size_t i = w.size(); i > 1; --i)
            std::swap(w[i - 1], w[rng.uniform_int(i)]);
        CHECK(kde::window_entropy(w, 1) == before);
    }
}

TEST_CASE("scores are exactly translation invariant") {
    // Dyadic values keep the shifted additions exact in f64.
    Rng rng(7);
    std::vector<double> x(25);
    for (double& v : x) v = static_cast<double>(rng.uniform_int(4097)) / 1024.0;
    x[12] += 8.0;
    const auto base = kde::kde_score(x, {4, 1, 1.5});
    std::vector<double> shifted = x;
    for (double& v : shifted) v += 5.0;
    const auto moved = kde::kde_score(shifted, {4, 1, 1.5});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(base.score[i] == moved.score[i]);
}

TEST_CASE("detection is scale covariant") {
    Rng rng(11);
    for (double alpha : {0.5, 2.0, 10.0}) {
        std::vector<double> x(60);
        for (double& v : x) v = rng.normal(0.0, 0.05);
        x[14] += 3.0;
        x[41] += 2.0;
        const kde::KdeParams params{4, 1, 1.5};
        const auto base = kde::detect_peaks(x, params);
        std::vector<double> scaled = x;
        for (double& v : scaled) v *= alpha;
        const auto other = kde::detect_peaks(scaled, params);
        CHECK(base.indices == other.indices);
        CHECK(!base.indices.empty());
    }
}

TEST_CASE("one peak per contiguous qualifying run") {
    // A two-sample plateau spike: adjacent qualifying indices must collapse
    // to the single best-scoring one.
    std::vector<double> x(30, 0.0);
    x[14] = 1.0;
    x[15] = 0.97;
    const auto peaks = kde::detect_peaks(x, {4, 1, 1.0});
    for (std::size_t i = 1; i < peaks.indices.size(); ++i)
        CHECK(peaks.indices[i] > peaks.indices[i - 1] + 1);
    CHECK(oracle_peaks(x, {4, 1, 1.0}) == peaks.indices);
}

TEST_CASE("kde_score rejects short or invalid input") {
    std::vector<double> x(10, 0.0);
    CHECK_THROWS_AS(kde::kde_score(std::vector<double>(7, 0.0), {3, 1, 1.5}), Error);
    CHECK_THROWS_AS(kde::kde_score(x, {0, 1, 1.5}), Error);
}

TEST_CASE("baseline parabola recovers an off-bin Gaussian center") {
    const auto frame = gaussian_frame(1540.0025);
    const double peak = kde::baseline_peak(frame);
    CHECK(std::abs(peak - 1540.0025) < 5e-4);
}

TEST_CASE("baseline clamps at grid edges and rejects flat spectra") {
    SpectrumFrame rising;
    for (int i = 0; i < 20; ++i) {
        rising.wavelength.push_back(1540.0 + 0.005 * i);
        rising.intensity.push_back(static_cast<double>(i));
    }
    CHECK(kde::baseline_peak(rising) == rising.wavelength.back());

    SpectrumFrame flat;
    flat.wavelength = rising.wavelength;
    flat.intensity.assign(20, 1.0);
    CHECK_THROWS_AS(kde::baseline_peak(flat), Error);
}

TEST_CASE("peak_wavelength finds a noiseless Gaussian to within one bin") {
    const auto frame = gaussian_frame(1540.0);
    const double picked = kde::peak_wavelength(frame, {25, 1, 1.5});
    CHECK(std::abs(picked - 1540.0) <= 0.005 + 1e-12);
}

TEST_CASE("peak_wavelength holds 0.02 nm accuracy at snr 20") {
    sim::SpectrumConfig cfg;
    cfg.snr = 20.0;
    int within = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Rng rng(321, static_cast<std::uint64_t>(t));
        const SpectrumFrame f = sim::gen_spectrum(1540.0, cfg, rng);
        if (std::abs(kde::peak_wavelength(f, {25, 1, 1.5}) - 1540.0) <= 0.02) ++within;
    }
    CHECK(within >= static_cast<int>(0.99 * trials));
}

TEST_CASE("peak_wavelength reports NoPeak on a flat spectrum") {
    SpectrumFrame flat;
    for (int i = 0; i < 200; ++i) {
        flat.wavelength.push_back(1540.0 + 0.005 * i);
        flat.intensity.push_back(1.0);
    }
    try {
        kde::peak_wavelength(flat, {5, 1, 1.5});
        FAIL("expected NoPeak");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoPeak);
    }
}

TEST_CASE("compare_stats hand cases and errors") {
    const std::vector<double> v{1.0, 2.0, 3.0};
    const auto stats = kde::compare_stats(v, v);
    CHECK(stats.mean_a == doctest::Approx(2.0));
    CHECK(stats.std_a == doctest::Approx(1.0));
    CHECK(stats.mean_b == stats.mean_a);
    CHECK(stats.std_b == stats.std_a);
    CHECK_THROWS_AS(kde::compare_stats({}, v), Error);
}

}  // TEST_SUITE

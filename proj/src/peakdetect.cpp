#include "cfs/peakdetect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfs::kde {

namespace {

constexpr double kMinBandwidth = 1e-12;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gauss(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

void check_signal(std::span<const double> signal, const KdeParams& params) {
    if (params.k < 1 || params.w < 1 || params.h <= 0.0)
        throw Error(ErrorCode::InvalidSpec, "KdeParams: need k >= 1, w >= 1, h > 0");
    if (signal.size() <= static_cast<std::size_t>(2 * params.k + 1))
        throw Error(ErrorCode::TooFewSamples, "kde_score: signal length must exceed 2k+1");
    for (double v : signal)
        if (!std::isfinite(v))
            throw Error(ErrorCode::InvalidSpec, "kde_score: non-finite sample");
}

// Entropy of a sorted window. Scratch avoids re-allocating per call.
double entropy_sorted(std::span<const double> a, int w, bool* degenerate) {
    const std::size_t m = a.size();
    if (m == 0) return 0.0;
    if (a.back() == a.front()) {  // point mass
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double h = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t partner = (i + static_cast<std::size_t>(w)) % m;
        double bw = std::abs(a[i] - a[partner]);
        if (bw == 0.0) {
            if (degenerate) *degenerate = true;
            bw = kMinBandwidth;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += gauss((a[i] - a[j]) / bw);
        const double p = sum / (static_cast<double>(m) * bw);
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double window_entropy(std::span<const double> window, int w, bool* degenerate) {
    std::vector<double> sorted(window.begin(), window.end());
    std::sort(sorted.begin(), sorted.end());
    return entropy_sorted(sorted, w, degenerate);
}

KdeScores kde_score(std::span<const double> signal, const KdeParams& params) {
    check_signal(signal, params);
    const std::size_t n = signal.size();
    const std::size_t k = static_cast<std::size_t>(params.k);

    KdeScores out;
    out.score.resize(n);
    std::vector<double> ctx;
    ctx.reserve(2 * k + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= k ? i - k : 0;
        const std::size_t hi = std::min(n - 1, i + k);

        ctx.clear();
        for (std::size_t j = lo; j <= hi; ++j)
            if (j != i) ctx.push_back(signal[j]);
        std::sort(ctx.begin(), ctx.end());
        const double h_without = entropy_sorted(ctx, params.w, &out.degenerate);

        // Insert x_i to get the inclusive context, still sorted.
        ctx.insert(std::upper_bound(ctx.begin(), ctx.end(), signal[i]), signal[i]);
        const double h_with = entropy_sorted(ctx, params.w, &out.degenerate);

        out.score[i] = h_without - h_with;
    }
    return out;
}

PeakList detect_peaks(std::span<const double> signal, const KdeParams& params) {
    const KdeScores scores = kde_score(signal, params);
    const std::size_t n = scores.score.size();

    double mean = 0.0;
    for (double s : scores.score) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : scores.score) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));

    PeakList out;
    out.degenerate = scores.degenerate;
    std::size_t run_best = 0;
    bool in_run = false;
    for (std::size_t i = 0; i <= n; ++i) {
        const bool qualifies =
            i < n && scores.score[i] > mean && std::abs(scores.score[i] - mean) > params.h * sd;
        if (qualifies) {
            if (!in_run || scores.score[i] > scores.score[run_best]) run_best = i;
            in_run = true;
        } else if (in_run) {
            out.indices.push_back(run_best);
            in_run = false;
        }
    }
    return out;
}

double peak_wavelength(const SpectrumFrame& spec, const KdeParams& params) {
    if (spec.wavelength.size() != spec.intensity.size())
        throw Error(ErrorCode::ShapeMismatch, "spectrum grid/intensity size mismatch");
    const auto& x = spec.intensity;
    const std::size_t n = x.size();
    if (n == 0) throw Error(ErrorCode::NoPeak, "empty spectrum");

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));

    // Conditions (i) and (ii) on the intensities; one candidate per
    // contiguous qualifying run (its max bin); strongest run wins.
    bool found = false;
    std::size_t best = 0;
    std::size_t run_best = 0;
    bool in_run = false;
    for (std::size_t i = 0; i <= n; ++i) {
        const bool q = i < n && x[i] > mean && std::abs(x[i] - mean) > params.h * sd;
        if (q) {
            if (!in_run || x[i] > x[run_best]) run_best = i;
            in_run = true;
        } else if (in_run) {
            if (!found || x[run_best] > x[best]) best = run_best;
            found = true;
            in_run = false;
        }
    }
    if (!found) throw Error(ErrorCode::NoPeak, "no peak detected in spectrum");
    return spec.wavelength[best];
}

double baseline_peak(const SpectrumFrame& spec) {
    const std::size_t n = spec.intensity.size();
    if (n == 0 || spec.wavelength.size() != n)
        throw Error(ErrorCode::ShapeMismatch, "spectrum grid/intensity size mismatch");
    const auto [mn, mx] = std::minmax_element(spec.intensity.begin(), spec.intensity.end());
    if (*mn == *mx) throw Error(ErrorCode::FlatSpectrum, "constant spectrum has no peak");

    const std::size_t i = static_cast<std::size_t>(mx - spec.intensity.begin());
    if (i == 0 || i == n - 1) return spec.wavelength[i];

    const double yl = spec.intensity[i - 1];
    const double y0 = spec.intensity[i];
    const double yr = spec.intensity[i + 1];
    const double denom = yl - 2.0 * y0 + yr;
    double p = denom == 0.0 ? 0.0 : 0.5 * (yl - yr) / denom;
    p = std::clamp(p, -0.5, 0.5);
    const double step = 0.5 * (spec.wavelength[i + 1] - spec.wavelength[i - 1]);
    return spec.wavelength[i] + p * step;
}

PeakStats compare_stats(std::span<const double> peaks_a, std::span<const double> peaks_b) {
    if (peaks_a.empty() || peaks_b.empty())
        throw Error(ErrorCode::EmptyInput, "compare_stats: empty input");
    auto stats = [](std::span<const double> v, double& mean, double& sd) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() < 2) {
            sd = 0.0;
            return;
        }
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    PeakStats s;
    stats(peaks_a, s.mean_a, s.std_a);
    stats(peaks_b, s.mean_b, s.std_b);
    return s;
}

}  // namespace cfs::kde

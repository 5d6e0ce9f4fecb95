// Entropy/KDE peak scoring and detection, plus the parabolic-interpolation
// baseline that stands in for the interrogator vendor's peak picker.
#pragma once

#include <span>
#include <vector>

#include "cfs/core.hpp"

namespace cfs::kde {

/// k: half-width of the local context in samples; w: probability-window
/// offset used for the per-element bandwidth; h: Chebyshev multiplier on the
/// score's standard deviation. Defaults are configuration, not algorithm:
/// callers tune them per signal type.
struct KdeParams {
    int k = 5;
    int w = 1;
    double h = 1.5;
};

struct KdeScores {
    std::vector<double> score;
    bool degenerate = false;  // some bandwidth hit zero and was substituted
};

struct PeakList {
    std::vector<std::size_t> indices;  // ascending
    bool degenerate = false;
};

/// Entropy of one context window. The window is treated as a multiset
/// (computed on a sorted copy, so any permutation of `window` gives the same
/// value): each element's kernel bandwidth is the gap to the element w
/// places further in sorted order, wrapping past the end. Zero bandwidths
/// are replaced by 1e-12 and flagged; an all-constant window is a point
/// mass with entropy 0 by convention.
double window_entropy(std::span<const double> window, int w, bool* degenerate = nullptr);

/// Per-sample score S(x_i) = H_w(context without x_i) - H_w(context with
/// x_i), contexts of half-width k, truncated at the signal boundaries.
KdeScores kde_score(std::span<const double> signal, const KdeParams& params);

/// Indices whose score exceeds the score mean by more than h standard
/// deviations (population), reduced to one index (max score) per run of
/// adjacent qualifying samples.
PeakList detect_peaks(std::span<const double> signal, const KdeParams& params);

/// Wavelength picked from a spectrum frame by the Chebyshev outlier
/// conditions applied to the reflected intensities: bins with
/// x > mean(x) + h*std(x) qualify, each contiguous qualifying run reduces
/// to its maximum-intensity bin, and the strongest run wins. The entropy
/// score deliberately stays out of the spectral path: it flags locally
/// surprising samples, which a smooth reflection peak many bins wide is
/// not, so it cannot localize the crest (detect_peaks remains the scored
/// path for scalar series). Throws NoPeak when nothing qualifies.
double peak_wavelength(const SpectrumFrame& spec, const KdeParams& params);

/// Stand-in for the vendor algorithm: 3-point parabola through the argmax
/// bin and its neighbours; clamps to the bin itself at grid edges.
/// Throws FlatSpectrum on constant input.
double baseline_peak(const SpectrumFrame& spec);

struct PeakStats {
    double mean_a = 0.0;
    double std_a = 0.0;
    double mean_b = 0.0;
    double std_b = 0.0;
};

/// Sample means and sample standard deviations (n-1 denominator) of two
/// peak-estimate sets. Throws EmptyInput.
PeakStats compare_stats(std::span<const double> peaks_a, std::span<const double> peaks_b);

}  // namespace cfs::kde

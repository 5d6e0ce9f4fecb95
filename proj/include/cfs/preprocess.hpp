// Resampling of irregular streams to fixed rates, shift computation against
// per-sensor references, stream alignment and 100-sample windowing.
#pragma once

#include <span>
#include <vector>

#include "cfs/core.hpp"

namespace cfs::prep {

/// Not-a-knot cubic spline through (x, y); reproduces cubic polynomials
/// exactly. Evaluation outside [x.front(), x.back()] is clamped to the ends
/// (callers never extrapolate).
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_, y_, m_;  // m_: second derivatives at the knots
};

/// Resamples every channel onto the grid t = k/target_hz restricted to
/// [t_first, t_last]. Throws TooFewSamples (<4) and NonMonotonic.
TimeSeries resample_cubic(const TimeSeries& series, double target_hz);

/// value[c] - reference[c], elementwise. Throws ChannelMismatch.
TimeSeries compute_shift(const TimeSeries& series, std::span<const double> reference);

/// Per-channel median over the first `lead_s` seconds; the episodes' 0 g
/// lead-in makes this the reference Bragg wavelength estimate.
std::vector<double> estimate_reference(const TimeSeries& series, double lead_s = 0.5);

/// Shifts at exactly 1000 Hz paired with forces at exactly 10 Hz on a common
/// clock anchored at the overlap start. Force label t carries timestamp
/// 0.1*(t+1): each label is paired with the hundred shift samples that
/// precede it, so prediction never looks ahead.
struct AlignedPair {
    TimeSeries shifts;   // 3 channels, nm, grid 0, 1e-3, ...
    TimeSeries forces;   // 1 channel, grams, grid 0.1, 0.2, ...
    std::vector<double> reference;
};

AlignedPair align(const TimeSeries& interrogator, const TimeSeries& scale,
                  std::span<const double> reference);

/// Partitions the aligned pair into WindowedExamples: example t owns shift
/// rows [100t, 100(t+1)) and target forces[t]. Lossless and non-overlapping.
std::vector<WindowedExample> window(const AlignedPair& pair);

/// Full per-episode pipeline: reference from the lead-in, align, window.
struct WindowedEpisode {
    int episode_id = 0;
    std::vector<WindowedExample> examples;
};

WindowedEpisode process_episode(const Episode& ep, double reference_lead_s = 0.5);

using WindowedDataset = std::vector<WindowedEpisode>;

}  // namespace cfs::prep

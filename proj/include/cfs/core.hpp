// Core domain types shared by the whole pipeline: time series, sensor
// physics, episodes, windowed training examples, spectra.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfs {

enum class ErrorCode {
    ShapeMismatch,
    ChannelMismatch,
    TooFewSamples,
    NonMonotonic,
    NoOverlap,
    EdgeError,
    NoPeak,
    FlatSpectrum,
    EmptyInput,
    HeadDivisibility,
    KindMismatch,
    InvalidSpec,
    EmptyDataset,
    EmptyEpisode,
    EmptyRun,
    LengthMismatch,
    ParseError,
    MissingFile,
    IoError,
    CheckpointMismatch,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// Timestamped multi-channel samples. Timestamps are seconds from episode
/// start. `values` is row-major: sample i, channel c at values[i*channels+c].
/// Plain data on purpose: invalid states are representable and reported by
/// validate_series instead of being unconstructible.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> values;
    std::size_t channels = 0;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    double value(std::size_t i, std::size_t c) const { return values[i * channels + c]; }
    double& value(std::size_t i, std::size_t c) { return values[i * channels + c]; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * channels, channels};
    }
};

/// Reduced FBG forward model: relative shift = (1 - p_e) * strain, and one
/// calibration constant mapping grams to axial strain. lambda_b holds the
/// reference wavelength of each of the three sensors around the lumen.
struct FbgPhysics {
    std::array<double, 3> lambda_b{1539.45, 1539.70, 1539.95};
    double p_e = 0.22;
    double sensitivity = 9.0e5;  // grams per unit axial strain

    // nm of wavelength shift per gram on the axial path
    double shift_per_gram(int sensor) const {
        return lambda_b[static_cast<std::size_t>(sensor)] * (1.0 - p_e) / sensitivity;
    }
};

/// One persistent reference shift: from time t on, sensor `sensor` reads
/// `offset` nm above its reference (offsets accumulate per sensor).
struct SorEvent {
    double t = 0.0;
    int sensor = 0;
    double offset = 0.0;  // nm
};

struct EpisodeMeta {
    std::uint64_t seed = 0;
    double duration = 60.0;
    int index = 0;
};

/// One poke session: raw interrogator stream (3 sensors, nm, ~1 kHz
/// irregular), raw scale stream (grams, ~10 Hz irregular), SoR ground truth.
struct Episode {
    TimeSeries interrogator;
    TimeSeries scale;
    std::vector<SorEvent> sor_events;
    EpisodeMeta meta;
};

/// Input/target pair of the estimators: 100 x 3 wavelength-shift matrix
/// (row-major) and the force in grams at the window's end.
struct WindowedExample {
    std::vector<double> x;  // 100*3, row-major
    double y = 0.0;
    int t = 0;

    static constexpr std::size_t kRows = 100;
    static constexpr std::size_t kCols = 3;
};

/// Reflected-intensity-vs-wavelength snapshot for one sensor at one instant.
struct SpectrumFrame {
    std::vector<double> wavelength;  // nm, strictly increasing
    std::vector<double> intensity;   // linear, peak ~ 1
};

/// Checks every TimeSeries invariant and returns human-readable violations,
/// each naming the rule and the first offending sample index. Never throws.
std::vector<std::string> validate_series(const TimeSeries& series);

/// Episode-level invariants (channel counts, spans) on top of per-series ones.
std::vector<std::string> validate_episode(const Episode& ep);

}  // namespace cfs

// Synthetic episode generation: raised-cosine pokes, tri-axial wavelength
// responses with bending and Shift-of-Reference drift, and reflection
// spectra with spectrally correlated noise.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cfs/core.hpp"
#include "cfs/rng.hpp"

namespace cfs::sim {

struct SimConfig {
    int episodes = 20;
    double duration = 60.0;         // s
    double contact_rate = 8.0;      // pokes per minute
    double force_peak_min = 5.0;    // grams
    double force_peak_max = 50.0;
    double bend_prob = 0.9;         // probability a poke is bent-tip
    double sor_prob = 0.0;          // per-poke probability of a reference shift
    double sor_offset_min = 0.02;   // nm
    double sor_offset_max = 0.10;
    double noise_sigma = 8e-3;      // nm
    double interrogator_hz = 1000.0;
    double interrogator_jitter = 0.02;  // +-2% per-interval
    double scale_hz = 10.0;
    double scale_jitter = 0.05;
    double bend_gain_min = 3.0;     // bending term, multiples of the axial strain
    double bend_gain_max = 6.0;
    double bend_axial_max = 0.03;   // bent pokes keep U[0,this] of the axial term
    std::uint64_t seed = 1;
};

std::vector<std::string> validate_config(const SimConfig& cfg);

struct SpectrumConfig {
    double grid_min = 1535.0;  // nm
    double grid_max = 1545.0;
    double grid_step = 0.005;
    double fwhm = 0.5;
    // Peak amplitude over the noise's marginal sigma; infinity = noiseless.
    double snr = 200.0;
    // Correlation length of the noise along the wavelength axis (nm). The
    // interrogator's optical resolution smears noise across neighbouring
    // bins, so it is not white per 5 pm bin.
    double noise_corr = 0.5;
    std::uint64_t seed = 1;
};

/// Per-poke ground truth. Channel i's strain factor during the poke is
/// axial_scale + bend_gain * cos(theta + 2*pi*i/3), times force/sensitivity.
struct Poke {
    double t0 = 0.0;
    double width = 0.0;
    double peak = 0.0;  // grams
    bool bent = false;
    double theta = 0.0;
    double bend_gain = 0.0;
    double axial_scale = 1.0;
    int sor_sensor = -1;       // -1: no reference shift from this poke
    double sor_offset = 0.0;   // nm, signed
};

/// Dense regular force ground truth at interrogator_hz. Raised-cosine bumps
/// with on-grid starts and centers: force is exactly zero between pokes and
/// each sampled peak equals the drawn amplitude.
TimeSeries gen_force_profile(const SimConfig& cfg, int episode_index);

struct SensorResponse {
    TimeSeries series;  // 3 channels, nm, jittered ~interrogator_hz
    std::vector<SorEvent> sor_events;
    std::vector<Poke> pokes;
};

/// Tri-axial wavelength response to a force profile. Pokes are recovered
/// from the profile's positive runs; per-poke rotation, bending, and SoR
/// draws come from `rng` in a fixed order.
SensorResponse gen_sensor_response(const TimeSeries& force, const FbgPhysics& phys,
                                   const SimConfig& cfg, Rng& rng);

/// Gaussian reflection peak on the configured grid plus correlated noise.
/// Throws EdgeError when `bragg` is within 2*fwhm of a grid edge.
SpectrumFrame gen_spectrum(double bragg, const SpectrumConfig& cfg, Rng& rng);

struct GeneratedEpisode {
    Episode episode;
    TimeSeries force_truth;   // dense regular grid
    std::vector<Poke> pokes;
    std::uint64_t episode_seed = 0;
};

/// Deterministic in cfg.seed; episode e draws from streams derived from
/// (seed, e) only, so any generation order gives identical output.
std::vector<GeneratedEpisode> gen_dataset(const SimConfig& cfg, const FbgPhysics& phys = {});

GeneratedEpisode gen_episode(const SimConfig& cfg, const FbgPhysics& phys, int episode_index);

}  // namespace cfs::sim

#include "cfs/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfs::sim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLeadIn = 0.7;    // 0 g head room for reference estimation
constexpr double kTailGap = 1.3;   // 0 g tail, long enough for SoR assertions
constexpr double kPokeGap = 0.3;

void check_config(const SimConfig& cfg) {
    const auto violations = validate_config(cfg);
    if (!violations.empty())
        throw Error(ErrorCode::InvalidSpec, "SimConfig: " + violations.front());
}

double bump(double t, double t0, double width, double peak) {
    if (t <= t0 || t >= t0 + width) return 0.0;
    return 0.5 * peak * (1.0 - std::cos(kTwoPi * (t - t0) / width));
}

// Linear interpolation on a regular-grid series; callers stay in range.
double interp(const TimeSeries& s, double t) {
    if (s.size() == 1 || t <= s.t.front()) return s.values.front();
    if (t >= s.t.back()) return s.values.back();
    const double pos = (t - s.t.front()) / (s.t[1] - s.t[0]);
    std::size_t i = static_cast<std::size_t>(pos);
    i = std::min(i, s.size() - 2);
    const double frac = (t - s.t[i]) / (s.t[i + 1] - s.t[i]);
    return s.values[i] + frac * (s.values[i + 1] - s.values[i]);
}

std::vector<double> jittered_timestamps(double duration, double hz, double jitter, Rng& rng) {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(duration * hz * 1.05) + 2);
    const double dt = 1.0 / hz;
    // Small device clock offset, then per-interval jitter. The offset stays
    // well under one period so both streams cover the episode from ~0.
    double cur = rng.uniform(0.0, 0.1 * dt);
    while (cur <= duration) {
        t.push_back(cur);
        cur += dt * (1.0 + rng.uniform(-jitter, jitter));
    }
    return t;
}

struct PokeSpan {
    std::size_t first = 0, last = 0;  // sample index range with force > 0
};

std::vector<PokeSpan> positive_runs(const TimeSeries& force) {
    std::vector<PokeSpan> runs;
    bool in_run = false;
    for (std::size_t i = 0; i < force.size(); ++i) {
        if (force.values[i] > 0.0) {
            if (!in_run) runs.push_back({i, i});
            runs.back().last = i;
            in_run = true;
        } else {
            in_run = false;
        }
    }
    return runs;
}

}  // namespace

std::vector<std::string> validate_config(const SimConfig& cfg) {
    std::vector<std::string> v;
    auto prob = [&](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) v.push_back(std::string(name) + " outside [0,1]");
    };
    prob(cfg.bend_prob, "bend_prob");
    prob(cfg.sor_prob, "sor_prob");
    if (cfg.episodes < 0) v.push_back("episodes negative");
    if (!(cfg.duration > 0.0)) v.push_back("duration must be positive");
    if (cfg.contact_rate < 0.0) v.push_back("contact_rate negative");
    if (!(cfg.force_peak_max > cfg.force_peak_min) || cfg.force_peak_min <= 0.0)
        v.push_back("force peak range degenerate");
    if (!(cfg.sor_offset_max > cfg.sor_offset_min) || cfg.sor_offset_min <= 0.0)
        v.push_back("sor offset range degenerate");
    if (!(cfg.noise_sigma > 0.0)) v.push_back("noise_sigma must be positive");
    if (!(cfg.interrogator_hz > 0.0) || !(cfg.scale_hz > 0.0)) v.push_back("rates must be positive");
    if (!(cfg.interrogator_jitter >= 0.0 && cfg.interrogator_jitter < 1.0) ||
        !(cfg.scale_jitter >= 0.0 && cfg.scale_jitter < 1.0))
        v.push_back("jitter must be in [0,1)");
    if (!(cfg.bend_gain_max >= cfg.bend_gain_min) || cfg.bend_gain_min <= 0.0)
        v.push_back("bend gain range degenerate");
    if (cfg.bend_axial_max < 0.0) v.push_back("bend_axial_max negative");
    return v;
}

TimeSeries gen_force_profile(const SimConfig& cfg, int episode_index) {
    check_config(cfg);
    Rng rng(cfg.seed, 2 * static_cast<std::uint64_t>(episode_index));

    const double dt = 1.0 / cfg.interrogator_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration / dt));

    // Draw widths/peaks, then place the pokes left to right with random
    // slack. Widths use an even number of grid steps so each bump's start
    // and center land exactly on the dense grid. Pokes are drawn in pairs
    // sharing width and amplitude; the response generator rotates the
    // second of each pair by pi, which cancels the bending term's odd
    // moments and keeps the shift histograms symmetric.
    std::size_t n_pokes =
        static_cast<std::size_t>(std::llround(cfg.contact_rate * cfg.duration / 60.0));
    std::vector<double> widths(n_pokes), peaks(n_pokes);
    for (std::size_t p = 0; p < n_pokes; ++p) {
        if (p % 2 == 1) {
            widths[p] = widths[p - 1];
            peaks[p] = peaks[p - 1];
            continue;
        }
        double w = rng.uniform(0.5, 3.0);
        const auto steps = static_cast<std::size_t>(std::llround(w / (2.0 * dt)));
        widths[p] = static_cast<double>(2 * std::max<std::size_t>(1, steps)) * dt;
        peaks[p] = rng.uniform(cfg.force_peak_min, cfg.force_peak_max);
    }
    const double available = cfg.duration - kLeadIn - kTailGap;
    auto fits = [&](std::size_t count) {
        double need = 0.0;
        for (std::size_t p = 0; p < count; ++p) need += widths[p] + kPokeGap;
        return need <= available;
    };
    while (n_pokes > 0 && !fits(n_pokes)) --n_pokes;

    double used = 0.0;
    for (std::size_t p = 0; p < n_pokes; ++p) used += widths[p] + kPokeGap;
    const double free_slack = std::max(0.0, available - used);
    std::vector<double> offsets(n_pokes);
    for (auto& o : offsets) o = rng.uniform(0.0, free_slack);
    std::sort(offsets.begin(), offsets.end());

    std::vector<std::pair<double, double>> placed;  // (t0, width) paired with peaks order
    double cursor = kLeadIn;
    for (std::size_t p = 0; p < n_pokes; ++p) {
        double t0 = cursor + offsets[p] - (p > 0 ? offsets[p - 1] : 0.0);
        t0 = std::round(t0 / dt) * dt;  // keep starts on-grid
        placed.emplace_back(t0, widths[p]);
        cursor = t0 + widths[p] + kPokeGap;
    }

    TimeSeries force;
    force.channels = 1;
    force.t.resize(n);
    force.values.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) force.t[i] = static_cast<double>(i) * dt;
    for (std::size_t p = 0; p < placed.size(); ++p) {
        const auto [t0, w] = placed[p];
        const auto i0 = static_cast<std::size_t>(std::llround(t0 / dt));
        const auto count = static_cast<std::size_t>(std::llround(w / dt));
        for (std::size_t s = 1; s < count && i0 + s < n; ++s)
            force.values[i0 + s] = bump(force.t[i0 + s], t0, w, peaks[p]);
        // Exact peak at the on-grid center.
        const std::size_t center = i0 + count / 2;
        if (center < n) force.values[center] = peaks[p];
    }
    return force;
}

SensorResponse gen_sensor_response(const TimeSeries& force, const FbgPhysics& phys,
                                   const SimConfig& cfg, Rng& rng) {
    check_config(cfg);
    if (force.channels != 1 || force.empty())
        throw Error(ErrorCode::ShapeMismatch, "gen_sensor_response: expects 1-channel force");

    SensorResponse out;
    const auto runs = positive_runs(force);
    out.pokes.reserve(runs.size());
    for (const auto& run : runs) {
        Poke poke;
        poke.t0 = force.t[run.first > 0 ? run.first - 1 : 0];
        poke.width = force.t[run.last] - poke.t0 + (force.t[1] - force.t[0]);
        poke.peak = 0.0;
        for (std::size_t i = run.first; i <= run.last; ++i)
            poke.peak = std::max(poke.peak, force.values[i]);
        if (out.pokes.size() % 2 == 1) {
            // Second of an antithetic pair: same draws, rotated by pi.
            const Poke& mate = out.pokes.back();
            poke.bent = mate.bent;
            poke.theta = std::fmod(mate.theta + kTwoPi / 2.0, kTwoPi);
            poke.bend_gain = mate.bend_gain;
            poke.axial_scale = mate.axial_scale;
        } else {
            poke.bent = rng.bernoulli(cfg.bend_prob);
            poke.theta = rng.uniform(0.0, kTwoPi);
            if (poke.bent) {
                poke.bend_gain = rng.uniform(cfg.bend_gain_min, cfg.bend_gain_max);
                poke.axial_scale = rng.uniform(0.0, cfg.bend_axial_max);
                // Keep every channel factor away from zero for both the poke
                // and its pi-rotated mate, so the sign split at peak force is
                // unambiguous for every bent poke.
                for (int attempt = 0; attempt < 64; ++attempt) {
                    double min_abs = std::numeric_limits<double>::infinity();
                    for (int s = 0; s < 3; ++s) {
                        const double c =
                            poke.bend_gain * std::cos(poke.theta + kTwoPi * s / 3.0);
                        min_abs = std::min({min_abs, std::abs(poke.axial_scale + c),
                                            std::abs(poke.axial_scale - c)});
                    }
                    if (min_abs >= 0.15) break;
                    poke.theta = rng.uniform(0.0, kTwoPi);
                }
            }
        }
        if (rng.bernoulli(cfg.sor_prob)) {
            poke.sor_sensor = static_cast<int>(rng.uniform_int(3));
            const double mag = rng.uniform(cfg.sor_offset_min, cfg.sor_offset_max);
            poke.sor_offset = rng.bernoulli(0.5) ? mag : -mag;
            out.sor_events.push_back(
                {force.t[run.last], poke.sor_sensor, poke.sor_offset});
        }
        out.pokes.push_back(poke);
    }

    const std::vector<double> ts =
        jittered_timestamps(force.t.back(), cfg.interrogator_hz, cfg.interrogator_jitter, rng);
    out.series.channels = 3;
    out.series.t = ts;
    out.series.values.resize(ts.size() * 3);

    std::array<double, 3> sor_level{0.0, 0.0, 0.0};
    std::size_t next_event = 0;
    std::size_t poke_idx = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        while (next_event < out.sor_events.size() && out.sor_events[next_event].t <= t) {
            sor_level[static_cast<std::size_t>(out.sor_events[next_event].sensor)] +=
                out.sor_events[next_event].offset;
            ++next_event;
        }
        while (poke_idx < out.pokes.size() &&
               t > out.pokes[poke_idx].t0 + out.pokes[poke_idx].width)
            ++poke_idx;
        const Poke* poke = nullptr;
        if (poke_idx < out.pokes.size() && t >= out.pokes[poke_idx].t0) poke = &out.pokes[poke_idx];

        const double strain = interp(force, t) / phys.sensitivity;
        for (int s = 0; s < 3; ++s) {
            double factor = 0.0;
            if (poke != nullptr && strain > 0.0)
                factor = poke->axial_scale +
                         poke->bend_gain * std::cos(poke->theta + kTwoPi * s / 3.0);
            const double lb = phys.lambda_b[static_cast<std::size_t>(s)];
            out.series.value(i, static_cast<std::size_t>(s)) =
                lb * (1.0 + (1.0 - phys.p_e) * strain * factor) +
                sor_level[static_cast<std::size_t>(s)] + rng.normal(0.0, cfg.noise_sigma);
        }
    }
    return out;
}

SpectrumFrame gen_spectrum(double bragg, const SpectrumConfig& cfg, Rng& rng) {
    if (!(cfg.grid_max > cfg.grid_min) || !(cfg.grid_step > 0.0) || !(cfg.fwhm > 0.0))
        throw Error(ErrorCode::InvalidSpec, "SpectrumConfig: degenerate grid or fwhm");
    if (bragg < cfg.grid_min + 2.0 * cfg.fwhm || bragg > cfg.grid_max - 2.0 * cfg.fwhm)
        throw Error(ErrorCode::EdgeError, "gen_spectrum: bragg within 2*fwhm of grid edge");

    const auto n = static_cast<std::size_t>(
                       std::llround((cfg.grid_max - cfg.grid_min) / cfg.grid_step)) +
                   1;
    SpectrumFrame frame;
    frame.wavelength.resize(n);
    frame.intensity.resize(n);
    const double c = 4.0 * std::log(2.0) / (cfg.fwhm * cfg.fwhm);
    for (std::size_t j = 0; j < n; ++j) {
        frame.wavelength[j] = cfg.grid_min + static_cast<double>(j) * cfg.grid_step;
        const double d = frame.wavelength[j] - bragg;
        frame.intensity[j] = std::exp(-c * d * d);
    }

    if (std::isfinite(cfg.snr)) {
        // Stationary Gaussian noise with an RBF covariance of length
        // noise_corr, realized with random Fourier features.
        constexpr int kFeatures = 64;
        const double sigma = 1.0 / cfg.snr;
        std::array<double, kFeatures> omega, phase;
        for (int f = 0; f < kFeatures; ++f) {
            omega[static_cast<std::size_t>(f)] = rng.normal(0.0, 1.0 / cfg.noise_corr);
            phase[static_cast<std::size_t>(f)] = rng.uniform(0.0, kTwoPi);
        }
        const double amp = sigma * std::sqrt(2.0 / kFeatures);
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int f = 0; f < kFeatures; ++f)
                acc += std::cos(omega[static_cast<std::size_t>(f)] * frame.wavelength[j] +
                                phase[static_cast<std::size_t>(f)]);
            frame.intensity[j] += amp * acc;
        }
    }
    return frame;
}

GeneratedEpisode gen_episode(const SimConfig& cfg, const FbgPhysics& phys, int episode_index) {
    check_config(cfg);
    GeneratedEpisode ep;
    ep.episode_seed = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(episode_index)));
    ep.force_truth = gen_force_profile(cfg, episode_index);

    Rng rng(cfg.seed, 2 * static_cast<std::uint64_t>(episode_index) + 1);
    SensorResponse resp = gen_sensor_response(ep.force_truth, phys, cfg, rng);
    ep.pokes = std::move(resp.pokes);
    ep.episode.interrogator = std::move(resp.series);
    ep.episode.sor_events = std::move(resp.sor_events);

    Rng scale_rng = rng.fork(0xa5);
    const std::vector<double> ts =
        jittered_timestamps(cfg.duration, cfg.scale_hz, cfg.scale_jitter, scale_rng);
    ep.episode.scale.channels = 1;
    ep.episode.scale.t = ts;
    ep.episode.scale.values.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        ep.episode.scale.values[i] = interp(ep.force_truth, ts[i]);

    ep.episode.meta.seed = ep.episode_seed;
    ep.episode.meta.duration = cfg.duration;
    ep.episode.meta.index = episode_index;
    return ep;
}

std::vector<GeneratedEpisode> gen_dataset(const SimConfig& cfg, const FbgPhysics& phys) {
    check_config(cfg);
    std::vector<GeneratedEpisode> out;
    out.reserve(static_cast<std::size_t>(cfg.episodes));
    for (int e = 0; e < cfg.episodes; ++e) out.push_back(gen_episode(cfg, phys, e));
    return out;
}

}  // namespace cfs::sim

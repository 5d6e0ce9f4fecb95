// Bit-exact persistence: episode CSV file sets with JSON sidecar manifests,
// prediction traces, dataset directories. Writers are atomic (temp +
// rename); readers reject malformed input with line numbers, never repair.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfs/core.hpp"
#include "cfs/simulate.hpp"

namespace cfs::io {

/// FNV-1a over a byte string; used for config hashes and determinism checks.
std::uint64_t fnv1a(std::string_view bytes);

std::string config_json(const sim::SimConfig& cfg, const FbgPhysics& phys);

/// Writes interrogator.csv (`time,s0,s1,s2`), scale.csv (`time,force`) and
/// manifest.json into `dir`. Values are %.17g so a re-read is bit-identical.
void write_episode(const Episode& ep, const std::filesystem::path& dir,
                   const std::vector<sim::Poke>& pokes = {},
                   const std::string& config_hash = {});

Episode read_episode(const std::filesystem::path& dir);

void write_predictions(std::span<const double> times, std::span<const double> real,
                       std::span<const double> pred, const std::filesystem::path& path);

/// Generic series CSV with the given header (atomic like every writer here).
void write_timeseries(const TimeSeries& s, const std::string& header,
                      const std::filesystem::path& path);

/// Dataset directory: ep000..epNNN plus a root manifest echoing the fully
/// resolved config, per-episode seeds and the SoR ground truth.
void write_dataset(const std::vector<sim::GeneratedEpisode>& episodes, const sim::SimConfig& cfg,
                   const FbgPhysics& phys, const std::filesystem::path& dir);

std::vector<Episode> read_dataset(const std::filesystem::path& dir);

}  // namespace cfs::io

#include "cfs/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cfs::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorCode::IoError, "cannot open " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "rename failed for " + path.string());
}

std::string series_csv(const TimeSeries& s, const std::string& header) {
    std::string out = header + "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += fmt_double(s.t[i]);
        for (std::size_t c = 0; c < s.channels; ++c) {
            out += ',';
            out += fmt_double(s.value(i, c));
        }
        out += '\n';
    }
    return out;
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t line) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw Error(ErrorCode::ParseError,
                    path.string() + ": malformed number '" + cell + "' at line " +
                        std::to_string(line));
    return v;
}

TimeSeries read_series_csv(const fs::path& path, const std::string& expected_header,
                           std::size_t channels) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::MissingFile, "missing file " + path.string());
    std::string line;
    if (!std::getline(is, line))
        throw Error(ErrorCode::ParseError, path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw Error(ErrorCode::ParseError, path.string() + ": expected header '" +
                                               expected_header + "', got '" + line + "'");

    TimeSeries s;
    s.channels = channels;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty())
            throw Error(ErrorCode::ParseError,
                        path.string() + ": blank line at line " + std::to_string(line_no));
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != channels + 1)
            throw Error(ErrorCode::ParseError, path.string() + ": expected " +
                                                   std::to_string(channels + 1) +
                                                   " fields at line " + std::to_string(line_no));
        s.t.push_back(parse_cell(cells[0], path, line_no));
        for (std::size_t c = 0; c < channels; ++c)
            s.values.push_back(parse_cell(cells[c + 1], path, line_no));
    }

    for (const std::string& v : validate_series(s))
        throw Error(ErrorCode::ParseError, path.string() + ": " + v);
    return s;
}

json sor_events_json(const std::vector<SorEvent>& events) {
    json arr = json::array();
    for (const auto& ev : events)
        arr.push_back({{"t", ev.t}, {"sensor", ev.sensor}, {"offset", ev.offset}});
    return arr;
}

std::vector<SorEvent> sor_events_from_json(const json& arr) {
    std::vector<SorEvent> out;
    for (const auto& e : arr)
        out.push_back({e.at("t").get<double>(), e.at("sensor").get<int>(),
                       e.at("offset").get<double>()});
    return out;
}

json pokes_json(const std::vector<sim::Poke>& pokes) {
    json arr = json::array();
    for (const auto& p : pokes)
        arr.push_back({{"t0", p.t0},
                       {"width", p.width},
                       {"peak", p.peak},
                       {"bent", p.bent},
                       {"theta", p.theta},
                       {"bend_gain", p.bend_gain},
                       {"axial_scale", p.axial_scale},
                       {"sor_sensor", p.sor_sensor},
                       {"sor_offset", p.sor_offset}});
    return arr;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_json(const sim::SimConfig& cfg, const FbgPhysics& phys) {
    json j{{"episodes", cfg.episodes},
           {"duration", cfg.duration},
           {"contact_rate", cfg.contact_rate},
           {"force_peak_min", cfg.force_peak_min},
           {"force_peak_max", cfg.force_peak_max},
           {"bend_prob", cfg.bend_prob},
           {"sor_prob", cfg.sor_prob},
           {"sor_offset_min", cfg.sor_offset_min},
           {"sor_offset_max", cfg.sor_offset_max},
           {"noise_sigma", cfg.noise_sigma},
           {"interrogator_hz", cfg.interrogator_hz},
           {"interrogator_jitter", cfg.interrogator_jitter},
           {"scale_hz", cfg.scale_hz},
           {"scale_jitter", cfg.scale_jitter},
           {"bend_gain_min", cfg.bend_gain_min},
           {"bend_gain_max", cfg.bend_gain_max},
           {"bend_axial_max", cfg.bend_axial_max},
           {"seed", cfg.seed},
           {"lambda_b", phys.lambda_b},
           {"p_e", phys.p_e},
           {"sensitivity", phys.sensitivity}};
    return j.dump();
}

void write_episode(const Episode& ep, const fs::path& dir, const std::vector<sim::Poke>& pokes,
                   const std::string& config_hash) {
    if (ep.interrogator.empty() || ep.scale.empty())
        throw Error(ErrorCode::EmptyEpisode, "write_episode: empty episode");
    const auto violations = validate_episode(ep);
    if (!violations.empty())
        throw Error(ErrorCode::InvalidSpec, "write_episode: " + violations.front());

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());

    atomic_write(dir / "interrogator.csv", series_csv(ep.interrogator, "time,s0,s1,s2"));
    atomic_write(dir / "scale.csv", series_csv(ep.scale, "time,force"));

    json manifest{{"format", "cfs-episode-1"},
                  {"seed", ep.meta.seed},
                  {"duration", ep.meta.duration},
                  {"index", ep.meta.index},
                  {"sor_events", sor_events_json(ep.sor_events)},
                  {"config_hash", config_hash}};
    if (!pokes.empty()) manifest["pokes"] = pokes_json(pokes);
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Episode read_episode(const fs::path& dir) {
    Episode ep;
    ep.interrogator = read_series_csv(dir / "interrogator.csv", "time,s0,s1,s2", 3);
    ep.scale = read_series_csv(dir / "scale.csv", "time,force", 1);

    const fs::path mpath = dir / "manifest.json";
    if (fs::exists(mpath)) {
        std::ifstream is(mpath);
        json manifest;
        try {
            is >> manifest;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, mpath.string() + ": " + e.what());
        }
        ep.meta.seed = manifest.value("seed", std::uint64_t{0});
        ep.meta.duration = manifest.value("duration", 60.0);
        ep.meta.index = manifest.value("index", 0);
        if (manifest.contains("sor_events"))
            ep.sor_events = sor_events_from_json(manifest["sor_events"]);
    } else {
        ep.meta.duration = std::max(ep.interrogator.t.back(), ep.scale.t.back());
    }
    return ep;
}

void write_predictions(std::span<const double> times, std::span<const double> real,
                       std::span<const double> pred, const fs::path& path) {
    if (times.size() != real.size() || times.size() != pred.size())
        throw Error(ErrorCode::LengthMismatch, "write_predictions: input lengths differ");
    std::string out = "time,real,pred\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        out += fmt_double(times[i]) + "," + fmt_double(real[i]) + "," + fmt_double(pred[i]) + "\n";
    atomic_write(path, out);
}

void write_timeseries(const TimeSeries& s, const std::string& header, const fs::path& path) {
    atomic_write(path, series_csv(s, header));
}

void write_dataset(const std::vector<sim::GeneratedEpisode>& episodes, const sim::SimConfig& cfg,
                   const FbgPhysics& phys, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());

    const std::string cfg_json = config_json(cfg, phys);
    char hash[24];
    std::snprintf(hash, sizeof(hash), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg_json)));

    json eps = json::array();
    for (const auto& gen : episodes) {
        char name[16];
        std::snprintf(name, sizeof(name), "ep%03d", gen.episode.meta.index);
        write_episode(gen.episode, dir / name, gen.pokes, hash);
        eps.push_back({{"dir", name},
                       {"seed", gen.episode_seed},
                       {"sor_events", sor_events_json(gen.episode.sor_events)}});
    }

    json manifest{{"format", "cfs-dataset-1"},
                  {"config", json::parse(cfg_json)},
                  {"config_hash", hash},
                  {"accumulates_sor", true},
                  {"episodes", eps}};
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<Episode> read_dataset(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath))
        throw Error(ErrorCode::MissingFile, "missing dataset manifest " + mpath.string());
    std::ifstream is(mpath);
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, mpath.string() + ": " + e.what());
    }
    std::vector<Episode> out;
    for (const auto& entry : manifest.at("episodes"))
        out.push_back(read_episode(dir / entry.at("dir").get<std::string>()));
    return out;
}

}  // namespace cfs::io

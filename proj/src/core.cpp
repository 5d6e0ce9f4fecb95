#include "cfs/core.hpp"

#include <cmath>
#include <cstdio>

namespace cfs {

namespace {

std::string violation(const char* rule, std::size_t index) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s @%zu", rule, index);
    return buf;
}

}  // namespace

std::vector<std::string> validate_series(const TimeSeries& series) {
    std::vector<std::string> out;

    if (series.channels == 0) {
        if (!series.values.empty()) out.push_back(violation("values without channels", 0));
    } else if (series.values.size() != series.t.size() * series.channels) {
        // Report the first sample whose row would be incomplete.
        out.push_back(violation("row/timestamp count mismatch",
                                series.values.size() / series.channels));
    }

    for (std::size_t i = 0; i < series.t.size(); ++i) {
        if (!std::isfinite(series.t[i])) {
            out.push_back(violation("non-finite timestamp", i));
            break;
        }
    }
    for (std::size_t i = 1; i < series.t.size(); ++i) {
        if (!(series.t[i] > series.t[i - 1])) {
            out.push_back(violation("non-increasing timestamp", i));
            break;
        }
    }
    if (series.channels > 0) {
        const std::size_t n = series.values.size() / series.channels;
        for (std::size_t i = 0; i < n; ++i) {
            bool bad = false;
            for (std::size_t c = 0; c < series.channels && !bad; ++c)
                bad = !std::isfinite(series.values[i * series.channels + c]);
            if (bad) {
                out.push_back(violation("non-finite value", i));
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> validate_episode(const Episode& ep) {
    std::vector<std::string> out;
    for (auto& v : validate_series(ep.interrogator)) out.push_back("interrogator: " + v);
    for (auto& v : validate_series(ep.scale)) out.push_back("scale: " + v);
    if (ep.interrogator.channels != 3)
        out.push_back("interrogator: channel count != 3 @0");
    if (ep.scale.channels != 1)
        out.push_back("scale: channel count != 1 @0");

    auto check_span = [&](const TimeSeries& s, const char* name) {
        if (s.empty()) {
            out.push_back(std::string(name) + ": empty series @0");
            return;
        }
        if (s.t.front() < 0.0 || s.t.back() > ep.meta.duration + 1e-9)
            out.push_back(std::string(name) + ": samples outside [0,duration] @0");
    };
    check_span(ep.interrogator, "interrogator");
    check_span(ep.scale, "scale");
    return out;
}

}  // namespace cfs

#include "cfs/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace cfs::prep {

namespace {

// Tridiagonal solve with partial pivoting (LAPACK dgtsv scheme); pivoting
// matters because the reduced not-a-knot rows can have zero diagonals.
void solve_tridiag(std::vector<double>& dl, std::vector<double>& d, std::vector<double>& du,
                   std::vector<double>& b) {
    const std::size_t n = d.size();
    std::vector<double> du2(n, 0.0);  // fill-in second superdiagonal
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i + 1])) {
            if (d[i] != 0.0) {
                const double fact = dl[i + 1] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            }
        } else {
            const double fact = d[i] / dl[i + 1];
            d[i] = dl[i + 1];
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= fact * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t ii = n; ii-- > 2;) {
        const std::size_t i = ii - 2;
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

}  // namespace

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
    const std::size_t n = x_.size();
    if (n < 4) throw Error(ErrorCode::TooFewSamples, "cubic spline needs >= 4 samples");
    if (y_.size() != n) throw Error(ErrorCode::ShapeMismatch, "spline x/y size mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw Error(ErrorCode::NonMonotonic, "spline abscissae must strictly increase");

    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    auto slope = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h[i]; };
    auto rhs_interior = [&](std::size_t i) { return 6.0 * (slope(i) - slope(i - 1)); };

    // Unknowns: second derivatives. Interior rows are the usual continuity
    // equations; the not-a-knot end rows (third-derivative continuity at the
    // first/last interior knot) are pre-reduced against their neighbouring
    // interior rows so the system stays tridiagonal.
    std::vector<double> dl(n, 0.0), d(n, 0.0), du(n, 0.0), b(n, 0.0);
    d[0] = h[0] - h[1];
    du[0] = 2.0 * h[0] + h[1];
    b[0] = h[0] * rhs_interior(1) / (h[0] + h[1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        dl[i] = h[i - 1];
        d[i] = 2.0 * (h[i - 1] + h[i]);
        du[i] = h[i];
        b[i] = rhs_interior(i);
    }
    const double ha = h[n - 3], hb = h[n - 2];
    dl[n - 1] = ha + 2.0 * hb;
    d[n - 1] = hb - ha;
    b[n - 1] = hb * rhs_interior(n - 2) / (ha + hb);

    solve_tridiag(dl, d, du, b);
    m_ = std::move(b);
}

double CubicSpline::operator()(double t) const {
    const std::size_t n = x_.size();
    t = std::clamp(t, x_.front(), x_.back());
    std::size_t i = static_cast<std::size_t>(
        std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
    const double h = x_[i + 1] - x_[i];
    const double a = x_[i + 1] - t;
    const double c = t - x_[i];
    return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * c * c * c / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * a + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * c;
}

TimeSeries resample_cubic(const TimeSeries& series, double target_hz) {
    if (series.size() < 4)
        throw Error(ErrorCode::TooFewSamples, "resample_cubic: need >= 4 samples");
    for (std::size_t i = 1; i < series.size(); ++i)
        if (!(series.t[i] > series.t[i - 1]))
            throw Error(ErrorCode::NonMonotonic, "resample_cubic: timestamps must increase");
    if (!(target_hz > 0.0))
        throw Error(ErrorCode::InvalidSpec, "resample_cubic: target_hz must be positive");

    const double t0 = series.t.front(), t1 = series.t.back();
    // The grid is t = 0, 1/hz, 2/hz, ... restricted to the covered span.
    const long long k0 =
        std::max<long long>(0, static_cast<long long>(std::ceil(t0 * target_hz - 1e-9)));
    const long long k1 = static_cast<long long>(std::floor(t1 * target_hz + 1e-9));

    TimeSeries out;
    out.channels = series.channels;
    if (k1 < k0) return out;
    const std::size_t count = static_cast<std::size_t>(k1 - k0 + 1);
    out.t.resize(count);
    out.values.resize(count * out.channels);
    for (std::size_t j = 0; j < count; ++j)
        out.t[j] = static_cast<double>(k0 + static_cast<long long>(j)) / target_hz;

    std::vector<double> col(series.size());
    for (std::size_t c = 0; c < series.channels; ++c) {
        for (std::size_t i = 0; i < series.size(); ++i) col[i] = series.value(i, c);
        CubicSpline spline(series.t, col);
        for (std::size_t j = 0; j < count; ++j) out.value(j, c) = spline(out.t[j]);
    }
    return out;
}

TimeSeries compute_shift(const TimeSeries& series, std::span<const double> reference) {
    if (series.channels != reference.size())
        throw Error(ErrorCode::ChannelMismatch, "compute_shift: channel count mismatch");
    TimeSeries out = series;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t c = 0; c < out.channels; ++c) out.value(i, c) -= reference[c];
    return out;
}

std::vector<double> estimate_reference(const TimeSeries& series, double lead_s) {
    if (series.empty()) throw Error(ErrorCode::EmptyInput, "estimate_reference: empty series");
    const double cutoff = series.t.front() + lead_s;
    std::size_t n = 0;
    while (n < series.size() && series.t[n] <= cutoff) ++n;
    if (n == 0) n = 1;

    std::vector<double> ref(series.channels);
    std::vector<double> col(n);
    for (std::size_t c = 0; c < series.channels; ++c) {
        for (std::size_t i = 0; i < n; ++i) col[i] = series.value(i, c);
        std::nth_element(col.begin(), col.begin() + n / 2, col.end());
        double med = col[n / 2];
        if (n % 2 == 0) {
            std::nth_element(col.begin(), col.begin() + n / 2 - 1, col.end());
            med = 0.5 * (med + col[n / 2 - 1]);
        }
        ref[c] = med;
    }
    return ref;
}

AlignedPair align(const TimeSeries& interrogator, const TimeSeries& scale,
                  std::span<const double> reference) {
    if (interrogator.empty() || scale.empty())
        throw Error(ErrorCode::EmptyInput, "align: empty input series");
    const double a = std::max(interrogator.t.front(), scale.t.front());
    const double b = std::min(interrogator.t.back(), scale.t.back());
    if (!(b > a)) throw Error(ErrorCode::NoOverlap, "align: input spans do not overlap");

    auto rebase = [a](const TimeSeries& s) {
        TimeSeries r = s;
        for (double& t : r.t) t -= a;
        return r;
    };

    TimeSeries fast = resample_cubic(rebase(interrogator), 1000.0);
    TimeSeries slow = resample_cubic(rebase(scale), 10.0);

    AlignedPair pair;
    pair.reference.assign(reference.begin(), reference.end());
    pair.shifts = compute_shift(fast, reference);

    // Labels start at t = 0.1 so each one closes the window preceding it.
    const std::size_t n_labels = slow.size() > 0 ? slow.size() - 1 : 0;
    const std::size_t n_win = std::min<std::size_t>(n_labels, pair.shifts.size() / 100);
    if (n_win == 0) throw Error(ErrorCode::NoOverlap, "align: overlap shorter than one window");

    pair.shifts.t.resize(n_win * 100);
    pair.shifts.values.resize(n_win * 100 * pair.shifts.channels);
    pair.forces.channels = 1;
    pair.forces.t.assign(slow.t.begin() + 1, slow.t.begin() + 1 + static_cast<long>(n_win));
    pair.forces.values.assign(slow.values.begin() + 1,
                              slow.values.begin() + 1 + static_cast<long>(n_win));
    return pair;
}

std::vector<WindowedExample> window(const AlignedPair& pair) {
    const std::size_t n_win = pair.forces.size();
    if (pair.shifts.size() != n_win * 100 || pair.shifts.channels != 3)
        throw Error(ErrorCode::ShapeMismatch, "window: aligned pair shapes inconsistent");

    std::vector<WindowedExample> out(n_win);
    for (std::size_t t = 0; t < n_win; ++t) {
        auto& ex = out[t];
        ex.t = static_cast<int>(t);
        ex.y = pair.forces.value(t, 0);
        ex.x.assign(pair.shifts.values.begin() + static_cast<long>(t * 300),
                    pair.shifts.values.begin() + static_cast<long>((t + 1) * 300));
    }
    return out;
}

WindowedEpisode process_episode(const Episode& ep, double reference_lead_s) {
    WindowedEpisode we;
    we.episode_id = ep.meta.index;
    const auto reference = estimate_reference(ep.interrogator, reference_lead_s);
    const AlignedPair pair = align(ep.interrogator, ep.scale, reference);
    we.examples = window(pair);
    return we;
}

}  // namespace cfs::prep

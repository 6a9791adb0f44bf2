#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dblsim/text.hpp"

namespace dblsim {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Uniformly sampled time series: sample i sits at t0 + i*dt.
struct Waveform {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> samples;
};

struct GoertzelResult {
    double magnitude = 0.0;  // amplitude of A*sin(2*pi*f*t) recovered as A
    double phase = 0.0;      // argument of the complex correlation
};

/// Single-bin DFT via the Goertzel recurrence. The window must cover an
/// integer number of periods of f within 0.1% (no windowing, no leakage),
/// and f must lie strictly below Nyquist.
inline GoertzelResult goertzel(const Waveform& w, double f) {
    const size_t n = w.samples.size();
    if (n < 2 || !(w.dt > 0.0))
        throw std::invalid_argument("goertzel: waveform needs dt > 0 and >= 2 samples");
    if (!(f > 0.0)) throw std::invalid_argument("goertzel: frequency must be positive");
    const double nyquist = 0.5 / w.dt;
    if (f >= nyquist)
        throw std::invalid_argument("goertzel: " + format_double(f) +
                                    " Hz is at or above Nyquist (" +
                                    format_double(nyquist) + " Hz)");
    const double cycles = f * static_cast<double>(n) * w.dt;
    const double k = std::round(cycles);
    if (k < 1.0 || std::fabs(cycles - k) > 1e-3 * k)
        throw std::invalid_argument(
            "goertzel: window covers " + format_double(cycles) + " cycles of " +
            format_double(f) + " Hz; need an integer count within 0.1%");

    const double omega = 2.0 * kPi * f * w.dt;
    const double coeff = 2.0 * std::cos(omega);
    double s1 = 0.0, s2 = 0.0;
    for (double x : w.samples) {
        const double s0 = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    const double re = s1 - s2 * std::cos(omega);
    const double im = s2 * std::sin(omega);
    GoertzelResult r;
    r.magnitude = 2.0 * std::hypot(re, im) / static_cast<double>(n);
    r.phase = std::atan2(im, re);
    return r;
}

/// DC term, harmonic magnitudes at k*f0, THD and the 2f0/f0 ratio.
struct HarmonicReport {
    double f0 = 0.0;
    double dc = 0.0;
    std::vector<double> mags;  // mags[k-1] is the magnitude at k*f0
    double thd = 0.0;          // residual harmonics relative to the largest AC component
    double doubling_ratio = 0.0;

    double mag(int k) const { return mags.at(static_cast<size_t>(k) - 1); }
};

inline HarmonicReport harmonic_report(const Waveform& w, double f0, int n) {
    if (n < 1) throw std::invalid_argument("harmonic_report: need n >= 1 harmonics");
    HarmonicReport rep;
    rep.f0 = f0;
    rep.dc = std::accumulate(w.samples.begin(), w.samples.end(), 0.0) /
             static_cast<double>(w.samples.size());
    rep.mags.reserve(static_cast<size_t>(n));
    for (int k = 1; k <= n; ++k)
        rep.mags.push_back(goertzel(w, static_cast<double>(k) * f0).magnitude);

    size_t kmax = 0;
    for (size_t i = 1; i < rep.mags.size(); ++i)
        if (rep.mags[i] > rep.mags[kmax]) kmax = i;
    if (rep.mags[kmax] > 0.0) {
        double rest = 0.0;
        for (size_t i = 0; i < rep.mags.size(); ++i)
            if (i != kmax) rest += rep.mags[i] * rep.mags[i];
        rep.thd = std::sqrt(rest) / rep.mags[kmax];
    }
    const double fundamental = std::max(rep.mags[0], 1e-15);
    rep.doubling_ratio = (n >= 2 ? rep.mags[1] : 0.0) / fundamental;
    return rep;
}

/// Drops trailing samples so the window spans a whole number of f0 cycles.
/// Handy for feeding transient output (which includes both endpoints) into
/// goertzel without leakage.
inline Waveform trim_to_cycles(const Waveform& w, double f0) {
    if (!(f0 > 0.0) || !(w.dt > 0.0)) return w;
    const double cycles = f0 * static_cast<double>(w.samples.size()) * w.dt;
    const double k = std::floor(cycles + 1e-9);
    if (k < 1.0) return w;
    const auto n = static_cast<size_t>(std::llround(k / (f0 * w.dt)));
    if (n < 2 || n > w.samples.size()) return w;
    Waveform out;
    out.t0 = w.t0;
    out.dt = w.dt;
    out.samples.assign(w.samples.begin(), w.samples.begin() + n);
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form behavioral chain
// ---------------------------------------------------------------------------

/// Shared parameters of the behavioral stages. k is the device
/// transconductance common to the squaring pair and the rooter, vt the
/// (NMOS) threshold, vss/vdd the rails.
struct ChainParams {
    double k = 0.0;
    double vt = 0.0;
    double vss = 0.0;
    double vdd = 0.0;
    double beta_ratio = 1.0;  // beta_n / beta_p
};

/// Convention used by the square-rooter algebra.
///
/// KTriode writes the non-saturation drain current as
/// K[(vgs-vt)*v - v^2/2], which yields the rooter constant sqrt(3)-1
/// (~0.732). Consistent uses the boundary-continuous form
/// K[2*(vgs-vt)*v - v^2], matching the device model in this library, and
/// yields sqrt(2)-1 (~0.414).
enum class SqrtMode { KTriode, Consistent };

inline constexpr double kSqrtConstKTriode = 0.73205080756887729;    // sqrt(3)-1
inline constexpr double kSqrtConstConsistent = 0.41421356237309505; // sqrt(2)-1

inline constexpr double sqrt_constant(SqrtMode mode) {
    return mode == SqrtMode::KTriode ? kSqrtConstKTriode : kSqrtConstConsistent;
}

/// End-to-end doubler gain: sqrt-stage constant times sqrt(2).
inline constexpr double doubler_gain(SqrtMode mode) {
    return mode == SqrtMode::KTriode ? 1.0352761804100830
                                     : 0.58578643762690495;
}

/// Ideal inverting stage. The matched case (beta_ratio == 1) returns
/// exactly -vin; otherwise a threshold-shifted inversion
/// -(vdd - vt + r*vin)/(1 + r) with r = sqrt(beta_ratio).
inline double behav_inverter(double vin, const ChainParams& p) {
    if (p.beta_ratio == 1.0) return -vin;
    const double r = std::sqrt(p.beta_ratio);
    return -((p.vdd - p.vt + r * vin) / (1.0 + r));
}

namespace detail {
inline void check_diffamp_domain(double vin, const ChainParams& p) {
    if (!(vin - p.vss - p.vt > 0.0) || !(-vin - p.vss - p.vt > 0.0))
        throw std::domain_error(
            "differential pair leaves saturation at vin = " + format_double(vin) +
            " (need |vin| < " + format_double(-p.vss - p.vt) + ")");
}
}  // namespace detail

/// Load current of the squaring pair: 2k*(vin^2 + (vss+vt)^2). Both
/// devices must stay saturated, i.e. |vin| < -vss - vt.
inline double behav_diffamp_current(double vin, const ChainParams& p) {
    detail::check_diffamp_domain(vin, p);
    const double bias = p.vss + p.vt;
    return 2.0 * p.k * (vin * vin + bias * bias);
}

/// Squaring-pair current with the constant 2k*(vss+vt)^2 term removed:
/// exactly 2k*vin^2 on the same domain.
inline double behav_diffamp_current_dc_removed(double vin, const ChainParams& p) {
    detail::check_diffamp_domain(vin, p);
    return 2.0 * p.k * (vin * vin);
}

/// Square-rooter transfer: c * sqrt(i/k) with c per SqrtMode.
inline double behav_sqrt(double i, double k, SqrtMode mode) {
    if (i < 0.0)
        throw std::domain_error("square-rooter input current is negative: " +
                                format_double(i));
    if (!(k > 0.0)) throw std::invalid_argument("behav_sqrt: k must be positive");
    return sqrt_constant(mode) * std::sqrt(i / k);
}

/// Inverter -> squaring pair (DC term removed) -> square-rooter.
/// Evaluates to doubler_gain(mode) * |vin|.
inline double behav_doubler(double vin, const ChainParams& p, SqrtMode mode) {
    const double inverted = behav_inverter(vin, p);
    const double i = behav_diffamp_current_dc_removed(inverted, p);
    return behav_sqrt(i, p.k, mode);
}

/// Truncated series route to the doubled output: evaluates
/// gain * vm * S(x) with x = -cos^2(2*pi*f0*t) and S the power-series
/// prefix 1 + x/2 + x^2/8 cut after `terms` terms. Quantifies how far the
/// series route drifts from the exact gain*vm*|sin| form.
inline double behav_series_approx(double vm, double t, double f0, int terms) {
    if (terms < 1 || terms > 3)
        throw std::invalid_argument("behav_series_approx: terms must be 1, 2 or 3");
    const double c = std::cos(2.0 * kPi * f0 * t);
    const double x = -(c * c);
    double s = 1.0;
    if (terms >= 2) s += 0.5 * x;
    if (terms >= 3) s += 0.125 * x * x;
    return doubler_gain(SqrtMode::KTriode) * vm * s;
}

}  // namespace dblsim

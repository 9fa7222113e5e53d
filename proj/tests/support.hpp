// Shared helpers for the test suites: an independent demodulation oracle,
// walk builders, slip counting, and brute-force search oracles. Everything
// here deliberately avoids the library's own tracking/solver code paths so
// it can serve as a second route for checking them.
#ifndef SONOLOC_TESTS_SUPPORT_HPP
#define SONOLOC_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sonoloc/channel.hpp"
#include "sonoloc/stream.hpp"
#include "sonoloc/trajectory.hpp"

namespace testsupport {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Baseband phase of `stream` around carrier f, measured by complex mixing
/// and a centered FIR low-pass, then unwrapped. Valid away from the stream
/// edges (half the filter length).
inline std::vector<double> demod_phase(const sonoloc::SampleStream& stream, double f,
                                       double cutoff_hz = 2000.0, int taps = 129) {
    const int n = static_cast<int>(stream.samples.size());
    const int half = taps / 2;
    std::vector<std::complex<double>> mixed(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = stream.time_of(static_cast<std::size_t>(i));
        const double ang = kTwoPi * f * t;
        mixed[static_cast<std::size_t>(i)] =
            stream.samples[static_cast<std::size_t>(i)] *
            std::complex<double>(std::cos(ang), -std::sin(ang));
    }
    // Hamming-windowed low-pass.
    std::vector<double> h(static_cast<std::size_t>(taps));
    const double fc = cutoff_hz / stream.sample_rate;
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
        const double m = k - half;
        const double sinc =
            m == 0 ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (std::numbers::pi * m);
        const double win = 0.54 - 0.46 * std::cos(kTwoPi * k / (taps - 1));
        h[static_cast<std::size_t>(k)] = sinc * win;
        sum += h[static_cast<std::size_t>(k)];
    }
    for (double& c : h) c /= sum;

    std::vector<double> phase(static_cast<std::size_t>(n), 0.0);
    double prev = 0.0;
    double offset = 0.0;
    for (int i = 0; i < n; ++i) {
        std::complex<double> acc{0.0, 0.0};
        for (int k = 0; k < taps; ++k) {
            const int j = i + half - k;
            if (j < 0 || j >= n) continue;
            acc += mixed[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(k)];
        }
        double raw = std::arg(acc);
        if (i > 0) {
            while (raw + offset - prev > std::numbers::pi) offset -= kTwoPi;
            while (raw + offset - prev < -std::numbers::pi) offset += kTwoPi;
        }
        prev = raw + offset;
        phase[static_cast<std::size_t>(i)] = prev;
    }
    return phase;
}

/// Straight walk along +X starting at `start` after `t0`, one step per
/// `interval`.
inline sonoloc::StepTrace straight_walk(double t0, int steps, double interval,
                                        double stride,
                                        std::array<double, 2> start = {0.0, 0.0}) {
    sonoloc::StepTrace trace;
    trace.stride = stride;
    trace.start_point = start;
    for (int i = 0; i <= steps; ++i)
        trace.step_times.push_back(t0 + interval * static_cast<double>(i));
    return trace;
}

/// Forward/backward shuttle: `legs` legs of `leg_len`, reversing direction
/// between legs (a pi turn at each reversal).
inline sonoloc::StepTrace shuttle_walk(double t0, int legs, double leg_len,
                                       double interval, double stride) {
    sonoloc::StepTrace trace;
    trace.stride = stride;
    const int steps_per_leg = static_cast<int>(std::lround(leg_len / stride));
    double t = t0;
    trace.step_times.push_back(t);
    for (int leg = 0; leg < legs; ++leg) {
        if (leg > 0)
            trace.turns.push_back({trace.step_times.size() - 1, std::numbers::pi});
        for (int i = 0; i < steps_per_leg; ++i) {
            t += interval;
            trace.step_times.push_back(t);
        }
    }
    return trace;
}

/// Count debounced 2*pi level changes of (tracked - truth) phase.
/// `truth_phi` must be sampled on the same grid as `phi`.
inline int count_slips(const std::vector<double>& phi, const std::vector<double>& truth_phi,
                       std::size_t from, double sample_rate, double hold_s = 0.05) {
    int level = 0;
    int slips = 0;
    std::size_t run = 0;
    const auto hold = static_cast<std::size_t>(hold_s * sample_rate);
    int cand = 0;
    for (std::size_t n = from; n < phi.size() && n < truth_phi.size(); ++n) {
        const double err = phi[n] - truth_phi[n];
        const int lvl = static_cast<int>(std::lround(err / kTwoPi));
        if (lvl != level) {
            if (lvl == cand) {
                if (++run >= hold) {
                    level = lvl;
                    ++slips;
                    run = 0;
                }
            } else {
                cand = lvl;
                run = 1;
            }
        } else {
            run = 0;
        }
    }
    return slips;
}

/// Geometry-based truth phase for a scenario on a stream's sample grid,
/// anchored so truth[anchor] == tracked[anchor].
inline std::vector<double> truth_phase(const sonoloc::Scenario& scenario, double f,
                                       double v_a, const sonoloc::SampleStream& like,
                                       const std::vector<double>& tracked,
                                       std::size_t anchor) {
    std::vector<double> truth(tracked.size());
    const double d0 = sonoloc::distance_clamped(scenario, like.time_of(anchor));
    for (std::size_t n = 0; n < truth.size(); ++n) {
        const double d = sonoloc::distance_clamped(scenario, like.time_of(n));
        truth[n] = tracked[anchor] + kTwoPi * f * (d0 - d) / v_a;
    }
    return truth;
}

}  // namespace testsupport

#endif

#include "sonoloc/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTimeEps = 1e-9;
}  // namespace

void WaveformParams::validate() const {
    if (!(f >= 17000.0 && f <= 24000.0))
        throw InvalidParams("carrier frequency must be in [17000, 24000] Hz, got " +
                            std::to_string(f));
    if (!(sample_rate > 2.0 * f))
        throw InvalidParams("sample rate must exceed 2*f");
    if (!(Tp > 0.0 && T1 > 0.0 && T2 > 0.0 && T3 > 0.0))
        throw InvalidParams("all durations must be positive");
    if (std::abs(T1 - (T2 - 3.0 * T3)) > kTimeEps)
        throw InvalidParams("T1 must equal T2 - 3*T3");
    if (!(T3 > Tp))
        throw InvalidParams("T3 must exceed Tp (adjacent pulses would overlap)");
    if (!(v_a > 0.0))
        throw InvalidParams("speed of sound must be positive");
    if (!(v_a * T2 >= l_m))
        throw InvalidParams("v_a*T2 must be at least l_m (range would be ambiguous)");
}

PulseSchedule build_pulse_schedule(const WaveformParams& params, double duration) {
    params.validate();
    if (duration < 0.0) throw InvalidParams("duration must be non-negative");

    PulseSchedule schedule;
    schedule.cycle_period = params.T2;
    schedule.pulses_per_cycle = 3;
    for (long k = 0;; ++k) {
        const double base = static_cast<double>(k) * params.T2 + params.T1;
        if (base >= duration) break;
        for (int j = 0; j < 3; ++j) {
            const double tau = base + static_cast<double>(j) * params.T3;
            if (tau < duration) schedule.tau.push_back(tau);
        }
    }
    return schedule;
}

double pulse_phase_offset(const PulseSchedule& schedule, const WaveformParams& params,
                          double t) {
    // schedule.tau is sorted; find the last pulse starting at or before t.
    auto it = std::upper_bound(schedule.tau.begin(), schedule.tau.end(), t);
    if (it == schedule.tau.begin()) return 0.0;
    const double tau = *(it - 1);
    if (t > tau + params.Tp) return 0.0;
    return std::numbers::pi * std::sin(std::numbers::pi * (t - tau) / params.Tp);
}

SampleStream synthesize(const WaveformParams& params, const PulseSchedule& schedule,
                        double duration, double start_time) {
    params.validate();
    const std::size_t n_samples =
        static_cast<std::size_t>(std::max(0.0, duration) * params.sample_rate + 0.5);

    SampleStream out;
    out.sample_rate = params.sample_rate;
    out.start_time = start_time;
    out.samples.resize(n_samples);

    // Carrier phase accumulated modulo 2*pi so precision does not degrade
    // over long durations. Initial phase from f*start_time keeping only the
    // fractional turn count.
    const double step = kTwoPi * params.f / params.sample_rate;
    double phase = kTwoPi * std::fmod(params.f * start_time, 1.0);

    std::size_t pulse_idx = 0;  // first pulse that could still cover t
    const double Ts = params.Ts();
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double t = start_time + static_cast<double>(n) * Ts;
        while (pulse_idx < schedule.tau.size() &&
               schedule.tau[pulse_idx] + params.Tp < t)
            ++pulse_idx;
        double p = 0.0;
        if (pulse_idx < schedule.tau.size() && t >= schedule.tau[pulse_idx]) {
            p = std::numbers::pi *
                std::sin(std::numbers::pi * (t - schedule.tau[pulse_idx]) / params.Tp);
        }
        out.samples[n] = std::cos(phase + p);
        phase += step;
        if (phase >= kTwoPi) phase -= kTwoPi;
    }
    return out;
}

SampleStream mix(const std::vector<const SampleStream*>& streams) {
    SampleStream out;
    if (streams.empty()) return out;
    out.sample_rate = streams.front()->sample_rate;
    double t0 = streams.front()->start_time;
    double t1 = streams.front()->end_time();
    for (const SampleStream* s : streams) {
        t0 = std::min(t0, s->start_time);
        t1 = std::max(t1, s->end_time());
    }
    out.start_time = t0;
    out.samples.assign(static_cast<std::size_t>((t1 - t0) * out.sample_rate + 0.5), 0.0);
    for (const SampleStream* s : streams) {
        const std::ptrdiff_t off =
            static_cast<std::ptrdiff_t>(std::llround((s->start_time - t0) * out.sample_rate));
        for (std::size_t n = 0; n < s->samples.size(); ++n) {
            const std::size_t k = static_cast<std::size_t>(off) + n;
            if (k < out.samples.size()) out.samples[k] += s->samples[n];
        }
    }
    return out;
}

}  // namespace sonoloc

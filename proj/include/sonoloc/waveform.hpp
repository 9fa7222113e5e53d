#ifndef SONOLOC_WAVEFORM_HPP
#define SONOLOC_WAVEFORM_HPP

#include <cstddef>
#include <vector>

#include "sonoloc/stream.hpp"

namespace sonoloc {

/// Transmit-side constants: an inaudible carrier at `f` periodically
/// phase-modulated with short raised-sine pulses used for timing.
///
/// Each cycle of length `T2` starts with `T1` seconds of plain carrier,
/// followed by three pulses of duration `Tp` whose starts are `T3` apart.
struct WaveformParams {
    double f = 19000.0;          // carrier, Hz
    double sample_rate = 44100.0;
    double Tp = 0.007;           // pulse duration, s
    double T2 = 0.25;            // cycle period, s
    double T3 = 0.03;            // adjacent pulse spacing, s
    double T1 = 0.16;            // carrier-only lead-in per cycle, = T2 - 3*T3
    double v_a = 340.0;          // speed of sound, m/s
    double l_m = 85.0;           // maximum unambiguous distance, m

    double Ts() const { return 1.0 / sample_rate; }
    /// Pulse template length in samples (Tp/Ts, truncated).
    std::size_t pulse_samples() const {
        return static_cast<std::size_t>(Tp * sample_rate);
    }
    std::size_t cycle_samples() const {
        return static_cast<std::size_t>(T2 * sample_rate + 0.5);
    }

    /// Throws InvalidParams when any constraint is violated:
    /// 17000 <= f <= 24000, T1 == T2 - 3*T3, T3 > Tp, v_a*T2 >= l_m,
    /// sample_rate > 2*f, and all durations positive.
    void validate() const;
};

/// Start times of every pulse, ordered. Within cycle k the three pulses
/// start at k*T2+T1, k*T2+T1+T3, k*T2+T1+2*T3.
struct PulseSchedule {
    std::vector<double> tau;
    double cycle_period = 0.25;
    int pulses_per_cycle = 3;
};

/// All pulse start times in [0, duration). Deterministic.
PulseSchedule build_pulse_schedule(const WaveformParams& params, double duration);

/// Synthesize the transmitted signal over [start_time, start_time+duration):
/// sample n is cos(2*pi*f*t + p(t)) with t = start_time + n*Ts, where p(t)
/// is pi*sin(pi*(t-tau_i)/Tp) inside a pulse window and 0 elsewhere.
/// Unit amplitude; carrier phase is accumulated modulo 2*pi.
SampleStream synthesize(const WaveformParams& params, const PulseSchedule& schedule,
                        double duration, double start_time = 0.0);

/// Phase offset p(t) relative to the plain carrier (0 outside pulses).
double pulse_phase_offset(const PulseSchedule& schedule, const WaveformParams& params,
                          double t);

}  // namespace sonoloc

#endif

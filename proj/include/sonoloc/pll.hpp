#ifndef SONOLOC_PLL_HPP
#define SONOLOC_PLL_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "sonoloc/stream.hpp"
#include "sonoloc/trajectory.hpp"

namespace sonoloc {

/// Second-order (proportional-plus-integrator) phase locked loop settings.
/// k2 = 0 degrades the loop to first order. Defaults are the frozen result
/// of tuning against the simulation suite (see tools/pll_tune).
struct PllConfig {
    double k1 = 2.2e-3;              // proportional gain
    double k2 = 1.3e-6;              // integrator gain (0 = first order)
    double f = 19000.0;              // nominal carrier, Hz
    double Ts = 1.0 / 44100.0;       // sample period, s
    double lpf_cutoff = 2000.0;      // phase-detector low-pass, Hz
    double gamma3_max = 0.05;        // integrator clamp, rad/sample
    double lock_time_constant = 0.050;  // s, EMA for the lock metric
    double lock_threshold = 0.5;     // rad, above = loss of lock
    double freq_correction = 0.0;    // Hz, known transmitter offset to cancel
    double v_a = 340.0;              // m/s, for phase<->displacement
};

/// Loop state after n iterations. `phi` is the tracked phase relative to
/// the nominal carrier 2*pi*f*n*Ts (continuous, no wrapping); the full DDS
/// phase is carrier + phi.
struct PllState {
    double carrier = 0.0;    // 2*pi*f*n*Ts accumulated modulo 2*pi
    double phi = 0.0;        // tracked phase offset, rad
    double gamma1 = 0.0;     // last local-oscillator sample
    double gamma2 = 0.0;     // proportional branch, rad/sample
    double gamma3 = 0.0;     // integrator branch, rad/sample
    double lpf_state = 0.0;  // phase-detector low-pass memory
    double lock = 0.0;       // smoothed |phi_e|
};

/// Tracked carrier phase offset per sample (relative to the nominal
/// carrier; increases as the speaker gets closer) plus a lock-quality
/// metric. Continuous by construction: no 2*pi seams.
struct PhaseTrack {
    std::vector<double> phi;
    std::vector<double> lock;
    double sample_rate = 44100.0;
    double start_time = 0.0;

    double time_of(std::size_t n) const {
        return start_time + static_cast<double>(n) / sample_rate;
    }
    /// Phase at time t (nearest sample); throws OutOfRange outside the track.
    double phi_at(double t) const;
    double lock_at(double t) const;
};

/// One loop iteration: phase detector (multiply by gamma1, low-pass to get
/// phi_e), loop filter (gamma2 = k1*phi_e, gamma3 += k2*phi_e), and DDS
/// advance by 2*pi*f*Ts + gamma2 + gamma3. Returns the updated phase offset.
double pll_step(PllState& state, double sample, const PllConfig& config);

/// Track the whole stream. Input is expected to be band-passed and gain
/// normalized (the detector slope assumes near-unit amplitude).
PhaseTrack track(const SampleStream& stream, const PllConfig& config);

enum class Calibration { none, forward, backward };

/// Displacement for a phase change: v_a/(2*pi*f) * delta_phi, scaled by the
/// orientation calibration factor (1.22 forward, 1.69 backward).
double phase_to_displacement(double delta_phi, const PllConfig& config,
                             Calibration calibration = Calibration::none);

/// Per-step displacements d_i = l_i - l_{i+1} from the tracked phase at
/// step times (phase is sampled at the nearest track sample). Steps whose
/// endpoint lock metric exceeds the configured threshold are marked
/// invalid. Throws OutOfRange when a step lies outside the track.
DisplacementSeries displacements_at_steps(const PhaseTrack& track, const StepTrace& steps,
                                          const PllConfig& config,
                                          Calibration calibration = Calibration::none);

/// Transmitter clock offset (Hz) from the phase slope over a window during
/// which the receiver is known to be static. Throws NotConverged when the
/// loop was not locked across the window, OutOfRange for a bad window.
double estimate_freq_offset(const PhaseTrack& track, std::pair<double, double> static_window,
                            const PllConfig& config);

}  // namespace sonoloc

#endif

#ifndef SONOLOC_CHANNEL_HPP
#define SONOLOC_CHANNEL_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "sonoloc/stream.hpp"
#include "sonoloc/trajectory.hpp"
#include "sonoloc/waveform.hpp"

namespace sonoloc {

/// Speaker placement plus the walking trace, in the coordinate frame of the
/// first walking segment (walker starts at the origin heading +X). The
/// speaker sits at horizontal position (X, Y), height h above the receiver
/// plane.
struct Scenario {
    std::array<double, 3> speaker{0.0, 4.0, 0.3};  // X, Y, h
    StepTrace trajectory;
    std::uint64_t seed = 0;

    double speaker_height() const { return speaker[2]; }
    void validate() const;
};

struct EchoPath {
    double extra_delay = 0.0;  // s beyond the direct path
    double gain = 0.5;         // relative to the direct path
};

/// Propagation model. snr_db is measured within the receiver band-pass
/// window (`noise_bandwidth` around the carrier), not over the full Nyquist
/// band. amplitude_exponent = 0 disables distance attenuation. freq_offset
/// models the transmitter clock running at (f + freq_offset)/f of true
/// rate (its clock agrees with true time at t = 0).
struct ChannelModel {
    double snr_db = std::numeric_limits<double>::infinity();  // +inf = noiseless
    std::vector<EchoPath> echoes;
    double freq_offset = 0.0;        // Hz
    double amplitude_exponent = 1.0; // amplitude ~ 1/path_length^exponent
    double noise_bandwidth = 1000.0; // Hz, SNR reference width

    bool noiseless() const { return !(snr_db < std::numeric_limits<double>::infinity()); }
    void validate() const;
};

/// Slant speaker-receiver distance at time t. t must lie within the step
/// span [first step, last step]; throws OutOfRange otherwise.
double distance_profile(const Scenario& scenario, double t);

/// Same geometry but defined for all t: the receiver is stationary before
/// the first and after the last step. Used by the propagation loop and by
/// ground-truth exports.
double distance_clamped(const Scenario& scenario, double t);

/// Exact per-step displacements from geometry, d_i = l_i - l_{i+1}.
DisplacementSeries ideal_displacements(const Scenario& scenario);

/// Simulate reception of `tx` by the moving receiver: per-sample propagation
/// delay via fractional-delay interpolation, optional echoes, distance
/// attenuation, transmitter clock offset, and white Gaussian noise at the
/// configured in-band SNR. Output covers the same time window as tx (the
/// transmitter is silent outside its samples). Deterministic for a given
/// scenario seed.
SampleStream propagate(const SampleStream& tx, const Scenario& scenario,
                       const ChannelModel& model, const WaveformParams& params);

}  // namespace sonoloc

#endif

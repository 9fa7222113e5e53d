#ifndef SONOLOC_FRONTEND_HPP
#define SONOLOC_FRONTEND_HPP

#include <cstddef>
#include <vector>

#include "sonoloc/stream.hpp"

namespace sonoloc {

/// Linear-phase FIR band-pass used to isolate one speaker's carrier.
struct BpfSpec {
    double center = 19000.0;       // Hz
    double half_width = 500.0;     // Hz passband half-width
    double stop_attenuation = 40.0;  // dB required beyond 2*half_width
    std::size_t taps = 255;        // odd

    void validate(double sample_rate) const;  // throws InvalidSpec
};

/// FIR group delay in seconds; band_pass output is already time-aligned
/// (the delay is compensated internally), so this is informational.
double bpf_group_delay(const BpfSpec& spec, double sample_rate);

/// Windowed-sinc band-pass filter taps for the given rate.
std::vector<double> bpf_design(const BpfSpec& spec, double sample_rate);

/// Filter the stream; output keeps the input timestamps (group delay
/// compensated, edges zero-padded).
SampleStream band_pass(const SampleStream& stream, const BpfSpec& spec);

/// Streaming automatic gain control: normalizes the sliding-window RMS to
/// sin-wave unit amplitude (RMS 1/sqrt(2)), with slew-limited gain. When
/// the window RMS falls below the silence threshold the last gain is held
/// so dropouts do not blow up into noise.
class Agc {
public:
    struct Config {
        double window = 0.010;          // s
        double target_rms = 0.7071067811865476;
        double max_slew_db_per_ms = 3.0;
        double silence_rms = 1e-4;
    };

    Agc(Config config, double sample_rate);

    double process(double sample);
    void reset();
    double gain() const { return gain_; }

private:
    Config cfg_;
    double sample_rate_;
    std::vector<double> window_sq_;  // ring buffer of squared samples
    std::size_t pos_ = 0;
    std::size_t filled_ = 0;
    double sum_sq_ = 0.0;
    double gain_ = 1.0;
    double max_step_;  // per-sample gain ratio bound
};

/// Whole-stream convenience wrapper around Agc.
SampleStream agc(const SampleStream& stream, double window = 0.010);

}  // namespace sonoloc

#endif

#ifndef SONOLOC_STREAM_HPP
#define SONOLOC_STREAM_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace sonoloc {

/// Mono audio buffer. `start_time` is the absolute time of samples[0] so
/// that windows cut from a longer recording keep their timestamps.
struct SampleStream {
    std::vector<double> samples;
    double sample_rate = 44100.0;
    double start_time = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double dt() const { return 1.0 / sample_rate; }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
    double end_time() const { return start_time + duration(); }

    double time_of(std::size_t n) const {
        return start_time + static_cast<double>(n) / sample_rate;
    }
    /// Nearest sample index for time t (not range checked).
    std::ptrdiff_t index_of(double t) const {
        return static_cast<std::ptrdiff_t>(std::llround((t - start_time) * sample_rate));
    }

    double rms() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (double s : samples) acc += s * s;
        return std::sqrt(acc / static_cast<double>(samples.size()));
    }
};

/// Sample-wise sum of equal-rate streams; the result covers the union of
/// their time spans, missing samples treated as silence.
SampleStream mix(const std::vector<const SampleStream*>& streams);

}  // namespace sonoloc

#endif

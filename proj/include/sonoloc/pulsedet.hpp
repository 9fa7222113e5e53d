#ifndef SONOLOC_PULSEDET_HPP
#define SONOLOC_PULSEDET_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "sonoloc/pll.hpp"
#include "sonoloc/stream.hpp"
#include "sonoloc/trajectory.hpp"
#include "sonoloc/waveform.hpp"

namespace sonoloc {

enum class ScoreLevel { raw, m1, m2, m3 };

/// Pulse-likelihood score per sample offset. Levels: raw matched score m,
/// the shifted sums m1 (lag T3) and m2 (lag T2), and the static fold m3
/// (indexed by absolute time modulo T2).
struct ScoreSeries {
    std::vector<double> m;
    ScoreLevel level = ScoreLevel::raw;
    double sample_rate = 44100.0;
    double start_time = 0.0;

    double time_of(std::size_t k) const {
        return start_time + static_cast<double>(k) / sample_rate;
    }
};

/// Correlation of the received samples against the expected pulse template
/// cos(2*pi*f*t + phi_r + pi*sin(pi*(t - k*Ts)/Tp)) over a Tp window, for
/// every start offset k. phi_r is the loop-locked phase just before the
/// window. Offsets whose window would run past the stream score zero.
ScoreSeries matched_score(const SampleStream& stream, double phi_r,
                          const WaveformParams& params);

/// Same correlation but with the template phase re-read from the phase
/// track at every offset, which keeps the template coherent while the
/// receiver moves. Scores offsets [first, last); last = 0 means the whole
/// stream.
ScoreSeries matched_score_tracked(const SampleStream& stream, const PhaseTrack& track,
                                  const WaveformParams& params, std::size_t first = 0,
                                  std::size_t last = 0);

/// Shifted three-way sum: level m1 adds lags of +-T3 to the raw score,
/// level m2 adds lags of +-T2 to an m1 series. Edges are zero-padded.
/// Throws WrongLevel for any other input/output combination.
ScoreSeries aggregate(const ScoreSeries& score, const WaveformParams& params,
                      ScoreLevel level);

/// Fold a raw score modulo the cycle period and sum across n_cycles,
/// starting at the fold grid aligned with absolute time 0. All propagation
/// paths of a static receiver then pile up inside one period.
ScoreSeries static_accumulate(const ScoreSeries& score, const WaveformParams& params,
                              std::size_t n_cycles);

struct ThresholdPolicy {
    double sigma_mult = 4.0;        // peak must exceed mean + sigma_mult*std
    std::size_t max_candidates = 8; // per epoch
    double min_separation = 0.003;  // s between candidate peaks
};

/// Detected arrival times. One entry of `arrivals` per epoch that produced
/// a detection (epoch index recorded alongside); `candidates` keeps every
/// above-threshold local maximum for multipath handling.
struct PulseArrivals {
    std::vector<double> arrivals;
    std::vector<double> peak_scores;
    std::vector<std::size_t> epoch_of;
    std::vector<std::vector<double>> candidates;
    std::vector<std::vector<double>> candidate_scores;
};

/// Peak picking per cycle epoch with a mean + k*std threshold computed
/// within each epoch. Throws NoDetection when no epoch has a peak above
/// threshold (NLoS / out of range).
PulseArrivals detect_pulses(const ScoreSeries& score, const WaveformParams& params,
                            const ThresholdPolicy& policy = {});

/// Pick the candidate pair across two stationary endpoints whose
/// time-of-flight difference best matches the loop-tracked displacement d
/// (walked between the endpoints). Ties break toward the earliest arrival
/// (the direct path comes first). Throws EmptyCandidates.
std::pair<double, double> resolve_multipath(const std::vector<double>& cands_a,
                                            const std::vector<double>& cands_b, double d,
                                            const WaveformParams& params);

enum class DetectorMode { moving, stationary };

/// m2 aggregation while walking; the static fold once the step counter has
/// been quiet for `quiet_time`.
DetectorMode detector_mode(const StepTrace& steps, double t, double quiet_time = 2.0);

}  // namespace sonoloc

#endif

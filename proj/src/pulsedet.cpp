#include "sonoloc/pulsedet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Pulse-shape kernels cos(b_i), sin(b_i) with b_i = pi*sin(pi*i*Ts/Tp).
struct PulseKernel {
    std::vector<double> cb, sb;
    explicit PulseKernel(const WaveformParams& params) {
        const std::size_t len = params.pulse_samples();
        cb.resize(len);
        sb.resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            const double b = std::numbers::pi *
                             std::sin(std::numbers::pi * static_cast<double>(i) *
                                      params.Ts() / params.Tp);
            cb[i] = std::cos(b);
            sb[i] = std::sin(b);
        }
    }
};

// r[j]*cos(theta_j) and r[j]*sin(theta_j) with theta the nominal carrier
// phase at each stream sample.
void carrier_products(const SampleStream& stream, const WaveformParams& params,
                      std::vector<double>& rc, std::vector<double>& rs) {
    const std::size_t n = stream.samples.size();
    rc.resize(n);
    rs.resize(n);
    const double step = kTwoPi * params.f / stream.sample_rate;
    double phase = kTwoPi * std::fmod(params.f * stream.start_time, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        rc[j] = stream.samples[j] * std::cos(phase);
        rs[j] = stream.samples[j] * std::sin(phase);
        phase += step;
        if (phase >= kTwoPi) phase -= kTwoPi;
    }
}

}  // namespace

ScoreSeries matched_score(const SampleStream& stream, double phi_r,
                          const WaveformParams& params) {
    params.validate();
    const PulseKernel kernel(params);
    const std::size_t L = kernel.cb.size();
    const std::size_t n = stream.samples.size();

    ScoreSeries out;
    out.level = ScoreLevel::raw;
    out.sample_rate = stream.sample_rate;
    out.start_time = stream.start_time;
    out.m.assign(n, 0.0);
    if (n < L) return out;

    // Template expanded about the carrier: with rc/rs the per-sample carrier
    // products, score(k) = cos(phi_r)*A(k) - sin(phi_r)*B(k) where A and B
    // correlate rc/rs with the pulse-shape kernels.
    std::vector<double> rc, rs;
    carrier_products(stream, params, rc, rs);
    const double cr = std::cos(phi_r);
    const double sr = std::sin(phi_r);
    for (std::size_t k = 0; k + L <= n; ++k) {
        double a = 0.0, b = 0.0;
        const double* prc = rc.data() + k;
        const double* prs = rs.data() + k;
        for (std::size_t i = 0; i < L; ++i) {
            a += prc[i] * kernel.cb[i] - prs[i] * kernel.sb[i];
            b += prs[i] * kernel.cb[i] + prc[i] * kernel.sb[i];
        }
        out.m[k] = cr * a - sr * b;
    }
    return out;
}

ScoreSeries matched_score_tracked(const SampleStream& stream, const PhaseTrack& track,
                                  const WaveformParams& params, std::size_t first,
                                  std::size_t last) {
    params.validate();
    if (track.phi.size() != stream.samples.size())
        throw InvalidParams("phase track does not match the stream");
    const PulseKernel kernel(params);
    const std::size_t L = kernel.cb.size();
    const std::size_t n = stream.samples.size();
    if (last == 0 || last > n) last = n;

    ScoreSeries out;
    out.level = ScoreLevel::raw;
    out.sample_rate = stream.sample_rate;
    out.start_time = stream.start_time;
    out.m.assign(n, 0.0);
    if (n < L) return out;

    std::vector<double> rc, rs;
    carrier_products(stream, params, rc, rs);
    for (std::size_t k = first; k < last && k + L <= n; ++k) {
        double a = 0.0, b = 0.0;
        const double* prc = rc.data() + k;
        const double* prs = rs.data() + k;
        for (std::size_t i = 0; i < L; ++i) {
            a += prc[i] * kernel.cb[i] - prs[i] * kernel.sb[i];
            b += prs[i] * kernel.cb[i] + prc[i] * kernel.sb[i];
        }
        const double phi_r = track.phi[k];
        out.m[k] = std::cos(phi_r) * a - std::sin(phi_r) * b;
    }
    return out;
}

ScoreSeries aggregate(const ScoreSeries& score, const WaveformParams& params,
                      ScoreLevel level) {
    params.validate();
    std::size_t lag = 0;
    if (level == ScoreLevel::m1) {
        if (score.level != ScoreLevel::raw)
            throw WrongLevel("m1 aggregation expects a raw score");
        lag = static_cast<std::size_t>(params.T3 * score.sample_rate + 0.5);
    } else if (level == ScoreLevel::m2) {
        if (score.level != ScoreLevel::m1)
            throw WrongLevel("m2 aggregation expects an m1 score");
        lag = static_cast<std::size_t>(params.T2 * score.sample_rate + 0.5);
    } else {
        throw WrongLevel("aggregate only produces m1 or m2");
    }

    ScoreSeries out;
    out.level = level;
    out.sample_rate = score.sample_rate;
    out.start_time = score.start_time;
    const std::size_t n = score.m.size();
    out.m.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = score.m[k];
        if (k >= lag) acc += score.m[k - lag];
        if (k + lag < n) acc += score.m[k + lag];
        out.m[k] = acc;
    }
    return out;
}

ScoreSeries static_accumulate(const ScoreSeries& score, const WaveformParams& params,
                              std::size_t n_cycles) {
    params.validate();
    if (score.level != ScoreLevel::raw)
        throw WrongLevel("static accumulation folds the raw score");
    const std::size_t period = params.cycle_samples();

    ScoreSeries out;
    out.level = ScoreLevel::m3;
    out.sample_rate = score.sample_rate;
    out.start_time = 0.0;  // index = absolute time modulo T2
    out.m.assign(period, 0.0);

    const auto g0 = static_cast<long long>(std::llround(score.start_time * score.sample_rate));
    const std::size_t limit = std::min(score.m.size(), n_cycles * period);
    for (std::size_t k = 0; k < limit; ++k) {
        const long long g = g0 + static_cast<long long>(k);
        const std::size_t bin =
            static_cast<std::size_t>(((g % static_cast<long long>(period)) +
                                      static_cast<long long>(period)) %
                                     static_cast<long long>(period));
        out.m[bin] += score.m[k];
    }
    return out;
}

PulseArrivals detect_pulses(const ScoreSeries& score, const WaveformParams& params,
                            const ThresholdPolicy& policy) {
    params.validate();
    const std::size_t period = params.cycle_samples();
    const std::size_t n = score.m.size();
    if (n == 0) throw NoDetection("empty score series");

    const auto min_sep = static_cast<std::size_t>(policy.min_separation * score.sample_rate);
    PulseArrivals out;

    const std::size_t n_epochs =
        score.level == ScoreLevel::m3 ? 1 : (n + period - 1) / period;
    for (std::size_t e = 0; e < n_epochs; ++e) {
        const std::size_t lo = score.level == ScoreLevel::m3 ? 0 : e * period;
        const std::size_t hi = score.level == ScoreLevel::m3 ? n : std::min(n, lo + period);
        if (hi - lo < 3) continue;

        double mean = 0.0;
        for (std::size_t k = lo; k < hi; ++k) mean += score.m[k];
        mean /= static_cast<double>(hi - lo);
        double var = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double dv = score.m[k] - mean;
            var += dv * dv;
        }
        const double stddev = std::sqrt(var / static_cast<double>(hi - lo));
        const double threshold = mean + policy.sigma_mult * stddev;

        // Local maxima above threshold, strongest kept under the separation
        // constraint.
        std::vector<std::size_t> peaks;
        for (std::size_t k = lo + 1; k + 1 < hi; ++k) {
            if (score.m[k] > threshold && score.m[k] >= score.m[k - 1] &&
                score.m[k] > score.m[k + 1])
                peaks.push_back(k);
        }
        if (peaks.empty()) continue;
        std::sort(peaks.begin(), peaks.end(),
                  [&](std::size_t a, std::size_t b) { return score.m[a] > score.m[b]; });
        std::vector<std::size_t> kept;
        for (std::size_t k : peaks) {
            bool clash = false;
            for (std::size_t other : kept) {
                const std::size_t gap = k > other ? k - other : other - k;
                if (gap < min_sep) {
                    clash = true;
                    break;
                }
            }
            if (!clash) kept.push_back(k);
            if (kept.size() >= policy.max_candidates) break;
        }
        std::sort(kept.begin(), kept.end());

        std::vector<double> times, scores;
        for (std::size_t k : kept) {
            times.push_back(score.time_of(k));
            scores.push_back(score.m[k]);
        }
        const auto best = static_cast<std::size_t>(
            std::max_element(scores.begin(), scores.end()) - scores.begin());
        out.arrivals.push_back(times[best]);
        out.peak_scores.push_back(scores[best]);
        out.epoch_of.push_back(e);
        out.candidates.push_back(std::move(times));
        out.candidate_scores.push_back(std::move(scores));
    }

    if (out.arrivals.empty())
        throw NoDetection("no score peak above threshold");
    return out;
}

std::pair<double, double> resolve_multipath(const std::vector<double>& cands_a,
                                            const std::vector<double>& cands_b, double d,
                                            const WaveformParams& params) {
    if (cands_a.empty() || cands_b.empty())
        throw EmptyCandidates("both endpoints need at least one candidate");
    double best_err = std::numeric_limits<double>::infinity();
    std::pair<double, double> best{cands_a.front(), cands_b.front()};
    for (double ta : cands_a) {
        for (double tb : cands_b) {
            const double err = std::abs((ta - tb) * params.v_a - d);
            const bool better =
                err < best_err - 1e-12 ||
                (std::abs(err - best_err) <= 1e-12 &&
                 (ta < best.first || (ta == best.first && tb < best.second)));
            if (better) {
                best_err = err;
                best = {ta, tb};
            }
        }
    }
    return best;
}

DetectorMode detector_mode(const StepTrace& steps, double t, double quiet_time) {
    for (double st : steps.step_times)
        if (st <= t && t - st < quiet_time) return DetectorMode::moving;
    return DetectorMode::stationary;
}

}  // namespace sonoloc

#include "sonoloc/pll.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double PhaseTrack::phi_at(double t) const {
    const auto n = static_cast<std::ptrdiff_t>(std::llround((t - start_time) * sample_rate));
    if (n < 0 || n >= static_cast<std::ptrdiff_t>(phi.size()))
        throw OutOfRange("time outside the phase track");
    return phi[static_cast<std::size_t>(n)];
}

double PhaseTrack::lock_at(double t) const {
    const auto n = static_cast<std::ptrdiff_t>(std::llround((t - start_time) * sample_rate));
    if (n < 0 || n >= static_cast<std::ptrdiff_t>(lock.size()))
        throw OutOfRange("time outside the phase track");
    return lock[static_cast<std::size_t>(n)];
}

namespace {

struct LoopCoeffs {
    double alpha;         // phase-detector low-pass
    double beta;          // lock-metric EMA
    double carrier_step;  // rad per sample
    explicit LoopCoeffs(const PllConfig& c)
        : alpha(1.0 - std::exp(-kTwoPi * c.lpf_cutoff * c.Ts)),
          beta(1.0 - std::exp(-c.Ts / c.lock_time_constant)),
          carrier_step(kTwoPi * (c.f + c.freq_correction) * c.Ts) {}
};

inline double step_loop(PllState& state, double sample, const PllConfig& config,
                        const LoopCoeffs& k) {
    // Phase detector: r * gamma1 = sin(phi - phi_hat) + a 2f image that the
    // low-pass removes (and the loop itself averages out).
    const double pd = sample * state.gamma1;
    state.lpf_state += k.alpha * (pd - state.lpf_state);
    const double phi_e = state.lpf_state;

    // Loop filter: proportional plus integrator.
    state.gamma2 = config.k1 * phi_e;
    state.gamma3 += config.k2 * phi_e;
    state.gamma3 = std::clamp(state.gamma3, -config.gamma3_max, config.gamma3_max);

    // DDS: advance the nominal carrier (plus any known clock correction)
    // and fold the loop-filter output into the tracked offset.
    state.carrier += k.carrier_step;
    if (state.carrier >= kTwoPi) state.carrier -= kTwoPi;
    state.phi += state.gamma2 + state.gamma3;

    // Local oscillator for the next input sample.
    state.gamma1 = -2.0 * std::sin(state.carrier + state.phi);

    // Lock metric: exponential moving average of |phi_e|.
    state.lock += k.beta * (std::abs(phi_e) - state.lock);
    return state.phi;
}

}  // namespace

double pll_step(PllState& state, double sample, const PllConfig& config) {
    return step_loop(state, sample, config, LoopCoeffs(config));
}

PhaseTrack track(const SampleStream& stream, const PllConfig& config) {
    PhaseTrack out;
    out.sample_rate = stream.sample_rate;
    out.start_time = stream.start_time;
    out.phi.resize(stream.samples.size());
    out.lock.resize(stream.samples.size());

    PllState state;
    const LoopCoeffs coeffs(config);
    for (std::size_t n = 0; n < stream.samples.size(); ++n) {
        out.phi[n] = step_loop(state, stream.samples[n], config, coeffs);
        out.lock[n] = state.lock;
    }
    return out;
}

double phase_to_displacement(double delta_phi, const PllConfig& config,
                             Calibration calibration) {
    const double raw = config.v_a / (kTwoPi * config.f) * delta_phi;
    switch (calibration) {
        case Calibration::forward: return 1.22 * raw;
        case Calibration::backward: return 1.69 * raw;
        case Calibration::none: break;
    }
    return raw;
}

DisplacementSeries displacements_at_steps(const PhaseTrack& track, const StepTrace& steps,
                                          const PllConfig& config, Calibration calibration) {
    steps.validate();
    DisplacementSeries out;
    out.step_times = steps.step_times;
    const std::size_t n_steps = steps.step_times.size();
    if (n_steps < 2) return out;
    out.d.resize(n_steps - 1);
    out.valid.assign(n_steps - 1, 1);
    for (std::size_t i = 0; i + 1 < n_steps; ++i) {
        const double t0 = steps.step_times[i];
        const double t1 = steps.step_times[i + 1];
        // Distance shrinking raises the tracked phase, so d_i comes from the
        // phase gained across the step.
        const double dphi = track.phi_at(t1) - track.phi_at(t0);
        out.d[i] = phase_to_displacement(dphi, config, calibration);
        if (track.lock_at(t0) > config.lock_threshold ||
            track.lock_at(t1) > config.lock_threshold)
            out.valid[i] = 0;
    }
    return out;
}

double estimate_freq_offset(const PhaseTrack& track, std::pair<double, double> window,
                            const PllConfig& config) {
    const auto [t0, t1] = window;
    if (!(t1 > t0)) throw OutOfRange("empty estimation window");
    if (t1 - t0 < 2.0) throw OutOfRange("estimation window must span at least 2 s");
    const auto n0 = static_cast<std::ptrdiff_t>(std::ceil((t0 - track.start_time) * track.sample_rate));
    const auto n1 = static_cast<std::ptrdiff_t>(std::floor((t1 - track.start_time) * track.sample_rate));
    if (n0 < 0 || n1 >= static_cast<std::ptrdiff_t>(track.phi.size()) || n1 <= n0)
        throw OutOfRange("estimation window outside the track");

    // The loop must have been locked the whole time; a drifting or slipping
    // loop would fake a slope.
    for (std::ptrdiff_t n = n0; n <= n1; ++n) {
        if (track.lock[static_cast<std::size_t>(n)] > config.lock_threshold)
            throw NotConverged("loop not locked across the static window");
    }

    // Least-squares line through phi(t); the slope is 2*pi * offset.
    const double count = static_cast<double>(n1 - n0 + 1);
    double sum_t = 0.0, sum_p = 0.0;
    for (std::ptrdiff_t n = n0; n <= n1; ++n) {
        sum_t += static_cast<double>(n - n0);
        sum_p += track.phi[static_cast<std::size_t>(n)];
    }
    const double mean_t = sum_t / count;
    const double mean_p = sum_p / count;
    double stt = 0.0, stp = 0.0;
    for (std::ptrdiff_t n = n0; n <= n1; ++n) {
        const double dt = static_cast<double>(n - n0) - mean_t;
        stt += dt * dt;
        stp += dt * (track.phi[static_cast<std::size_t>(n)] - mean_p);
    }
    const double slope_per_sample = stp / stt;
    return slope_per_sample * track.sample_rate / kTwoPi;
}

}  // namespace sonoloc

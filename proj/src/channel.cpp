#include "sonoloc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

constexpr double kPi = std::numbers::pi;

double kaiser_i0(double x) {
    // Series expansion of the zeroth-order modified Bessel function.
    double term = 1.0, sum = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

double kaiser(double u, double half_width, double beta) {
    const double r = u / half_width;
    if (std::abs(r) >= 1.0) return 0.0;
    return kaiser_i0(beta * std::sqrt(1.0 - r * r)) / kaiser_i0(beta);
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// 32-tap Kaiser-windowed-sinc fractional reader. On its own such a short
// kernel degrades near Nyquist, so the signal is first upsampled 2x with a
// long linear-phase FIR; the reader then operates far from the band edge
// and its passband error stays below ~1e-4.
constexpr int kReaderTaps = 32;
constexpr int kReaderHalf = 16;  // taps span [-15, 16] around the read point
constexpr double kReaderBeta = 8.6;
constexpr int kTablePhases = 1024;

struct ReaderTable {
    // row p holds weights for fractional offset p / kTablePhases
    std::vector<double> w;  // (kTablePhases + 1) * kReaderTaps
    ReaderTable() {
        w.resize(static_cast<std::size_t>(kTablePhases + 1) * kReaderTaps);
        for (int p = 0; p <= kTablePhases; ++p) {
            const double frac = static_cast<double>(p) / kTablePhases;
            for (int j = 0; j < kReaderTaps; ++j) {
                // tap j multiplies sample floor(x) - 15 + j; u = x - m
                const double u = frac + static_cast<double>(kReaderHalf - 1 - j);
                w[static_cast<std::size_t>(p) * kReaderTaps + j] =
                    sinc(u) * kaiser(u, kReaderHalf, kReaderBeta);
            }
        }
    }
};

const ReaderTable& reader_table() {
    static const ReaderTable table;
    return table;
}

double read_fractional(const std::vector<double>& s, double x) {
    const double fl = std::floor(x);
    const int i = static_cast<int>(fl);
    const double frac = x - fl;
    const double p = frac * kTablePhases;
    const int p0 = static_cast<int>(p);
    const double a = p - p0;
    const ReaderTable& tbl = reader_table();
    const double* w0 = &tbl.w[static_cast<std::size_t>(p0) * kReaderTaps];
    const double* w1 = w0 + kReaderTaps;
    const int n = static_cast<int>(s.size());
    double acc = 0.0;
    for (int j = 0; j < kReaderTaps; ++j) {
        const int m = i - (kReaderHalf - 1) + j;
        if (m < 0 || m >= n) continue;
        acc += s[static_cast<std::size_t>(m)] * ((1.0 - a) * w0[j] + a * w1[j]);
    }
    return acc;
}

// Half-rate anti-image lowpass for the 2x upsampler: 191 taps, Kaiser
// beta 9.0, cutoff at the original Nyquist. Group delay is compensated so
// up[m] estimates x(t0 + m/(2*fs)).
std::vector<double> upsample2x(const std::vector<double>& x) {
    constexpr int kTaps = 191;  // odd, centered
    constexpr int kHalf = (kTaps - 1) / 2;
    constexpr double kBeta = 9.0;
    static const std::vector<double> h = [] {
        std::vector<double> taps(kTaps);
        for (int k = 0; k < kTaps; ++k) {
            const double u = static_cast<double>(k - kHalf);
            taps[k] = 0.5 * sinc(0.5 * u) * kaiser(u, kHalf + 1, kBeta);
        }
        return taps;
    }();

    const int n = static_cast<int>(x.size());
    std::vector<double> up(static_cast<std::size_t>(2 * n), 0.0);
    // y[m] = 2 * sum_k h[k] * stuffed[m + kHalf - k]; stuffed[2i] = x[i]
    for (int m = 0; m < 2 * n; ++m) {
        const int base = m + kHalf;
        // stuffed index base - k must be even: k parity matches base
        int k0 = base % 2 == 0 ? 0 : 1;
        double acc = 0.0;
        for (int k = k0; k < kTaps; k += 2) {
            const int i = (base - k) / 2;
            if (i < 0 || i >= n) continue;
            acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i)];
        }
        up[static_cast<std::size_t>(m)] = 2.0 * acc;
    }
    return up;
}

struct GaussianGen {
    std::mt19937_64 rng;
    bool have_spare = false;
    double spare = 0.0;
    explicit GaussianGen(std::uint64_t seed) : rng(seed) {}
    double operator()() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        // Box-Muller; kept explicit so a given seed yields the same stream
        // everywhere.
        double u1 = 0.0;
        do {
            u1 = std::generate_canonical<double, 53>(rng);
        } while (u1 <= 1e-300);
        const double u2 = std::generate_canonical<double, 53>(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * kPi * u2);
        have_spare = true;
        return r * std::cos(2.0 * kPi * u2);
    }
};

double speaker_distance(const Scenario& sc, const Pose& pose) {
    const double dx = pose.x - sc.speaker[0];
    const double dy = pose.y - sc.speaker[1];
    return std::sqrt(dx * dx + dy * dy + sc.speaker[2] * sc.speaker[2]);
}

}  // namespace

void StepTrace::validate() const {
    if (step_times.empty()) throw InvalidParams("trajectory must have at least one step time");
    for (std::size_t i = 1; i < step_times.size(); ++i)
        if (!(step_times[i] > step_times[i - 1]))
            throw InvalidParams("step times must be strictly increasing");
    if (!(stride > 0.0)) throw InvalidParams("stride must be positive");
    for (const auto& turn : turns)
        if (turn.step_index >= step_times.size())
            throw InvalidParams("turn step index beyond trace");
}

void Scenario::validate() const {
    if (speaker[2] < 0.0) throw InvalidParams("speaker height must be non-negative");
    trajectory.validate();
}

void ChannelModel::validate() const {
    for (const auto& e : echoes) {
        if (!(e.gain > 0.0 && e.gain <= 1.0))
            throw InvalidParams("echo gain must lie in (0, 1]");
        if (!(e.extra_delay > 0.0))
            throw InvalidParams("echo delay must be positive");
    }
    if (!(noise_bandwidth > 0.0)) throw InvalidParams("noise bandwidth must be positive");
    if (amplitude_exponent < 0.0) throw InvalidParams("attenuation exponent must be >= 0");
}

std::vector<std::array<double, 2>> step_points(const StepTrace& trace) {
    trace.validate();
    std::vector<std::array<double, 2>> pts;
    pts.reserve(trace.step_times.size());
    double heading = 0.0;
    std::array<double, 2> p = trace.start_point;
    pts.push_back(p);
    std::size_t turn_idx = 0;
    // turns are expected sorted by step_index
    for (std::size_t i = 0; i + 1 < trace.step_times.size(); ++i) {
        while (turn_idx < trace.turns.size() && trace.turns[turn_idx].step_index <= i) {
            heading += trace.turns[turn_idx].angle;
            ++turn_idx;
        }
        p[0] += trace.stride * std::cos(heading);
        p[1] += trace.stride * std::sin(heading);
        pts.push_back(p);
    }
    return pts;
}

Pose trace_pose(const StepTrace& trace, double t) {
    const auto pts = step_points(trace);
    const auto& times = trace.step_times;

    double heading = 0.0;
    std::size_t turn_idx = 0;
    auto heading_for_segment = [&](std::size_t seg) {
        while (turn_idx < trace.turns.size() && trace.turns[turn_idx].step_index <= seg) {
            heading += trace.turns[turn_idx].angle;
            ++turn_idx;
        }
        return heading;
    };

    if (t <= times.front()) {
        return Pose{pts.front()[0], pts.front()[1], heading_for_segment(0)};
    }
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double h = heading_for_segment(i);
        if (t <= times[i + 1]) {
            const double a = (t - times[i]) / (times[i + 1] - times[i]);
            return Pose{pts[i][0] + a * (pts[i + 1][0] - pts[i][0]),
                        pts[i][1] + a * (pts[i + 1][1] - pts[i][1]), h};
        }
    }
    return Pose{pts.back()[0], pts.back()[1], heading};
}

double distance_clamped(const Scenario& scenario, double t) {
    return speaker_distance(scenario, trace_pose(scenario.trajectory, t));
}

double distance_profile(const Scenario& scenario, double t) {
    scenario.validate();
    const auto& times = scenario.trajectory.step_times;
    if (t < times.front() || t > times.back())
        throw OutOfRange("time outside the trajectory step span");
    return distance_clamped(scenario, t);
}

DisplacementSeries ideal_displacements(const Scenario& scenario) {
    scenario.validate();
    const auto pts = step_points(scenario.trajectory);
    DisplacementSeries out;
    out.step_times = scenario.trajectory.step_times;
    if (pts.size() < 2) return out;
    out.d.reserve(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double li = speaker_distance(scenario, Pose{pts[i][0], pts[i][1], 0.0});
        const double ln = speaker_distance(scenario, Pose{pts[i + 1][0], pts[i + 1][1], 0.0});
        out.d.push_back(li - ln);
    }
    return out;
}

SampleStream propagate(const SampleStream& tx, const Scenario& scenario,
                       const ChannelModel& model, const WaveformParams& params) {
    params.validate();
    scenario.validate();
    model.validate();
    if (tx.empty()) throw InsufficientInput("transmit stream is empty");

    // The motion must be fully covered by the transmission (plus flight time),
    // otherwise the interesting part of the output would be silence.
    double max_dist = 0.0;
    for (const auto& p : step_points(scenario.trajectory))
        max_dist = std::max(max_dist, speaker_distance(scenario, Pose{p[0], p[1], 0.0}));
    double max_extra = 0.0;
    for (const auto& e : model.echoes) max_extra = std::max(max_extra, e.extra_delay);
    const double needed_end =
        scenario.trajectory.step_times.back() + max_dist / params.v_a + max_extra;
    if (tx.end_time() < needed_end - 1e-9)
        throw InsufficientInput("transmit stream ends before the trajectory is covered");

    const std::vector<double> up = upsample2x(tx.samples);
    const double up_rate = 2.0 * tx.sample_rate;

    SampleStream out;
    out.sample_rate = tx.sample_rate;
    out.start_time = tx.start_time;
    out.samples.resize(tx.samples.size());

    const double ratio = (params.f + model.freq_offset) / params.f;
    const double Ts = tx.dt();

    std::vector<EchoPath> paths;
    paths.push_back(EchoPath{0.0, 1.0});  // direct
    paths.insert(paths.end(), model.echoes.begin(), model.echoes.end());

    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        const double t = tx.start_time + static_cast<double>(n) * Ts;
        const double d = distance_clamped(scenario, t);
        double acc = 0.0;
        for (const auto& path : paths) {
            const double t_emit = t - d / params.v_a - path.extra_delay;
            const double t_src = ratio * t_emit;
            const double x = (t_src - tx.start_time) * up_rate;
            double amp = path.gain;
            if (model.amplitude_exponent > 0.0) {
                const double len = std::max(0.1, d + path.extra_delay * params.v_a);
                amp /= std::pow(len, model.amplitude_exponent);
            }
            acc += amp * read_fractional(up, x);
        }
        out.samples[n] = acc;
    }

    if (!model.noiseless()) {
        double power = 0.0;
        for (double s : out.samples) power += s * s;
        power /= static_cast<double>(out.samples.size());
        const double inband = power / std::pow(10.0, model.snr_db / 10.0);
        const double sigma =
            std::sqrt(inband * (tx.sample_rate / 2.0) / model.noise_bandwidth);
        GaussianGen gauss(scenario.seed);
        for (double& s : out.samples) s += sigma * gauss();
    }
    return out;
}

}  // namespace sonoloc

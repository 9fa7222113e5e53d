#include "sonoloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "sonoloc/channel.hpp"
#include "sonoloc/errors.hpp"
#include "sonoloc/locator.hpp"
#include "sonoloc/pipeline.hpp"
#include "sonoloc/pulsedet.hpp"

namespace sonoloc {

namespace {

constexpr double kRad2Deg = 180.0 / std::numbers::pi;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1) +
                      0x94d049bb133111ebull * (c + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

StepTrace make_trace(const EvalConfig& e, double t0) {
    StepTrace trace;
    trace.stride = e.stride;
    for (int i = 0; i <= e.steps; ++i)
        trace.step_times.push_back(t0 + e.step_interval * static_cast<double>(i));
    return trace;
}

struct Truth {
    double L1;
    double psi1;  // rad
};

Truth truth_for(double X, double Y) {
    const double L1 = std::hypot(X, Y);
    return Truth{L1, std::acos(std::clamp(X / L1, -1.0, 1.0))};
}

DisplacementSeries noisy_displacements(const Scenario& scenario, double sigma,
                                       std::mt19937_64& rng) {
    DisplacementSeries d = ideal_displacements(scenario);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : d.d) v += noise(rng);
    return d;
}

EvalRow displacement_run(const Config& cfg, double X, double Y, int run) {
    const EvalConfig& e = cfg.eval;
    Scenario scenario;
    scenario.speaker = {X, Y, e.h};
    scenario.trajectory = make_trace(e, 0.0);

    std::mt19937_64 rng(mix_seed(e.seed, static_cast<std::uint64_t>(X * 1000),
                                 static_cast<std::uint64_t>(Y * 1000),
                                 static_cast<std::uint64_t>(run)));
    LineFixInput input{noisy_displacements(scenario, e.noise_d_std, rng), e.stride, e.h};
    const PositionFix fix = solve_line(input);
    const Truth truth = truth_for(X, Y);

    EvalRow row;
    row.X = X;
    row.Y = Y;
    row.run = run;
    row.ranging_error = std::abs(fix.L[0] - truth.L1);
    row.direction_error_deg = std::abs(fix.psi[0] - truth.psi1) * kRad2Deg;
    return row;
}

EvalRow audio_run(const Config& cfg, double X, double Y, int run) {
    const EvalConfig& e = cfg.eval;
    const double lead = 2.0;
    Scenario scenario;
    scenario.speaker = {X, Y, e.h};
    scenario.trajectory = make_trace(e, lead);
    scenario.seed = mix_seed(e.seed, static_cast<std::uint64_t>(X * 1000),
                             static_cast<std::uint64_t>(Y * 1000),
                             static_cast<std::uint64_t>(run));

    const double walk_end = scenario.trajectory.step_times.back();
    const double duration = walk_end + 1.0;

    WaveformParams params = cfg.waveform;
    ChannelModel channel = cfg.channel;
    channel.snr_db = e.snr_db;

    const PulseSchedule schedule = build_pulse_schedule(params, duration);
    const SampleStream tx = synthesize(params, schedule, duration);
    const SampleStream rx = propagate(tx, scenario, channel, params);

    ReceiverChain chain{cfg.bpf, cfg.agc, cfg.pll};
    chain.bpf.center = params.f;
    chain.pll.f = params.f;
    chain.pll.Ts = params.Ts();
    chain.pll.v_a = params.v_a;
    const DemodResult demod = demodulate(rx, chain);

    const DisplacementSeries d =
        displacements_at_steps(demod.track, scenario.trajectory, chain.pll);
    const PositionFix fix = solve_line(LineFixInput{d, e.stride, e.h});
    const Truth truth = truth_for(X, Y);

    EvalRow row;
    row.X = X;
    row.Y = Y;
    row.run = run;
    row.ranging_error = std::abs(fix.L[0] - truth.L1);
    row.direction_error_deg = std::abs(fix.psi[0] - truth.psi1) * kRad2Deg;

    // Pulse detection bookkeeping: epochs whose middle pulse falls inside
    // the recording, detected within 0.8 m of the true arrival.
    const ScoreSeries raw = matched_score_tracked(rx, demod.track, params);
    const ScoreSeries m2 = aggregate(aggregate(raw, params, ScoreLevel::m1), params,
                                     ScoreLevel::m2);
    std::size_t expected = 0, good = 0;
    try {
        const PulseArrivals arrivals = detect_pulses(m2, params);
        for (std::size_t e_idx = 0; e_idx < arrivals.arrivals.size(); ++e_idx) {
            const double tau =
                static_cast<double>(arrivals.epoch_of[e_idx]) * params.T2 + params.T1 +
                params.T3;
            double t_true = tau;
            for (int it = 0; it < 4; ++it)
                t_true = tau + distance_clamped(scenario, t_true) / params.v_a;
            if (std::abs(arrivals.arrivals[e_idx] - t_true) * params.v_a < 0.8) ++good;
        }
        expected = static_cast<std::size_t>(duration / params.T2);
    } catch (const NoDetection&) {
        expected = static_cast<std::size_t>(duration / params.T2);
    }
    if (expected > 0)
        row.detection_rate = static_cast<double>(good) / static_cast<double>(expected);
    return row;
}

EvalRow absolute_run(const Config& cfg, int run) {
    const EvalConfig& e = cfg.eval;
    if (e.speakers.size() < 2)
        throw ConfigError("absolute eval mode needs at least 2 surveyed speakers");

    // The walk frame coincides with the survey frame (walker starts at the
    // origin heading +X), so a relative fix per speaker turns into a user
    // position estimate by subtraction.
    double px = 0.0, py = 0.0;
    double dir_err_acc = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < e.speakers.size(); ++k) {
        const SpeakerSpec& sp = e.speakers[k];
        Scenario scenario;
        scenario.speaker = sp.pos;
        scenario.trajectory = make_trace(e, 0.0);
        std::mt19937_64 rng(mix_seed(e.seed, k, 0, static_cast<std::uint64_t>(run)));
        LineFixInput input{noisy_displacements(scenario, e.noise_d_std, rng), e.stride,
                           sp.pos[2]};
        const PositionFix fix = solve_line(input);
        px += sp.pos[0] - fix.rcs_x();
        py += sp.pos[1] - fix.rcs_y() * (sp.pos[1] < 0.0 ? -1.0 : 1.0);
        const Truth truth = truth_for(sp.pos[0], std::abs(sp.pos[1]));
        dir_err_acc += std::abs(fix.psi[0] - truth.psi1) * kRad2Deg;
        ++used;
    }
    px /= static_cast<double>(used);
    py /= static_cast<double>(used);

    EvalRow row;
    row.run = run;
    row.ranging_error = std::hypot(px, py);  // true user position is the origin
    row.direction_error_deg = dir_err_acc / static_cast<double>(used);
    return row;
}

}  // namespace

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Percentiles summarize(const std::vector<double>& values) {
    Percentiles p;
    if (values.empty()) return p;
    double acc = 0.0;
    for (double v : values) acc += v;
    p.mean = acc / static_cast<double>(values.size());
    p.p50 = percentile(values, 0.5);
    p.p80 = percentile(values, 0.8);
    p.p90 = percentile(values, 0.9);
    return p;
}

EvalReport run_eval(const Config& cfg) {
    if (!cfg.has_eval) throw ConfigError("config has no eval section");
    const EvalConfig& e = cfg.eval;

    EvalReport report;
    if (e.mode == "absolute") {
        for (int run = 0; run < e.runs; ++run) report.rows.push_back(absolute_run(cfg, run));
    } else {
        for (double X : e.grid_x) {
            for (double Y : e.grid_y) {
                for (int run = 0; run < e.runs; ++run) {
                    report.rows.push_back(e.mode == "audio" ? audio_run(cfg, X, Y, run)
                                                            : displacement_run(cfg, X, Y, run));
                }
            }
        }
    }

    std::vector<double> ranging, direction, detection;
    for (const auto& row : report.rows) {
        ranging.push_back(row.ranging_error);
        direction.push_back(row.direction_error_deg);
        if (row.detection_rate) detection.push_back(*row.detection_rate);
    }
    report.ranging = summarize(ranging);
    report.direction = summarize(direction);
    if (!detection.empty()) {
        double acc = 0.0;
        for (double v : detection) acc += v;
        report.detection_rate = acc / static_cast<double>(detection.size());
    }
    return report;
}

void write_report_json(const std::string& path, const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r{{"X", row.X},
                         {"Y", row.Y},
                         {"run", row.run},
                         {"ranging_error", row.ranging_error},
                         {"direction_error_deg", row.direction_error_deg}};
        if (row.detection_rate) r["detection_rate"] = *row.detection_rate;
        rows.push_back(std::move(r));
    }
    auto pct = [](const Percentiles& p) {
        return nlohmann::json{{"mean", p.mean}, {"p50", p.p50}, {"p80", p.p80}, {"p90", p.p90}};
    };
    nlohmann::json j{{"schema", 1},
                     {"rows", std::move(rows)},
                     {"summary",
                      {{"ranging", pct(report.ranging)}, {"direction", pct(report.direction)}}}};
    if (report.detection_rate) j["summary"]["detection_rate"] = *report.detection_rate;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "X,Y,run,ranging_error,direction_error_deg,detection_rate\n";
    for (const auto& row : report.rows) {
        out << row.X << ',' << row.Y << ',' << row.run << ',' << row.ranging_error << ','
            << row.direction_error_deg << ',';
        if (row.detection_rate) out << *row.detection_rate;
        out << '\n';
    }
}

}  // namespace sonoloc

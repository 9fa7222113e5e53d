#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sonoloc/audio_io.hpp"
#include "sonoloc/channel.hpp"
#include "sonoloc/config.hpp"
#include "sonoloc/errors.hpp"
#include "sonoloc/eval.hpp"
#include "sonoloc/locator.hpp"
#include "sonoloc/pipeline.hpp"
#include "sonoloc/pulsedet.hpp"
#include "sonoloc/waveform.hpp"

namespace fs = std::filesystem;
using namespace sonoloc;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> channel_freq;
};

Config load(const CommonOpts& opts) {
    Config cfg = load_config(opts.config_path);
    if (opts.seed) cfg.scenario.seed = *opts.seed;
    if (opts.seed) cfg.eval.seed = *opts.seed;
    if (opts.channel_freq) {
        cfg.waveform.f = *opts.channel_freq;
        cfg.bpf.center = *opts.channel_freq;
        cfg.pll.f = *opts.channel_freq;
    }
    return cfg;
}

fs::path out_file(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    return fs::path(opts.out_dir) / name;
}

WavEncoding encoding_of(const Config& cfg) {
    return cfg.wav_encoding == "pcm16" ? WavEncoding::pcm16 : WavEncoding::float32;
}

void cmd_synth(const CommonOpts& opts) {
    const Config cfg = load(opts);
    const PulseSchedule schedule = build_pulse_schedule(cfg.waveform, cfg.duration);
    const SampleStream tx = synthesize(cfg.waveform, schedule, cfg.duration);
    write_wav(out_file(opts, "tx.wav").string(), tx, encoding_of(cfg));
    std::cout << "wrote tx.wav (" << tx.samples.size() << " samples at "
              << tx.sample_rate << " Hz)\n";
}

void cmd_simulate(const CommonOpts& opts, int decim) {
    const Config cfg = load(opts);
    if (!cfg.has_scenario) throw ConfigError("simulate needs a scenario section");

    const double walk_end = cfg.scenario.trajectory.step_times.back();
    const double duration = std::max(cfg.duration, walk_end + 1.0);
    const PulseSchedule schedule = build_pulse_schedule(cfg.waveform, duration);
    const SampleStream tx = synthesize(cfg.waveform, schedule, duration);
    const SampleStream rx = propagate(tx, cfg.scenario, cfg.channel, cfg.waveform);
    write_wav(out_file(opts, "rx.wav").string(), rx, encoding_of(cfg));

    std::ofstream truth(out_file(opts, "truth.csv"));
    truth << "t,x,y,distance\n";
    for (std::size_t n = 0; n < rx.samples.size(); n += static_cast<std::size_t>(decim)) {
        const double t = rx.time_of(n);
        const Pose pose = trace_pose(cfg.scenario.trajectory, t);
        truth << t << ',' << pose.x << ',' << pose.y << ','
              << distance_clamped(cfg.scenario, t) << '\n';
    }
    std::cout << "wrote rx.wav and truth.csv (" << duration << " s)\n";
}

void cmd_demod(const CommonOpts& opts, const std::string& in_path, int decim,
               bool with_score) {
    const Config cfg = load(opts);
    SampleStream rx = read_wav(in_path);
    rx.sample_rate = rx.sample_rate > 0 ? rx.sample_rate : cfg.waveform.sample_rate;

    ReceiverChain chain{cfg.bpf, cfg.agc, cfg.pll};
    const DemodResult demod = demodulate(rx, chain);

    {
        std::ofstream out(out_file(opts, "phase.csv"));
        out << "t,phi,lock\n";
        for (std::size_t n = 0; n < demod.track.phi.size();
             n += static_cast<std::size_t>(decim))
            out << demod.track.time_of(n) << ',' << demod.track.phi[n] << ','
                << demod.track.lock[n] << '\n';
    }
    if (with_score) {
        const ScoreSeries raw = matched_score_tracked(rx, demod.track, cfg.waveform);
        const ScoreSeries m2 =
            aggregate(aggregate(raw, cfg.waveform, ScoreLevel::m1), cfg.waveform,
                      ScoreLevel::m2);
        std::ofstream out(out_file(opts, "score.csv"));
        out << "t,m,m2\n";
        for (std::size_t n = 0; n < raw.m.size(); n += static_cast<std::size_t>(decim))
            out << raw.time_of(n) << ',' << raw.m[n] << ',' << m2.m[n] << '\n';
    }
    std::cout << "wrote phase.csv" << (with_score ? " and score.csv" : "") << "\n";
}

PhaseTrack read_phase_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + " is empty");
    PhaseTrack track;
    std::vector<double> times;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        double t, phi, lock;
        char c1, c2;
        if (!(row >> t >> c1 >> phi >> c2 >> lock)) continue;
        times.push_back(t);
        track.phi.push_back(phi);
        track.lock.push_back(lock);
    }
    if (times.size() < 2) throw IoError(path + " has too few rows");
    track.start_time = times.front();
    track.sample_rate =
        static_cast<double>(times.size() - 1) / (times.back() - times.front());
    return track;
}

const char* provenance_name(FixProvenance p) {
    switch (p) {
        case FixProvenance::estimated: return "estimated";
        case FixProvenance::synchronized: return "synchronized";
        case FixProvenance::dead_reckoned: return "dead_reckoned";
    }
    return "unknown";
}

void cmd_locate(const CommonOpts& opts, const std::string& in_path) {
    const Config cfg = load(opts);
    if (!cfg.has_scenario) throw ConfigError("locate needs a scenario.trajectory section");
    const PhaseTrack track = read_phase_csv(in_path);
    const StepTrace& steps = cfg.scenario.trajectory;

    const DisplacementSeries d = displacements_at_steps(track, steps, cfg.pll);
    std::ofstream out(out_file(opts, "fix.csv"));
    out << "t,X,Y,L,psi_deg,provenance,residual\n";

    if (steps.turns.empty()) {
        const PositionFix fix = solve_line(LineFixInput{d, steps.stride, cfg.locate_h});
        for (std::size_t i = 0; i < fix.L.size(); ++i) {
            out << steps.step_times[i] << ',' << fix.rcs_x() << ',' << fix.rcs_y() << ','
                << fix.L[i] << ',' << fix.psi[i] * 180.0 / std::numbers::pi << ','
                << provenance_name(fix.provenance) << ',' << fix.residual << '\n';
        }
    } else {
        // Split the displacement series at the turns and pool the segments.
        std::vector<Segment> segments;
        double heading = 0.0;
        std::size_t begin = 0;
        std::size_t turn_idx = 0;
        auto flush = [&](std::size_t end) {
            if (end <= begin) return;
            Segment seg;
            seg.heading = heading;
            seg.d.d.assign(d.d.begin() + static_cast<std::ptrdiff_t>(begin),
                           d.d.begin() + static_cast<std::ptrdiff_t>(end));
            if (!d.valid.empty())
                seg.d.valid.assign(d.valid.begin() + static_cast<std::ptrdiff_t>(begin),
                                   d.valid.begin() + static_cast<std::ptrdiff_t>(end));
            seg.d.step_times.assign(
                d.step_times.begin() + static_cast<std::ptrdiff_t>(begin),
                d.step_times.begin() + static_cast<std::ptrdiff_t>(end + 1));
            segments.push_back(std::move(seg));
            begin = end;
        };
        for (; turn_idx < steps.turns.size(); ++turn_idx) {
            flush(steps.turns[turn_idx].step_index);
            heading += steps.turns[turn_idx].angle;
        }
        flush(d.d.size());
        const GroundFix fix = solve_multi_segment(segments, steps.stride, cfg.locate_h);
        const double L = std::hypot(fix.gx, fix.gy);
        const double psi = std::atan2(fix.gy, fix.gx) * 180.0 / std::numbers::pi;
        out << steps.step_times.back() << ',' << fix.gx << ',' << fix.gy << ',' << L << ','
            << psi << ',' << provenance_name(fix.provenance) << ',' << fix.residual << '\n';
    }
    std::cout << "wrote fix.csv\n";
}

void cmd_eval(const CommonOpts& opts) {
    const Config cfg = load(opts);
    const EvalReport report = run_eval(cfg);
    write_report_json(out_file(opts, "report.json").string(), report);
    write_report_csv(out_file(opts, "report.csv").string(), report);
    std::cout << "wrote report.json and report.csv (" << report.rows.size() << " rows)\n";
    std::cout << "ranging mean " << report.ranging.mean << " m, p80 " << report.ranging.p80
              << " m; direction mean " << report.direction.mean << " deg\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acoustic relative-positioning scenario runner"};
    app.require_subcommand(1);

    CommonOpts opts;
    int decim = 1;
    std::string in_path;
    bool with_score = false;

    auto add_common = [&](CLI::App* cmd, bool needs_in = false) {
        cmd->add_option("--config", opts.config_path, "JSON config path")->required();
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "override the config seed");
        cmd->add_option("--channel", opts.channel_freq,
                        "carrier frequency to select (Hz)");
        if (needs_in)
            cmd->add_option("--in", in_path, "input file")->required();
    };

    CLI::App* synth = app.add_subcommand("synth", "synthesize the transmit waveform");
    add_common(synth);
    CLI::App* simulate =
        app.add_subcommand("simulate", "propagate the waveform through a scenario");
    add_common(simulate);
    simulate->add_option("--decim", decim, "truth CSV decimation");
    CLI::App* demod = app.add_subcommand("demod", "track phase (and pulses) in a recording");
    add_common(demod, true);
    demod->add_option("--decim", decim, "CSV decimation");
    demod->add_flag("--score", with_score, "also write the pulse score CSV");
    CLI::App* locate = app.add_subcommand("locate", "solve positions from a phase track");
    add_common(locate, true);
    CLI::App* eval = app.add_subcommand("eval", "batch scenario evaluation");
    add_common(eval);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) cmd_synth(opts);
        if (simulate->parsed()) cmd_simulate(opts, decim);
        if (demod->parsed()) cmd_demod(opts, in_path, decim, with_score);
        if (locate->parsed()) cmd_locate(opts, in_path);
        if (eval->parsed()) cmd_eval(opts);
    } catch (const Error& e) {
        nlohmann::json err{{"error", {{"type", e.code()}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"type", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
    return 0;
}

#include "sonoloc/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::array<double, 3> read_point3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(where + " must be [x, y, h]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void parse_waveform(const json& j, WaveformParams& p) {
    check_keys(j, "waveform", {"f", "sample_rate", "Tp", "T1", "T2", "T3", "v_a", "l_m"});
    read(j, "f", p.f);
    read(j, "sample_rate", p.sample_rate);
    read(j, "Tp", p.Tp);
    read(j, "T2", p.T2);
    read(j, "T3", p.T3);
    read(j, "v_a", p.v_a);
    read(j, "l_m", p.l_m);
    if (j.contains("T1"))
        p.T1 = j.at("T1").get<double>();
    else
        p.T1 = p.T2 - 3.0 * p.T3;
    p.validate();
}

void parse_trajectory(const json& j, StepTrace& t) {
    check_keys(j, "trajectory",
               {"step_times", "start_time", "steps", "step_interval", "stride",
                "start_point", "turns"});
    read(j, "stride", t.stride);
    if (j.contains("start_point")) {
        const auto& sp = j.at("start_point");
        if (!sp.is_array() || sp.size() != 2)
            throw ConfigError("trajectory.start_point must be [x, y]");
        t.start_point = {sp[0].get<double>(), sp[1].get<double>()};
    }
    if (j.contains("step_times")) {
        t.step_times = j.at("step_times").get<std::vector<double>>();
    } else {
        double t0 = 1.0;
        int steps = 10;
        double interval = 0.5;
        read(j, "start_time", t0);
        read(j, "steps", steps);
        read(j, "step_interval", interval);
        for (int i = 0; i <= steps; ++i)
            t.step_times.push_back(t0 + interval * static_cast<double>(i));
    }
    if (j.contains("turns")) {
        for (const auto& tj : j.at("turns")) {
            check_keys(tj, "trajectory.turns[]", {"step_index", "angle_deg", "angle_rad"});
            StepTrace::Turn turn{};
            turn.step_index = tj.at("step_index").get<std::size_t>();
            if (tj.contains("angle_deg"))
                turn.angle = tj.at("angle_deg").get<double>() * std::numbers::pi / 180.0;
            else
                turn.angle = tj.at("angle_rad").get<double>();
            t.turns.push_back(turn);
        }
    }
    t.validate();
}

void parse_scenario(const json& j, Scenario& sc) {
    check_keys(j, "scenario", {"speaker", "seed", "trajectory"});
    if (j.contains("speaker")) sc.speaker = read_point3(j.at("speaker"), "scenario.speaker");
    read(j, "seed", sc.seed);
    if (!j.contains("trajectory")) throw ConfigError("scenario.trajectory is required");
    sc.trajectory.step_times.clear();
    parse_trajectory(j.at("trajectory"), sc.trajectory);
    sc.validate();
}

void parse_channel(const json& j, ChannelModel& ch) {
    check_keys(j, "channel",
               {"snr_db", "echoes", "freq_offset", "amplitude_exponent", "noise_bandwidth"});
    if (j.contains("snr_db") && !j.at("snr_db").is_null())
        ch.snr_db = j.at("snr_db").get<double>();
    read(j, "freq_offset", ch.freq_offset);
    read(j, "amplitude_exponent", ch.amplitude_exponent);
    read(j, "noise_bandwidth", ch.noise_bandwidth);
    if (j.contains("echoes")) {
        for (const auto& ej : j.at("echoes")) {
            check_keys(ej, "channel.echoes[]", {"delay", "gain"});
            ch.echoes.push_back(EchoPath{ej.at("delay").get<double>(),
                                         ej.at("gain").get<double>()});
        }
    }
    ch.validate();
}

void parse_bpf(const json& j, BpfSpec& b) {
    check_keys(j, "bpf", {"center", "half_width", "stop_attenuation", "taps"});
    read(j, "center", b.center);
    read(j, "half_width", b.half_width);
    read(j, "stop_attenuation", b.stop_attenuation);
    read(j, "taps", b.taps);
}

void parse_pll(const json& j, PllConfig& p) {
    check_keys(j, "pll",
               {"k1", "k2", "lpf_cutoff", "gamma3_max", "lock_time_constant",
                "lock_threshold", "freq_correction"});
    read(j, "k1", p.k1);
    read(j, "k2", p.k2);
    read(j, "lpf_cutoff", p.lpf_cutoff);
    read(j, "gamma3_max", p.gamma3_max);
    read(j, "lock_time_constant", p.lock_time_constant);
    read(j, "lock_threshold", p.lock_threshold);
    read(j, "freq_correction", p.freq_correction);
    if (!(p.k1 > 0.0)) throw ConfigError("pll.k1 must be positive");
    if (p.k2 < 0.0) throw ConfigError("pll.k2 must be non-negative");
}

void parse_eval(const json& j, EvalConfig& e) {
    check_keys(j, "eval",
               {"mode", "grid_X", "grid_Y", "runs", "steps", "stride", "h",
                "step_interval", "noise_d_std", "snr_db", "seed", "speakers"});
    read(j, "mode", e.mode);
    if (e.mode != "displacement" && e.mode != "audio" && e.mode != "absolute")
        throw ConfigError("eval.mode must be displacement, audio or absolute");
    if (j.contains("grid_X")) e.grid_x = j.at("grid_X").get<std::vector<double>>();
    if (j.contains("grid_Y")) e.grid_y = j.at("grid_Y").get<std::vector<double>>();
    read(j, "runs", e.runs);
    read(j, "steps", e.steps);
    read(j, "stride", e.stride);
    read(j, "h", e.h);
    read(j, "step_interval", e.step_interval);
    read(j, "noise_d_std", e.noise_d_std);
    read(j, "snr_db", e.snr_db);
    read(j, "seed", e.seed);
    if (j.contains("speakers")) {
        for (const auto& sj : j.at("speakers")) {
            check_keys(sj, "eval.speakers[]", {"pos", "f"});
            SpeakerSpec sp;
            sp.pos = read_point3(sj.at("pos"), "eval.speakers[].pos");
            read(sj, "f", sp.f);
            e.speakers.push_back(sp);
        }
    }
    if (e.runs <= 0 || e.steps < 2) throw ConfigError("eval.runs/steps out of range");
}

}  // namespace

Config parse_config(const json& j) {
    check_keys(j, "config",
               {"schema", "waveform", "scenario", "channel", "bpf", "pll", "agc",
                "duration", "wav_encoding", "locate_h", "eval"});
    if (!j.contains("schema") || j.at("schema").get<int>() != 1)
        throw ConfigError("config requires \"schema\": 1");

    Config cfg;
    if (j.contains("waveform")) parse_waveform(j.at("waveform"), cfg.waveform);
    if (j.contains("scenario")) {
        parse_scenario(j.at("scenario"), cfg.scenario);
        cfg.has_scenario = true;
    }
    if (j.contains("channel")) parse_channel(j.at("channel"), cfg.channel);
    cfg.bpf.center = cfg.waveform.f;
    if (j.contains("bpf")) parse_bpf(j.at("bpf"), cfg.bpf);
    cfg.pll.f = cfg.waveform.f;
    cfg.pll.Ts = cfg.waveform.Ts();
    cfg.pll.v_a = cfg.waveform.v_a;
    if (j.contains("pll")) parse_pll(j.at("pll"), cfg.pll);
    if (j.contains("agc")) {
        check_keys(j.at("agc"), "agc", {"window", "max_slew_db_per_ms", "silence_rms"});
        read(j.at("agc"), "window", cfg.agc.window);
        read(j.at("agc"), "max_slew_db_per_ms", cfg.agc.max_slew_db_per_ms);
        read(j.at("agc"), "silence_rms", cfg.agc.silence_rms);
    }
    read(j, "duration", cfg.duration);
    read(j, "wav_encoding", cfg.wav_encoding);
    if (cfg.wav_encoding != "float32" && cfg.wav_encoding != "pcm16")
        throw ConfigError("wav_encoding must be float32 or pcm16");
    read(j, "locate_h", cfg.locate_h);
    if (j.contains("eval")) {
        parse_eval(j.at("eval"), cfg.eval);
        cfg.has_eval = true;
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace sonoloc

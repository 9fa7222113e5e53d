#ifndef SONOLOC_CONFIG_HPP
#define SONOLOC_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloc/channel.hpp"
#include "sonoloc/frontend.hpp"
#include "sonoloc/pll.hpp"
#include "sonoloc/waveform.hpp"

namespace sonoloc {

/// One speaker entry for multi-carrier / absolute-positioning evaluation.
struct SpeakerSpec {
    std::array<double, 3> pos{0.0, 4.0, 0.3};
    double f = 19000.0;
};

struct EvalConfig {
    std::string mode = "displacement";  // displacement | audio | absolute
    std::vector<double> grid_x{2.0, 4.0, 6.0, 8.0};
    std::vector<double> grid_y{2.0, 4.0, 6.0, 8.0};
    int runs = 35;
    int steps = 10;
    double stride = 0.6;
    double h = 0.3;
    double step_interval = 0.5;
    double noise_d_std = 0.004;  // displacement mode, m per step
    double snr_db = 10.0;        // audio mode
    std::uint64_t seed = 1;
    std::vector<SpeakerSpec> speakers;  // absolute mode
};

/// Whole run configuration, parsed from versioned JSON ("schema": 1).
/// Unknown keys anywhere are rejected so typos surface immediately.
struct Config {
    WaveformParams waveform;
    Scenario scenario;
    ChannelModel channel;
    BpfSpec bpf;
    PllConfig pll;
    Agc::Config agc;
    double duration = 10.0;          // synth/simulate span, s
    std::string wav_encoding = "float32";
    double locate_h = 0.3;
    EvalConfig eval;

    bool has_scenario = false;
    bool has_eval = false;
};

Config parse_config(const nlohmann::json& j);
Config load_config(const std::string& path);

}  // namespace sonoloc

#endif

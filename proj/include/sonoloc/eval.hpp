#ifndef SONOLOC_EVAL_HPP
#define SONOLOC_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "sonoloc/config.hpp"

namespace sonoloc {

struct EvalRow {
    double X = 0.0;
    double Y = 0.0;
    int run = 0;
    double ranging_error = 0.0;        // m
    double direction_error_deg = 0.0;  // deg
    std::optional<double> detection_rate;
};

struct Percentiles {
    double mean = 0.0;
    double p50 = 0.0;
    double p80 = 0.0;
    double p90 = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    Percentiles ranging;
    Percentiles direction;
    std::optional<double> detection_rate;
};

/// Linear-interpolated percentile of a sample set, q in [0, 1].
double percentile(std::vector<double> values, double q);

Percentiles summarize(const std::vector<double>& values);

/// Batch scenario evaluation per the config's eval section. Deterministic
/// for a given seed.
EvalReport run_eval(const Config& cfg);

void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

}  // namespace sonoloc

#endif

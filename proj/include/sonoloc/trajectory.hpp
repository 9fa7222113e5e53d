#ifndef SONOLOC_TRAJECTORY_HPP
#define SONOLOC_TRAJECTORY_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sonoloc {

/// Walking trace from the step counter: heel-strike times, a constant
/// stride, and gyroscope turn angles. The walker starts at `start_point`
/// heading along +X of the first segment; a turn entry rotates the heading
/// by `angle` beginning with the step that leaves point `step_index`.
struct StepTrace {
    std::vector<double> step_times;
    double stride = 0.6;
    struct Turn {
        std::size_t step_index;
        double angle;  // rad, positive = counterclockwise
    };
    std::vector<Turn> turns;
    std::array<double, 2> start_point{0.0, 0.0};

    void validate() const;  // throws InvalidParams
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // rad
};

/// Step-point positions (step_times.size() entries) chained from stride
/// and turns.
std::vector<std::array<double, 2>> step_points(const StepTrace& trace);

/// Pose at time t: piecewise-linear between step points, stationary before
/// the first and after the last step.
Pose trace_pose(const StepTrace& trace, double t);

/// Per-step change in speaker distance: d_i = l_i - l_{i+1}, positive when
/// the walker gets closer during the step. step_times has one more entry
/// than d. `valid[i]` is cleared for steps whose displacement could not be
/// trusted (e.g. tracking lock lost); solvers skip those residuals.
struct DisplacementSeries {
    std::vector<double> d;
    std::vector<double> step_times;
    std::vector<std::uint8_t> valid;  // empty means all valid

    bool is_valid(std::size_t i) const { return valid.empty() || valid[i] != 0; }
};

}  // namespace sonoloc

#endif

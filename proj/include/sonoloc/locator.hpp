#ifndef SONOLOC_LOCATOR_HPP
#define SONOLOC_LOCATOR_HPP

#include <cstddef>
#include <limits>
#include <vector>

#include "sonoloc/pulsedet.hpp"
#include "sonoloc/trajectory.hpp"
#include "sonoloc/waveform.hpp"

namespace sonoloc {

/// Inputs for the straight-walk solver. Stride s and speaker height h are
/// assumed known.
struct LineFixInput {
    DisplacementSeries d;
    double s = 0.6;
    double h = 0.0;
};

enum class FixProvenance { estimated, synchronized, dead_reckoned };

/// Straight-segment solution. x is the signed along-track coordinate of the
/// walk's start point relative to the foot of the perpendicular from the
/// speaker; y is the slant distance from the speaker to the walking line
/// (height included). L[i] / psi[i] give the horizontal distance and
/// direction at step point i per the estimation geometry. In the segment
/// frame (walker starts at origin heading +X) the speaker projects to
/// (X, Y) = (-x, sqrt(y^2 - h^2)).
struct PositionFix {
    double x = 0.0;
    double y = 0.0;
    std::vector<double> L;
    std::vector<double> psi;  // rad
    FixProvenance provenance = FixProvenance::estimated;
    double residual = 0.0;  // sum of squared step residuals
    double s = 0.6;
    double h = 0.0;
    std::vector<double> step_times;

    double rcs_x() const { return -x; }
    double rcs_y() const;
    /// Slant speaker distance at a time inside the walk (clamped to it).
    double distance_at(double t) const;
};

/// Sum of squared residuals e_i = l_i - l_{i+1} - d_i over usable steps,
/// and its analytic gradient in (x, y). Exposed for verification.
double line_cost(const LineFixInput& input, double x, double y);
void line_cost_gradient(const LineFixInput& input, double x, double y, double grad[2]);

/// Least-squares (x, y) via damped Gauss-Newton seeded from a coarse
/// multi-start grid. Throws DegenerateGeometry when the geometry cannot
/// pin down y (e.g. a collinear retreat), NonConvergence when no seed
/// converges, InvalidParams for fewer than 2 usable displacements.
PositionFix solve_line(const LineFixInput& input);

/// One straight piece of a turning walk. `heading` is the walking direction
/// relative to the first segment (gyroscope-integrated turns); the first
/// segment's heading must be 0. n_steps = 0 means d.d.size().
struct Segment {
    DisplacementSeries d;
    double heading = 0.0;
    std::size_t n_steps = 0;

    std::size_t steps() const { return n_steps != 0 ? n_steps : d.d.size(); }
};

/// Speaker ground-plane projection in the frame of the first segment.
struct GroundFix {
    double gx = 0.0;
    double gy = 0.0;
    FixProvenance provenance = FixProvenance::estimated;
    double residual = 0.0;
};

double ground_cost(const std::vector<Segment>& segments, double s, double h, double gx,
                   double gy);
void ground_cost_gradient(const std::vector<Segment>& segments, double s, double h,
                          double gx, double gy, double grad[2]);

/// Pool the squared step residuals of every segment (stride points placed
/// by the dead-reckoned chain) and minimize over the speaker projection.
GroundFix solve_multi_segment(const std::vector<Segment>& segments, double s, double h);

/// Pulse-timing synchronization state: true-time anchor for one pulse
/// position on the cycle grid. clock_ratio is the transmitter clock rate
/// relative to true time, so later sending times are t_s + k*T2/clock_ratio.
struct SyncState {
    double t_s = 0.0;
    double period = 0.25;
    double clock_ratio = 1.0;
    double valid_until = std::numeric_limits<double>::infinity();
};

struct AnchorOptions {
    double max_distance = 8.0;     // m, only close fixes are trusted
    double max_residual_rms = 5e-3;  // m per step residual
    double clock_ratio = 1.0;
};

/// Derive the pulse sending time from an estimated fix: the strongest
/// arrival inside the walk minus the modeled flight time. Throws NoAnchor
/// when the fix is unusable (wrong provenance, residual too high, too far)
/// or no arrival lies inside the walk.
SyncState anchor_sync(const PositionFix& fix, const PulseArrivals& arrivals,
                      const WaveformParams& params, const AnchorOptions& options = {});

struct SyncRange {
    double l = 0.0;  // slant, m
    double L = 0.0;  // horizontal, m
};

/// Range from one received pulse: l = v_a*(t_r - t_s - k*T2), with the
/// epoch integer k fixed by requiring 0 < l < l_m. Throws AmbiguousEpoch
/// when no or several k qualify, NegativeRange when l < h.
SyncRange sync_range(double t_r, const SyncState& sync, double h,
                     const WaveformParams& params);

/// Direction recovery once the slant distance l1 at the walk start is known
/// from pulse timing: 1-D least squares over the start direction, returned
/// in the horizontal plane. Throws DegenerateGeometry when l1 <= h.
double direction_after_sync(double l1, const DisplacementSeries& d, double s, double h);

/// Re-express a ground fix in the walker frame after further steps/turns
/// with no acoustic update. last_fix must be valid in the walker frame at
/// from_t; the result is in the walker frame at to_t, provenance
/// dead_reckoned.
GroundFix dead_reckon(const StepTrace& steps, const GroundFix& last_fix, double from_t,
                      double to_t);

}  // namespace sonoloc

#endif

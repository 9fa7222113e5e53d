#include "sonoloc/locator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sonoloc/errors.hpp"

namespace sonoloc {

namespace {

// Generic 2-parameter damped Gauss-Newton over a residual functor
// fill(p, r, J). Returns true when the step norm converged.
template <typename Fill>
bool levenberg(Fill&& fill, Eigen::Vector2d& p, double& cost, int max_iters = 100,
               double step_tol = 1e-6) {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    fill(p, r, J);
    cost = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::Matrix2d jtj = J.transpose() * J;
        const Eigen::Vector2d jtr = J.transpose() * r;
        Eigen::Matrix2d damped = jtj;
        damped(0, 0) += lambda * std::max(jtj(0, 0), 1e-12);
        damped(1, 1) += lambda * std::max(jtj(1, 1), 1e-12);
        const Eigen::Vector2d delta = damped.ldlt().solve(-jtr);
        if (!delta.allFinite()) return false;

        const Eigen::Vector2d cand = p + delta;
        Eigen::VectorXd r2;
        Eigen::MatrixXd J2;
        fill(cand, r2, J2);
        const double cost2 = r2.squaredNorm();
        if (cost2 < cost) {
            p = cand;
            r.swap(r2);
            J.swap(J2);
            cost = cost2;
            lambda = std::max(lambda / 3.0, 1e-12);
            if (delta.norm() < step_tol) return true;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) return false;
        }
    }
    return false;
}

struct LineModel {
    const LineFixInput& in;

    double dist(double x, double y, std::size_t i) const {
        const double u = x + static_cast<double>(i) * in.s;
        return std::sqrt(y * y + u * u);
    }
    void operator()(const Eigen::Vector2d& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
        const double x = p[0];
        const double y = std::abs(p[1]);
        const double ysign = p[1] < 0.0 ? -1.0 : 1.0;  // cost is even in y
        std::size_t count = 0;
        for (std::size_t i = 0; i < in.d.d.size(); ++i)
            if (in.d.is_valid(i)) ++count;
        r.resize(static_cast<Eigen::Index>(count));
        J.resize(static_cast<Eigen::Index>(count), 2);
        Eigen::Index row = 0;
        for (std::size_t i = 0; i < in.d.d.size(); ++i) {
            if (!in.d.is_valid(i)) continue;
            const double li = dist(x, y, i);
            const double ln = dist(x, y, i + 1);
            r[row] = li - ln - in.d.d[i];
            const double ui = x + static_cast<double>(i) * in.s;
            const double un = x + static_cast<double>(i + 1) * in.s;
            J(row, 0) = ui / li - un / ln;
            J(row, 1) = ysign * (y / li - y / ln);
            ++row;
        }
    }
};

std::size_t usable_count(const DisplacementSeries& d) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.d.size(); ++i)
        if (d.is_valid(i)) ++count;
    return count;
}

struct GroundModel {
    const std::vector<Segment>& segments;
    double s, h;
    // step-point positions, one vector per segment (steps()+1 points each)
    std::vector<std::vector<std::array<double, 2>>> points;

    GroundModel(const std::vector<Segment>& segs, double stride, double height)
        : segments(segs), s(stride), h(height) {
        std::array<double, 2> origin{0.0, 0.0};
        for (const auto& seg : segments) {
            std::vector<std::array<double, 2>> pts;
            const double cx = std::cos(seg.heading);
            const double cy = std::sin(seg.heading);
            for (std::size_t i = 0; i <= seg.steps(); ++i)
                pts.push_back({origin[0] + static_cast<double>(i) * s * cx,
                               origin[1] + static_cast<double>(i) * s * cy});
            origin = pts.back();
            points.push_back(std::move(pts));
        }
    }

    void operator()(const Eigen::Vector2d& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
        const double gx = p[0];
        const double gy = p[1];
        std::size_t count = 0;
        for (const auto& seg : segments) count += usable_count(seg.d);
        r.resize(static_cast<Eigen::Index>(count));
        J.resize(static_cast<Eigen::Index>(count), 2);
        Eigen::Index row = 0;
        for (std::size_t sidx = 0; sidx < segments.size(); ++sidx) {
            const auto& seg = segments[sidx];
            const auto& pts = points[sidx];
            for (std::size_t i = 0; i < seg.d.d.size(); ++i) {
                if (!seg.d.is_valid(i)) continue;
                const double ax = pts[i][0] - gx, ay = pts[i][1] - gy;
                const double bx = pts[i + 1][0] - gx, by = pts[i + 1][1] - gy;
                const double li = std::sqrt(ax * ax + ay * ay + h * h);
                const double ln = std::sqrt(bx * bx + by * by + h * h);
                r[row] = li - ln - seg.d.d[i];
                J(row, 0) = -ax / li + bx / ln;
                J(row, 1) = -ay / li + by / ln;
                ++row;
            }
        }
    }
};

// Relative conditioning of J at the solution; a vanishing small singular
// value means one direction of the parameter plane is unobservable.
template <typename Model>
double jacobian_conditioning(const Model& model, const Eigen::Vector2d& p) {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    model(p, r, J);
    const Eigen::Matrix2d jtj = J.transpose() * J;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(jtj);
    const double lo = std::max(eig.eigenvalues()[0], 0.0);
    const double hi = std::max(eig.eigenvalues()[1], 1e-300);
    return std::sqrt(lo / hi);
}

constexpr double kConditionFloor = 1e-5;

}  // namespace

double PositionFix::rcs_y() const {
    return std::sqrt(std::max(0.0, y * y - h * h));
}

double PositionFix::distance_at(double t) const {
    if (step_times.size() < 2) return std::sqrt(x * x + y * y);
    double along = 0.0;
    if (t <= step_times.front()) {
        along = 0.0;
    } else if (t >= step_times.back()) {
        along = static_cast<double>(step_times.size() - 1) * s;
    } else {
        for (std::size_t i = 0; i + 1 < step_times.size(); ++i) {
            if (t <= step_times[i + 1]) {
                const double frac = (t - step_times[i]) / (step_times[i + 1] - step_times[i]);
                along = (static_cast<double>(i) + frac) * s;
                break;
            }
        }
    }
    const double u = x + along;
    return std::sqrt(y * y + u * u);
}

double line_cost(const LineFixInput& input, double x, double y) {
    LineModel model{input};
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    model(Eigen::Vector2d(x, y), r, J);
    return r.squaredNorm();
}

void line_cost_gradient(const LineFixInput& input, double x, double y, double grad[2]) {
    LineModel model{input};
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    model(Eigen::Vector2d(x, y), r, J);
    const Eigen::Vector2d g = 2.0 * J.transpose() * r;
    grad[0] = g[0];
    grad[1] = g[1];
}

PositionFix solve_line(const LineFixInput& input) {
    if (!(input.s > 0.0)) throw InvalidParams("stride must be positive");
    if (input.h < 0.0) throw InvalidParams("height must be non-negative");
    if (usable_count(input.d) < 2)
        throw InvalidParams("need at least 2 usable displacements");

    const LineModel model{input};
    bool any_converged = false;
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best(0.0, std::max(input.h, 1.0));

    const double y_lo = std::max(input.h, 0.2);
    for (int ix = 0; ix < 9; ++ix) {
        for (int iy = 0; iy < 9; ++iy) {
            Eigen::Vector2d p(-20.0 + 5.0 * ix, y_lo + (30.0 - y_lo) * iy / 8.0);
            double cost = 0.0;
            const bool converged = levenberg(model, p, cost);
            p[1] = std::abs(p[1]);
            if (converged) any_converged = true;
            if (converged && cost < best_cost) {
                best_cost = cost;
                best = p;
            }
        }
    }
    if (!any_converged) throw NonConvergence("line solver failed from every seed");
    if (jacobian_conditioning(model, best) < kConditionFloor)
        throw DegenerateGeometry("geometry leaves the fix under-determined");

    PositionFix fix;
    fix.x = best[0];
    fix.y = best[1];
    fix.residual = best_cost;
    fix.provenance = FixProvenance::estimated;
    fix.s = input.s;
    fix.h = input.h;
    fix.step_times = input.d.step_times;

    const std::size_t n_points = input.d.d.size() + 1;
    fix.L.resize(n_points);
    fix.psi.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double u = fix.x + static_cast<double>(i) * input.s;
        const double L2 = u * u + std::max(0.0, fix.y * fix.y - input.h * input.h);
        fix.L[i] = std::sqrt(L2);
        const double c = fix.L[i] > 0.0 ? std::clamp(-u / fix.L[i], -1.0, 1.0) : 1.0;
        fix.psi[i] = std::acos(c);
    }
    return fix;
}

double ground_cost(const std::vector<Segment>& segments, double s, double h, double gx,
                   double gy) {
    GroundModel model(segments, s, h);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    model(Eigen::Vector2d(gx, gy), r, J);
    return r.squaredNorm();
}

void ground_cost_gradient(const std::vector<Segment>& segments, double s, double h,
                          double gx, double gy, double grad[2]) {
    GroundModel model(segments, s, h);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    model(Eigen::Vector2d(gx, gy), r, J);
    const Eigen::Vector2d g = 2.0 * J.transpose() * r;
    grad[0] = g[0];
    grad[1] = g[1];
}

GroundFix solve_multi_segment(const std::vector<Segment>& segments, double s, double h) {
    if (segments.empty()) throw InvalidParams("need at least one segment");
    if (std::abs(segments.front().heading) > 1e-9)
        throw InvalidParams("first segment heading defines the frame and must be 0");
    if (!(s > 0.0)) throw InvalidParams("stride must be positive");
    std::size_t total = 0;
    for (const auto& seg : segments) {
        if (seg.d.d.size() > seg.steps())
            throw InvalidParams("segment has more displacements than steps");
        total += usable_count(seg.d);
    }
    if (total < 2) throw InvalidParams("need at least 2 usable displacements");

    const GroundModel model(segments, s, h);
    bool any_converged = false;
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best(0.0, 1.0);
    for (int ix = 0; ix < 9; ++ix) {
        for (int iy = 0; iy < 9; ++iy) {
            Eigen::Vector2d p(-20.0 + 5.0 * ix, -20.0 + 5.0 * iy);
            double cost = 0.0;
            const bool converged = levenberg(model, p, cost);
            if (converged) any_converged = true;
            if (converged && cost < best_cost) {
                best_cost = cost;
                best = p;
            }
        }
    }
    if (!any_converged) throw NonConvergence("ground solver failed from every seed");
    if (jacobian_conditioning(model, best) < kConditionFloor)
        throw DegenerateGeometry("geometry leaves the fix under-determined");

    GroundFix fix;
    fix.gx = best[0];
    fix.gy = best[1];
    fix.residual = best_cost;
    fix.provenance = FixProvenance::estimated;
    return fix;
}

SyncState anchor_sync(const PositionFix& fix, const PulseArrivals& arrivals,
                      const WaveformParams& params, const AnchorOptions& options) {
    params.validate();
    if (fix.provenance != FixProvenance::estimated)
        throw NoAnchor("anchor requires a freshly estimated fix");
    const std::size_t n_res = fix.L.empty() ? 1 : fix.L.size() - 1;
    const double rms = std::sqrt(fix.residual / static_cast<double>(n_res));
    if (rms > options.max_residual_rms)
        throw NoAnchor("fix residual too high to anchor");
    if (fix.step_times.size() < 2) throw NoAnchor("fix carries no walk timing");

    // Strongest arrival inside the walk span.
    double best_score = -std::numeric_limits<double>::infinity();
    double best_arrival = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < arrivals.arrivals.size(); ++i) {
        const double t = arrivals.arrivals[i];
        if (t < fix.step_times.front() || t > fix.step_times.back()) continue;
        if (arrivals.peak_scores[i] > best_score) {
            best_score = arrivals.peak_scores[i];
            best_arrival = t;
            found = true;
        }
    }
    if (!found) throw NoAnchor("no pulse arrival inside the anchoring walk");

    const double l = fix.distance_at(best_arrival);
    if (l > options.max_distance)
        throw NoAnchor("anchoring fix is farther than the trust radius");

    SyncState sync;
    sync.t_s = best_arrival - l / params.v_a;
    sync.period = params.T2;
    sync.clock_ratio = options.clock_ratio;
    return sync;
}

SyncRange sync_range(double t_r, const SyncState& sync, double h,
                     const WaveformParams& params) {
    params.validate();
    if (t_r > sync.valid_until) throw OutOfRange("sync state expired");
    const double period = sync.period / sync.clock_ratio;
    const double elapsed = t_r - sync.t_s;

    const long long k0 = static_cast<long long>(std::floor(elapsed / period));
    int hits = 0;
    double l = 0.0;
    for (long long k = k0 - 1; k <= k0 + 1; ++k) {
        const double cand = params.v_a * (elapsed - static_cast<double>(k) * period);
        if (cand > 0.0 && cand < params.l_m) {
            ++hits;
            l = cand;
        }
    }
    if (hits != 1) throw AmbiguousEpoch("pulse epoch is not uniquely determined");
    if (l < h) throw NegativeRange("ranged distance is below the speaker height");
    return SyncRange{l, std::sqrt(l * l - h * h)};
}

double direction_after_sync(double l1, const DisplacementSeries& d, double s, double h) {
    if (!(l1 > h)) throw DegenerateGeometry("slant distance does not exceed the height");
    if (usable_count(d) < 2) throw InvalidParams("need at least 2 usable displacements");

    const auto cost = [&](double psi) {
        const double x = -l1 * std::cos(psi);
        const double y = l1 * std::sin(psi);
        double acc = 0.0;
        for (std::size_t i = 0; i < d.d.size(); ++i) {
            if (!d.is_valid(i)) continue;
            const double ui = x + static_cast<double>(i) * s;
            const double un = x + static_cast<double>(i + 1) * s;
            const double li = std::sqrt(y * y + ui * ui);
            const double ln = std::sqrt(y * y + un * un);
            const double e = li - ln - d.d[i];
            acc += e * e;
        }
        return acc;
    };

    // Coarse scan then golden-section refinement; the cost is smooth in psi.
    const int kGrid = 721;
    double best_psi = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGrid; ++i) {
        const double psi = std::numbers::pi * i / (kGrid - 1);
        const double c = cost(psi);
        if (c < best_cost) {
            best_cost = c;
            best_psi = psi;
        }
    }
    const double span = std::numbers::pi / (kGrid - 1);
    double lo = std::max(0.0, best_psi - span);
    double hi = std::min(std::numbers::pi, best_psi + span);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = lo + (1.0 - gr) * (hi - lo);
    double c2 = lo + gr * (hi - lo);
    double f1 = cost(c1), f2 = cost(c2);
    for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
        if (f1 < f2) {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = lo + (1.0 - gr) * (hi - lo);
            f1 = cost(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = cost(c2);
        }
    }
    const double psi1 = 0.5 * (lo + hi);

    const double horiz = std::sqrt(l1 * l1 - h * h);
    const double c = std::clamp(l1 * std::cos(psi1) / horiz, -1.0, 1.0);
    return std::acos(c);
}

GroundFix dead_reckon(const StepTrace& steps, const GroundFix& last_fix, double from_t,
                      double to_t) {
    if (to_t < from_t) throw OutOfRange("dead reckoning must move forward in time");
    const Pose a = trace_pose(steps, from_t);
    const Pose b = trace_pose(steps, to_t);

    // Fix -> world with the from_t frame, world -> to_t frame.
    const double gx_w = a.x + std::cos(a.heading) * last_fix.gx - std::sin(a.heading) * last_fix.gy;
    const double gy_w = a.y + std::sin(a.heading) * last_fix.gx + std::cos(a.heading) * last_fix.gy;
    const double dx = gx_w - b.x;
    const double dy = gy_w - b.y;

    GroundFix out;
    out.gx = std::cos(-b.heading) * dx - std::sin(-b.heading) * dy;
    out.gy = std::sin(-b.heading) * dx + std::cos(-b.heading) * dy;
    out.provenance = FixProvenance::dead_reckoned;
    out.residual = last_fix.residual;
    return out;
}

}  // namespace sonoloc

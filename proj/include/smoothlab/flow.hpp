#pragma once

// Hamiltonian flow of the principal symbol p: integrates
//   x' = dp/dxi,  xi' = -dp/dx
// with the implicit midpoint rule (symplectic and symmetric, so p is
// conserved to O(dt^2) uniformly in time), plus the non-trapping probe that
// classifies cosphere samples as escaped / trapped / inconclusive.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothlab/core.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/report.hpp"

namespace smoothlab {

struct StepPolicy {
    double dt = 1e-2;
    double fp_tol = 1e-13;   // fixed-point iteration tolerance (relative)
    int fp_maxit = 60;
    int max_halvings = 20;   // adaptive substepping before giving up
};

class FlowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<PhasePoint> points;
    double energy_drift = 0.0;  // max |p(t) - p(0)| / max(p(0), eps)
    bool complete = true;
    std::string error;
};

class HamiltonianFlow {
public:
    explicit HamiltonianFlow(const HamiltonianSpec& spec) : spec_(&spec) {}

    /// One implicit midpoint step of size dt (dt may be negative).
    /// Throws FlowError when the fixed-point iteration cannot be driven to
    /// tolerance even after halving the step `policy.max_halvings` times.
    PhasePoint step(const PhasePoint& z, double dt, const StepPolicy& policy) const {
        int halvings = 0;
        double remaining = dt;
        PhasePoint cur = z;
        while (std::abs(remaining) > 1e-300) {
            double h = remaining;
            std::optional<PhasePoint> next = try_step(cur, h, policy);
            while (!next) {
                if (++halvings > policy.max_halvings)
                    throw FlowError("implicit midpoint: step-size underflow (stiff region)");
                h *= 0.5;
                next = try_step(cur, h, policy);
            }
            cur = *next;
            remaining -= h;
        }
        return cur;
    }

    /// Advance by time t using steps of at most policy.dt.
    PhasePoint advance(const PhasePoint& z0, double t, const StepPolicy& policy) const {
        if (t == 0.0) return z0;
        double dir = t > 0.0 ? 1.0 : -1.0;
        double remaining = std::abs(t);
        PhasePoint z = z0;
        while (remaining > 0.0) {
            double h = std::min(policy.dt, remaining);
            z = step(z, dir * h, policy);
            remaining -= h;
        }
        return z;
    }

    FlowTrajectory integrate(const PhasePoint& z0, double t_end, const StepPolicy& policy,
                             int record_stride = 1) const {
        FlowTrajectory traj;
        double p0 = eval_p(*spec_, z0);
        double pref = std::max(std::abs(p0), 1e-30);
        traj.times.push_back(0.0);
        traj.points.push_back(z0);
        double dir = t_end >= 0.0 ? 1.0 : -1.0;
        double t = 0.0;
        PhasePoint z = z0;
        long k = 0;
        while (std::abs(t) < std::abs(t_end) - 1e-12) {
            double h = std::min(policy.dt, std::abs(t_end) - std::abs(t));
            try {
                z = step(z, dir * h, policy);
            } catch (const FlowError& e) {
                traj.complete = false;
                traj.error = e.what();
                return traj;
            }
            t += dir * h;
            ++k;
            traj.energy_drift = std::max(traj.energy_drift, std::abs(eval_p(*spec_, z) - p0) / pref);
            if (k % record_stride == 0) {
                traj.times.push_back(t);
                traj.points.push_back(z);
            }
        }
        if (traj.times.back() != t) {
            traj.times.push_back(t);
            traj.points.push_back(z);
        }
        return traj;
    }

    const HamiltonianSpec& spec() const { return *spec_; }

private:
    std::optional<PhasePoint> try_step(const PhasePoint& z, double h, const StepPolicy& policy) const {
        Vec x_next = z.x, xi_next = z.xi;
        for (int it = 0; it < policy.fp_maxit; ++it) {
            PhasePoint mid(0.5 * (z.x + x_next), 0.5 * (z.xi + xi_next));
            Vec vx = dp_dxi(*spec_, mid);
            Vec vxi = dp_dx(*spec_, mid) * -1.0;
            Vec nx = z.x + h * vx;
            Vec nxi = z.xi + h * vxi;
            double delta = std::sqrt((nx - x_next).norm2() + (nxi - xi_next).norm2());
            x_next = nx;
            xi_next = nxi;
            double scale = 1.0 + std::sqrt(x_next.norm2() + xi_next.norm2());
            if (delta <= policy.fp_tol * scale) return PhasePoint(x_next, xi_next);
        }
        return std::nullopt;
    }

    const HamiltonianSpec* spec_;
};

// ---------------------------------------------------------------------------
// Non-trapping probe.

enum class TrapStatus { escaped, trapped, inconclusive };

struct TrappingVerdict {
    TrapStatus status = TrapStatus::inconclusive;
    std::optional<double> escape_time;
    double max_radius = 0.0;
};

struct NontrappingResult {
    std::vector<TrappingVerdict> verdicts;
    bool nontrapping = false;  // all samples escaped
    double t_K = 0.0;          // max escape time over escaped samples
    int escaped = 0, trapped = 0, inconclusive = 0;
};

/// Cosphere sample: x uniform in the ball |x| <= x_radius, xi a uniform
/// direction rescaled so that p(x, xi) = 1.
inline std::vector<PhasePoint> sample_cosphere(const HamiltonianSpec& spec, int count,
                                               double x_radius, uint64_t seed) {
    std::vector<PhasePoint> out;
    out.reserve(static_cast<size_t>(count));
    Rng rng(seed);
    while (static_cast<int>(out.size()) < count) {
        Vec x = rng.unit_vector(spec.n) * (x_radius * std::pow(rng.uniform(), 1.0 / spec.n));
        Vec dir = rng.unit_vector(spec.n);
        double p = eval_p(spec, PhasePoint(x, dir));
        if (p <= 0.0) continue;
        out.emplace_back(x, dir * (1.0 / std::sqrt(p)));
    }
    return out;
}

/// Integrates each sample until |x| > escape_radius (escaped) or t_max is
/// reached. A bounded orbit that re-enters a 1e-2 neighbourhood of an
/// earlier state counts as trapped; otherwise the sample is inconclusive.
/// Numerical evidence only: a finite integration cannot certify trapping.
inline NontrappingResult nontrapping_probe(const HamiltonianSpec& spec,
                                           const std::vector<PhasePoint>& samples, double t_max,
                                           double escape_radius,
                                           const StepPolicy& policy = StepPolicy{}) {
    NontrappingResult result;
    result.verdicts.resize(samples.size());
    HamiltonianFlow flow(spec);

    parallel_for(samples.size(), [&](size_t i) {
        TrappingVerdict v;
        PhasePoint z = samples[i];
        v.max_radius = z.x.norm();
        const int revisit_stride = 25;
        const double revisit_tol = 1e-2;
        const double min_return_time = 1.0;  // leave the start neighbourhood first
        std::vector<PhasePoint> visited;
        double t = 0.0;
        long k = 0;
        bool failed = false;
        bool revisited = false;
        while (t < t_max) {
            try {
                z = flow.step(z, policy.dt, policy);
            } catch (const FlowError&) {
                failed = true;
                break;
            }
            t += policy.dt;
            ++k;
            double r = z.x.norm();
            v.max_radius = std::max(v.max_radius, r);
            if (r > escape_radius) {
                v.status = TrapStatus::escaped;
                v.escape_time = t;
                break;
            }
            if (!revisited && t > min_return_time &&
                phase_distance(z, samples[i]) < revisit_tol)
                revisited = true;
            if (!revisited && k % revisit_stride == 0) {
                for (size_t j = 0; j + 4 < visited.size(); ++j) {  // skip recent states
                    if (phase_distance(z, visited[j]) < revisit_tol) {
                        revisited = true;
                        break;
                    }
                }
                visited.push_back(z);
            }
        }
        if (v.status != TrapStatus::escaped) {
            if (failed)
                v.status = TrapStatus::inconclusive;
            else if (revisited && v.max_radius <= escape_radius)
                v.status = TrapStatus::trapped;
            else
                v.status = TrapStatus::inconclusive;
        }
        result.verdicts[i] = v;
    });

    for (const auto& v : result.verdicts) {
        switch (v.status) {
            case TrapStatus::escaped:
                ++result.escaped;
                result.t_K = std::max(result.t_K, *v.escape_time);
                break;
            case TrapStatus::trapped:
                ++result.trapped;
                break;
            case TrapStatus::inconclusive:
                ++result.inconclusive;
                break;
        }
    }
    result.nontrapping = (result.escaped == static_cast<int>(samples.size()));
    return result;
}

/// Trajectory dump: t, x_1..x_n, xi_1..xi_n, p.
inline void write_trajectory_csv(const HamiltonianSpec& spec, const FlowTrajectory& traj,
                                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "t";
    for (int i = 1; i <= spec.n; ++i) out << ",x" << i;
    for (int i = 1; i <= spec.n; ++i) out << ",xi" << i;
    out << ",p\n";
    for (size_t k = 0; k < traj.times.size(); ++k) {
        out << format_double(traj.times[k]);
        for (int i = 0; i < spec.n; ++i) out << "," << format_double(traj.points[k].x[i]);
        for (int i = 0; i < spec.n; ++i) out << "," << format_double(traj.points[k].xi[i]);
        out << "," << format_double(eval_p(spec, traj.points[k])) << "\n";
    }
}

}  // namespace smoothlab

#pragma once

// Unitary time stepping for (D_t + P) u = f. Crank-Nicolson with midpoint
// coefficient sampling is the workhorse (a Cayley transform of the Hermitian
// discrete generator, so exactly norm preserving up to solver tolerance);
// Strang splitting is available on flat metrics as a cross-check. The CN
// system (I + i dt/2 P) u+ = b is solved by conjugate gradients on the
// Hermitian positive definite normal operator I + (dt/2)^2 P^2, warm-started
// from the previous step.

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smoothlab/grid.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/weyl.hpp"

namespace smoothlab {

enum class Scheme { crank_nicolson, strang_split };

struct PropagatorConfig {
    Scheme scheme = Scheme::crank_nicolson;
    double dt = 1e-3;
    double solver_tol = 1e-10;
    int max_iterations = 4000;
    int snapshot_stride = 10;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_norm(residual) {}
    double residual_norm = 0.0;
};

namespace detail {

/// CG on M = I + alpha^2 P^2 (Hermitian positive definite).
inline GridFunction solve_normal_cg(const POperator& P, double alpha, const GridFunction& rhs,
                                    const GridFunction& guess, double tol, int maxit) {
    auto apply_M = [&](const GridFunction& v) {
        GridFunction pv = P.apply(v);
        GridFunction ppv = P.apply(pv);
        ppv *= std::complex<double>(alpha * alpha, 0.0);
        ppv += v;
        return ppv;
    };
    GridFunction x = guess;
    GridFunction r = rhs;
    r -= apply_M(x);
    GridFunction p = r;
    double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return GridFunction(rhs.grid());
    double rs = r.norm2();
    for (int it = 0; it < maxit; ++it) {
        if (std::sqrt(rs) <= tol * rhs_norm) return x;
        GridFunction q = apply_M(p);
        double pq = std::real(inner(p, q));
        if (pq <= 0.0) throw SolverError("cn solver: lost positive definiteness", std::sqrt(rs));
        double a = rs / pq;
        x.axpy(std::complex<double>(a, 0.0), p);
        r.axpy(std::complex<double>(-a, 0.0), q);
        double rs_new = r.norm2();
        double beta = rs_new / rs;
        rs = rs_new;
        GridFunction pnew = r;
        pnew.axpy(std::complex<double>(beta, 0.0), p);
        p = std::move(pnew);
    }
    throw SolverError("cn solver: no convergence", std::sqrt(rs) / rhs_norm);
}

}  // namespace detail

/// One Crank-Nicolson step with the operator already bound at the interval
/// midpoint. `f_mid` is the midpoint-sampled forcing (may be null); `warm`
/// seeds the Krylov solve.
inline GridFunction cn_step(const POperator& Pmid, const GridFunction& u, double dt,
                            const GridFunction* f_mid, double tol, int maxit,
                            const GridFunction* warm = nullptr) {
    const double alpha = 0.5 * dt;
    GridFunction pu = Pmid.apply(u);
    GridFunction b = u;
    b.axpy(std::complex<double>(0.0, -alpha), pu);
    if (f_mid) b.axpy(std::complex<double>(0.0, dt), *f_mid);
    // normal equations right-hand side: (I - i alpha P) b
    GridFunction pb = Pmid.apply(b);
    GridFunction rhs = b;
    rhs.axpy(std::complex<double>(0.0, -alpha), pb);
    return detail::solve_normal_cg(Pmid, alpha, rhs, warm ? *warm : u, tol, maxit);
}

/// One Strang split step, flat metric without magnetic terms only:
/// half potential phase, full kinetic multiplier, half potential phase.
class StrangStepper {
public:
    StrangStepper(const HamiltonianSpec& spec, GridPtr g) : spec_(&spec), g_(std::move(g)) {
        if (!spec.flat_metric || spec.has_magnetic)
            throw std::invalid_argument("strang stepper requires a flat metric without magnetic terms");
        vcoef_ = spec.potential
                     ? collar_flatten(*g_, [&](const Vec& x) { return spec.potential_at(0.0, x); })
                     : std::vector<double>(g_->size(), 0.0);
    }

    GridFunction step(const GridFunction& u, double t, double dt) const {
        std::vector<double> v = vcoef_;
        if (spec_->time_dependent_coefficients())
            v = collar_flatten(*g_, [&](const Vec& x) { return spec_->potential_at(t + 0.5 * dt, x); });
        GridFunction out = u;
        for (size_t i = 0; i < out.size(); ++i) out[i] *= std::polar(1.0, -0.5 * dt * v[i]);
        fft_forward_inplace(*g_, out.data());
        int N = g_->points_per_axis();
        for (size_t flat = 0; flat < out.size(); ++flat) {
            Vec xi = g_->freq_point(flat);
            // symmetrized |xi|^2 at the Nyquist slot equals the plain value
            out[flat] *= std::polar(1.0, -dt * xi.norm2());
        }
        fft_backward_inplace(*g_, out.data());
        for (size_t i = 0; i < out.size(); ++i) out[i] *= std::polar(1.0, -0.5 * dt * v[i]);
        return out;
    }

private:
    const HamiltonianSpec* spec_;
    GridPtr g_;
    std::vector<double> vcoef_;
};

struct Snapshots {
    std::vector<double> times;
    std::vector<GridFunction> states;
    std::vector<double> step_times;  // per step
    std::vector<double> step_norms;
    double generator_scale = 0.0;    // rough |P| bound; dt * scale is the accuracy budget
    double max_unitarity_defect = 0.0;
};

/// Rough spectral scale of the bound operator on this grid.
inline double generator_scale_estimate(const HamiltonianSpec& spec, const GridSpec& g) {
    double xi2 = g.nyquist() * g.nyquist() * g.dim();
    double gmax = 0.0, vmax = 0.0, amax = 0.0;
    for (size_t i = 0; i < g.size(); i += std::max<size_t>(1, g.size() / 4096)) {
        Vec x = g.point(i);
        double grow = 0.0;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) grow += std::abs(spec.g_at(j, k, x));
        gmax = std::max(gmax, grow);
        if (spec.potential) vmax = std::max(vmax, std::abs(spec.potential_at(0.0, x)));
        for (int j = 0; j < spec.n && spec.has_magnetic; ++j)
            amax = std::max(amax, std::abs(spec.magnetic_at(j, 0.0, x)));
    }
    return gmax * xi2 + vmax + 2.0 * amax * std::sqrt(xi2);
}

/// Integrates (D_t + P) u = f from u0 over [0, T], storing snapshots at the
/// configured stride (plus the final state). Forcing, when present, is
/// sampled at step midpoints.
inline Snapshots solve(const HamiltonianSpec& spec, const PropagatorConfig& cfg,
                       const GridFunction& u0, double T,
                       const std::function<GridFunction(double)>* forcing = nullptr) {
    if (T > spec.T + 1e-12) throw std::invalid_argument("solve: T exceeds the spec horizon");
    GridPtr g = u0.grid();
    Snapshots out;
    out.generator_scale = generator_scale_estimate(spec, *g);
    out.times.push_back(0.0);
    out.states.push_back(u0);
    if (T <= 0.0) return out;

    long nsteps = static_cast<long>(std::ceil(T / cfg.dt - 1e-12));
    double dt = T / static_cast<double>(nsteps);

    std::optional<POperator> Pstatic;
    std::optional<StrangStepper> strang;
    if (cfg.scheme == Scheme::strang_split) {
        strang.emplace(spec, g);
    } else if (!spec.time_dependent_coefficients()) {
        Pstatic.emplace(spec, g, 0.0);
    }

    GridFunction u = u0;
    GridFunction warm = u0;
    for (long k = 0; k < nsteps; ++k) {
        double t = k * dt;
        double norm_before = u.norm();
        GridFunction next(g);
        if (cfg.scheme == Scheme::strang_split) {
            if (forcing) throw std::invalid_argument("strang scheme does not support forcing");
            next = strang->step(u, t, dt);
        } else {
            std::optional<POperator> Pmid;
            const POperator& P = Pstatic ? *Pstatic : (Pmid.emplace(spec, g, t + 0.5 * dt), *Pmid);
            std::optional<GridFunction> f;
            if (forcing) f = (*forcing)(t + 0.5 * dt);
            next = cn_step(P, u, dt, f ? &*f : nullptr, cfg.solver_tol, cfg.max_iterations, &warm);
            warm = next;
        }
        u = std::move(next);
        out.step_times.push_back(t + dt);
        out.step_norms.push_back(u.norm());
        if (!forcing && norm_before > 0.0)
            out.max_unitarity_defect =
                std::max(out.max_unitarity_defect, std::abs(u.norm() / norm_before - 1.0));
        if ((k + 1) % cfg.snapshot_stride == 0 || k + 1 == nsteps) {
            out.times.push_back(t + dt);
            out.states.push_back(u);
        }
    }
    return out;
}

}  // namespace smoothlab

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "smoothlab/propagator.hpp"

using namespace smoothlab;
using Cx = std::complex<double>;

namespace {

GridFunction coherent(GridPtr g, double x0, double k0, double width = 1.0) {
    return GridFunction::sample(g, [=](const Vec& x) {
        double r2 = 0.0;
        for (int a = 0; a < x.dim(); ++a) {
            double d = x[a] - (a == 0 ? x0 : 0.0);
            r2 += d * d;
        }
        return std::polar(std::exp(-r2 / (2.0 * width * width)), k0 * x[0]);
    });
}

double center_of_mass(const GridFunction& u) {
    double m = 0.0, xw = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        double w = std::norm(u[i]);
        m += w;
        xw += w * u.grid()->point(i)[0];
    }
    return xw / m;
}

}  // namespace

TEST_CASE("plane-wave phase against the exact Fourier propagator") {
    auto g = make_grid(1, 128, 8.0);
    auto spec = make_flat(1);
    double k = g->freq(10);

    // one CN step carries phase error ~ dt^3 k^6 / 12
    auto phase_error = [&](double dt) {
        PropagatorConfig cfg;
        cfg.dt = dt;
        cfg.snapshot_stride = 1;
        GridFunction u = plane_wave_test(g, k);
        auto snaps = solve(spec, cfg, u, dt);
        Cx ratio = snaps.states.back()[0] / (u[0] * std::polar(1.0, -k * k * dt));
        return std::abs(std::arg(ratio));
    };
    double z_small = 5e-3 / (k * k);  // dt k^2 = 5e-3
    CHECK(phase_error(z_small) < 1e-8);
    // cubic scaling in dt
    double e1 = phase_error(8.0 * z_small);
    double e2 = phase_error(4.0 * z_small);
    CHECK_THAT(e1 / e2, Catch::Matchers::WithinRel(8.0, 0.15));
}

TEST_CASE("unitarity over a thousand steps with the quartic potential") {
    auto g = make_grid(1, 256, 8.0);
    auto spec = make_quartic(1);
    PropagatorConfig cfg;
    cfg.dt = 1e-3;
    cfg.snapshot_stride = 100;
    GridFunction u0 = coherent(g, 0.5, 6.0, 0.7);
    u0.normalize();
    auto snaps = solve(spec, cfg, u0, 1.0);
    CHECK(snaps.step_norms.size() == 1000);
    for (double nrm : snaps.step_norms) CHECK(std::abs(nrm - 1.0) < 1e-6);
    CHECK(snaps.max_unitarity_defect < 1e-8);
}

TEST_CASE("T = 0 returns the single initial snapshot") {
    auto g = make_grid(1, 64, 6.0);
    GridFunction u0 = coherent(g, 0.0, 2.0);
    auto snaps = solve(make_flat(1), PropagatorConfig{}, u0, 0.0);
    REQUIRE(snaps.states.size() == 1);
    CHECK(snaps.times[0] == 0.0);
}

TEST_CASE("time reversal by conjugation returns the initial state") {
    auto g = make_grid(1, 128, 8.0);
    auto spec = make_flat(1);
    PropagatorConfig cfg;
    cfg.dt = 1e-3;
    GridFunction u0 = coherent(g, -0.5, 4.0, 0.8);
    u0.normalize();
    auto fwd = solve(spec, cfg, u0, 0.5);
    GridFunction conj_state = fwd.states.back();
    for (size_t i = 0; i < conj_state.size(); ++i) conj_state[i] = std::conj(conj_state[i]);
    auto back = solve(spec, cfg, conj_state, 0.5);
    GridFunction recovered = back.states.back();
    for (size_t i = 0; i < recovered.size(); ++i) recovered[i] = std::conj(recovered[i]);
    recovered -= u0;
    CHECK(recovered.norm() < 1e-6);
}

TEST_CASE("coherent state tracks the classical oscillator orbit") {
    auto g = make_grid(1, 256, 10.0);
    auto spec = make_harmonic(1);
    PropagatorConfig cfg;
    cfg.dt = 5e-4;
    cfg.snapshot_stride = 200;
    double x0 = 1.0, k0 = 2.0;
    GridFunction u0 = coherent(g, x0, k0);  // e^{-(x-x0)^2/2} is the natural width here
    u0.normalize();
    auto snaps = solve(spec, cfg, u0, 1.0);
    // classical flow of xi^2 + x^2: x(t) = x0 cos 2t + k0 sin 2t
    for (size_t s = 0; s < snaps.times.size(); ++s) {
        double t = snaps.times[s];
        double want = x0 * std::cos(2.0 * t) + k0 * std::sin(2.0 * t);
        CHECK_THAT(center_of_mass(snaps.states[s]), Catch::Matchers::WithinAbs(want, 5e-3));
    }
}

TEST_CASE("strang splitting cross-checks crank-nicolson on the flat metric") {
    auto g = make_grid(1, 256, 10.0);
    auto spec = make_harmonic(1);
    GridFunction u0 = coherent(g, 0.8, 3.0);
    u0.normalize();
    PropagatorConfig cn;
    cn.dt = 2.5e-4;
    PropagatorConfig st = cn;
    st.scheme = Scheme::strang_split;
    auto a = solve(spec, cn, u0, 0.4);
    auto b = solve(spec, st, u0, 0.4);
    GridFunction diff = a.states.back();
    diff -= b.states.back();
    CHECK(diff.norm() < 1e-5);

    SECTION("strang rejects curved metrics") {
        CHECK_THROWS_AS(StrangStepper(make_perturbed_flat(1, 0.1, 1.0), g), std::invalid_argument);
    }
}

TEST_CASE("manufactured solution converges at second order") {
    auto g = make_grid(1, 128, 8.0);
    auto spec = make_harmonic(1);

    // u*(t, x) = (g1 + g2 cos t) e^{-i omega t} with confined g1, g2;
    // f = (D_t + P) u* is assembled by direct application
    const double omega = 1.5;
    GridFunction g1 = coherent(g, 0.3, 1.0, 0.8);
    GridFunction g2 = coherent(g, -0.4, 2.0, 0.6);
    POperator P(spec, g, 0.0);

    auto exact = [&](double t) {
        GridFunction u = g1;
        u.axpy(Cx(std::cos(t), 0.0), g2);
        u *= std::polar(1.0, -omega * t);
        return u;
    };
    std::function<GridFunction(double)> forcing = [&](double t) {
        // D_t u* = -i d/dt u* = (i sin t g2 - omega (g1 + cos t g2)) e^{-i omega t}
        GridFunction f(g->shared_from_this ? nullptr : g);  // placeholder, rebuilt below
        GridFunction amp = g1;
        amp.axpy(Cx(std::cos(t), 0.0), g2);
        GridFunction dt_part = g2;
        dt_part *= Cx(0.0, std::sin(t));
        dt_part.axpy(Cx(-omega, 0.0), amp);
        GridFunction pu = P.apply(amp);
        dt_part += pu;
        dt_part *= std::polar(1.0, -omega * t);
        return dt_part;
    };

    auto run = [&](double dt) {
        PropagatorConfig cfg;
        cfg.dt = dt;
        cfg.snapshot_stride = 1 << 20;  // final state only
        auto snaps = solve(spec, cfg, exact(0.0), 0.5, &forcing);
        GridFunction err = snaps.states.back();
        err -= exact(0.5);
        return err.norm();
    };
    double e1 = run(2e-3);
    double e2 = run(1e-3);
    double order = std::log2(e1 / e2);
    CHECK(order > 1.7);
    CHECK(order < 2.3);
}

TEST_CASE("generator form stays real along the evolution") {
    auto g = make_grid(1, 128, 8.0);
    auto spec = make_quartic(1);
    PropagatorConfig cfg;
    cfg.dt = 1e-3;
    cfg.snapshot_stride = 50;
    GridFunction u0 = coherent(g, 0.4, 4.0, 0.8);
    u0.normalize();
    auto snaps = solve(spec, cfg, u0, 0.3);
    POperator P(spec, g, 0.0);
    for (const auto& u : snaps.states) {
        Cx q = inner(P.apply(u), u);
        CHECK(std::abs(q.imag()) <= 1e-10 * std::abs(q.real()) + 1e-12);
    }
}

TEST_CASE("solver reports non-convergence") {
    auto g = make_grid(1, 64, 6.0);
    auto spec = make_quartic(1);
    POperator P(spec, g, 0.0);
    GridFunction u = coherent(g, 0.0, 3.0);
    CHECK_THROWS_AS(cn_step(P, u, 1e-2, nullptr, 1e-14, 2), SolverError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "smoothlab/cutoffs.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/seminorm.hpp"
#include "smoothlab/symbol.hpp"

using namespace smoothlab;

TEST_CASE("japanese bracket closed forms") {
    CHECK(japanese_bracket(Vec{0.0, 0.0}) == 1.0);
    CHECK_THAT(japanese_bracket(Vec{3.0, 4.0}), Catch::Matchers::WithinRel(std::sqrt(26.0), 1e-15));
    CHECK_THAT(japanese_bracket(Vec{1.0}), Catch::Matchers::WithinRel(std::sqrt(2.0), 1e-15));
}

TEST_CASE("phase point validation") {
    CHECK_THROWS_AS(PhasePoint(Vec{1.0}, Vec{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(PhasePoint(Vec{std::nan("")}, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("principal symbol evaluation") {
    auto flat = make_flat(2);
    CHECK(eval_p(flat, PhasePoint(Vec{0.0, 0.0}, Vec{3.0, 4.0})) == 25.0);
    CHECK(eval_p(flat, PhasePoint(Vec{1.0, -2.0}, Vec{0.0, 0.0})) == 0.0);

    auto conf = make_radial_conformal(
        2, [](double r) { return 1.0 + 0.5 / japanese_bracket(r); },
        [](double r) {
            double br = japanese_bracket(r);
            return -0.5 * r / (br * br * br);
        });
    CHECK_THAT(eval_p(conf, PhasePoint(Vec{0.0, 0.0}, Vec{1.0, 0.0})),
               Catch::Matchers::WithinRel(1.5, 1e-14));

    CHECK_THROWS_AS(eval_p(flat, PhasePoint(Vec{0.0}, Vec{1.0})), std::invalid_argument);
}

TEST_CASE("principal symbol homogeneity in xi") {
    auto spec = make_perturbed_flat(2, 0.1, 1.0);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        Vec x = rng.unit_vector(2) * rng.uniform(0.0, 10.0);
        Vec xi = rng.unit_vector(2) * rng.uniform(0.2, 5.0);
        double p = eval_p(spec, PhasePoint(x, xi));
        for (double s : {2.0, 10.0}) {
            double ps = eval_p(spec, PhasePoint(x, xi * s));
            CHECK_THAT(ps, Catch::Matchers::WithinRel(s * s * p, 1e-13));
        }
    }
}

TEST_CASE("cutoff family identities") {
    CutoffFamily cuts(0.125);
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        double t = rng.uniform(-3.0, 3.0);
        CHECK(cuts.psi0(t) + cuts.psi(t) + cuts.psi(-t) == 1.0);
        CHECK(cuts.psi1(t) == -sgn(t) * cuts.psi(std::abs(t)));
    }
    // monotonicity of the switch
    for (int i = 0; i < 2000; ++i) {
        double t = rng.uniform(-1.0, 1.0);
        CHECK(cuts.psi_deriv(t) >= 0.0);
    }
    // support control
    CHECK(cuts.psi(0.124) == 0.0);
    CHECK(cuts.psi(0.251) == 1.0);
    CHECK(cuts.chi_unit(0.5) == 1.0);
    CHECK(cuts.chi_unit(1.0) == 0.0);
    CHECK(cuts.theta_cut(1.0) == 1.0);
    CHECK(cuts.theta_cut(2.0) == 0.0);
}

TEST_CASE("cutoff derivative identities against finite differences") {
    CutoffFamily cuts(0.125);
    auto fd = [](auto&& f, double t) { return (f(t + 1e-6) - f(t - 1e-6)) / 2e-6; };
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        double t = rng.uniform(-0.5, 0.5);
        if (std::abs(t) < 1e-3) continue;  // sgn kink at zero
        double d0 = fd([&](double s) { return cuts.psi0(s); }, t);
        double d1 = fd([&](double s) { return cuts.psi1(s); }, t);
        CHECK_THAT(cuts.psi0_deriv(t), Catch::Matchers::WithinAbs(d0, 1e-4));
        CHECK_THAT(cuts.psi1_deriv(t), Catch::Matchers::WithinAbs(d1, 1e-4));
        CHECK_THAT(cuts.psi0_deriv(t), Catch::Matchers::WithinAbs(-sgn(t) * cuts.psi_deriv(std::abs(t)), 1e-12));
        CHECK_THAT(cuts.psi1_deriv(t), Catch::Matchers::WithinAbs(-cuts.psi_deriv(std::abs(t)), 1e-12));
    }
}

TEST_CASE("checkerboard potential") {
    SECTION("m below 2 rejected") {
        CHECK_THROWS_AS(build_checkerboard_potential(1.5), std::invalid_argument);
    }
    auto V = build_checkerboard_potential(3.0);
    DyadicPartition part;
    Vec origin{0.0, 0.0};
    CHECK(V(0.0, origin, Vec(2)) == 0.0);

    Rng rng(31);
    SECTION("partition of unity residual") {
        for (int i = 0; i < 10000; ++i) {
            Vec x = rng.unit_vector(2) * std::exp(rng.uniform(std::log(1e-3), std::log(1024.0)));
            CHECK(std::abs(part.partition_residual(x)) < 1e-12);
        }
    }
    SECTION("lower bound V >= -|x|^2") {
        for (int i = 0; i < 10000; ++i) {
            Vec x = rng.unit_vector(2) * rng.uniform(0.0, 1024.0);
            CHECK(V(0.0, x, Vec(2)) + x.norm2() >= -1e-9 * (1.0 + x.norm2()));
        }
    }
    SECTION("pure |x|^m on even-shell cores") {
        // at |x| = 2^j the only live shell term is phi(2^{-j} x) = 1
        for (int j = 0; j <= 8; j += 2) {
            Vec x = Vec{std::ldexp(1.0, j), 0.0};
            double r2 = x.norm2();
            CHECK_THAT(V(0.0, x, Vec(2)), Catch::Matchers::WithinRel(std::pow(r2, 1.5), 1e-12));
        }
    }
}

TEST_CASE("finite-difference derivatives against analytic a0 partials") {
    // a0 = x.xi / <xi>
    SymbolFn a0 = SymbolFn::phase(
        [](const Vec& x, const Vec& xi) { return x.dot(xi) / japanese_bracket(xi); });
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        Vec x = rng.unit_vector(2) * rng.uniform(0.1, 20.0);
        Vec xi = rng.unit_vector(2) * rng.uniform(0.1, 20.0);
        double br = japanese_bracket(xi);
        for (int l = 0; l < 2; ++l) {
            MultiIndex beta = zero_index();
            beta[static_cast<size_t>(l)] = 1;
            double want_x = xi[l] / br;
            CHECK_THAT(a0.derivative(zero_index(), beta, 0.0, x, xi),
                       Catch::Matchers::WithinAbs(want_x, 1e-7 * (1.0 + std::abs(want_x))));
            MultiIndex alpha = zero_index();
            alpha[static_cast<size_t>(l)] = 1;
            double want_xi = x[l] / br - x.dot(xi) * xi[l] / (br * br * br);
            CHECK_THAT(a0.derivative(alpha, zero_index(), 0.0, x, xi),
                       Catch::Matchers::WithinAbs(want_xi, 1e-6 * (1.0 + std::abs(want_xi))));
        }
    }
    // a mixed second derivative: d_xi1 d_x1 a0 = 1/<xi> - xi1^2/<xi>^3
    Vec x{1.0, 2.0}, xi{0.7, -0.4};
    MultiIndex alpha = {1, 0, 0}, beta = {1, 0, 0};
    double br = japanese_bracket(xi);
    double want = 1.0 / br - xi[0] * xi[0] / (br * br * br);
    CHECK_THAT(a0.derivative(alpha, beta, 0.0, x, xi), Catch::Matchers::WithinAbs(want, 1e-6));
}

TEST_CASE("finite differences converge under step halving") {
    SymbolFn q = SymbolFn::phase(
        [](const Vec& x, const Vec& xi) { return std::sin(x[0]) * std::exp(-0.1 * xi.norm2()); });
    SymbolFn q_fine = q;
    FdPolicy halved;
    for (auto& b : halved.base) b *= 0.5;
    q_fine.with_fd_policy(halved);

    Vec x{0.7}, xi{1.3};
    MultiIndex one = {1, 0, 0};
    double d1 = q.derivative(zero_index(), one, 0.0, x, xi);
    double d1h = q_fine.derivative(zero_index(), one, 0.0, x, xi);
    CHECK(std::abs(d1 - d1h) < 1e-8);
    MultiIndex two = {2, 0, 0};
    double d2 = q.derivative(two, zero_index(), 0.0, x, xi);
    double d2h = q_fine.derivative(two, zero_index(), 0.0, x, xi);
    CHECK(std::abs(d2 - d2h) < 1e-5);
}

TEST_CASE("seminorm membership checks") {
    ShellSampleSpec shells;
    shells.dirs_per_shell = 6;

    SECTION("<x> lies in S(<x>, g)") {
        SymbolFn q = SymbolFn::space([](const Vec& x) { return japanese_bracket(x); });
        SymbolFn M = SymbolFn::space([](const Vec& x) { return japanese_bracket(x); });
        auto rep = seminorm_check(q, M, 2, shells, 2);
        CHECK(rep.pass);
    }
    SECTION("exp(|x|^2) fails against polynomial weights") {
        ShellSampleSpec small = shells;
        small.x_radii = {0.5, 1, 2, 4, 8};  // exp overflows past that
        SymbolFn q = SymbolFn::space([](const Vec& x) { return std::exp(x.norm2()); });
        SymbolFn M = SymbolFn::space([](const Vec& x) { return std::pow(japanese_bracket(x), 4.0); });
        auto rep = seminorm_check(q, M, 1, small, 2);
        CHECK_FALSE(rep.pass);
    }
    SECTION("a0 lies in S(<x>, g), constants within factor 4 across radii") {
        SymbolFn q = SymbolFn::phase(
            [](const Vec& x, const Vec& xi) { return x.dot(xi) / japanese_bracket(xi); });
        SymbolFn M = SymbolFn::space([](const Vec& x) { return japanese_bracket(x); });
        auto rep = seminorm_check(q, M, 2, shells, 2);
        CHECK(rep.pass);
        // flatness of the order-zero constant across x shells
        double lo = 1e300, hi = 0.0;
        for (size_t i = 0; i < rep.rows.size(); ++i) {
            if (rep.rows[i][0] == 0.0 && rep.rows[i][1] == 0.0) {
                lo = std::min(lo, rep.rows[i][3]);
                hi = std::max(hi, rep.rows[i][3]);
            }
        }
        CHECK(hi / lo < 4.0);
    }
}

TEST_CASE("shipped metrics stay in the symbol class") {
    for (const char* name : {"flat", "harmonic", "quartic", "perturbed_flat"}) {
        for (int n : {1, 2}) {
            auto spec = make_spec_by_name(name, n, 4.0);
            validate_spec(spec);
            SymbolFn p = SymbolFn::phase([spec](const Vec& x, const Vec& xi) {
                return eval_p(spec, PhasePoint(x, xi));
            });
            SymbolFn M = SymbolFn::phase([](const Vec&, const Vec& xi) {
                return 1.0 + xi.norm2();
            });
            ShellSampleSpec shells;
            shells.dirs_per_shell = 12;
            auto rep = seminorm_check(p, M, 2, shells, n);
            INFO("spec " << name << " n=" << n);
            CHECK(rep.pass);
        }
    }
}

TEST_CASE("metric gradient decay trend") {
    CHECK(metric_decay_trend(make_perturbed_flat(2, 0.1, 1.0)));
    CHECK(metric_decay_trend(make_flat(2)));
}

TEST_CASE("checkerboard spec validates") {
    auto spec = make_checkerboard(2, 3.0);
    validate_spec(spec);
    CHECK(spec.m == 3.0);
    CHECK_THROWS_AS(make_checkerboard(2, 1.5), std::invalid_argument);
}

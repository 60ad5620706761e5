#pragma once

// Empirical symbol-class membership test for S(M, g) with the metric
// g = dx^2/<x>^2 + dxi^2/<xi>^2: for every derivative pair (alpha, beta) up
// to a requested order the ratio |d^beta_x d^alpha_xi q| / (M <x>^{-|beta|}
// <xi>^{-|alpha|}) is maximized per dyadic shell, and membership fails when
// the per-shell constant keeps growing (more than 2x shell to shell).

#include <cmath>
#include <string>
#include <vector>

#include "smoothlab/core.hpp"
#include "smoothlab/fitting.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/report.hpp"
#include "smoothlab/symbol.hpp"

namespace smoothlab {

struct ShellSampleSpec {
    std::vector<double> x_radii{0.5, 1, 2, 4, 8, 16, 32, 64};
    std::vector<double> xi_radii{0.5, 1, 2, 4, 8, 16, 32, 64};
    int dirs_per_shell = 8;
    uint64_t seed = 1234;
};

namespace detail {

inline std::vector<MultiIndex> multi_indices_up_to(int n, int max_order) {
    std::vector<MultiIndex> out;
    for (int total = 0; total <= max_order; ++total) {
        if (n == 1) {
            out.push_back({total, 0, 0});
        } else if (n == 2) {
            for (int i = 0; i <= total; ++i) out.push_back({i, total - i, 0});
        } else {
            for (int i = 0; i <= total; ++i)
                for (int j = 0; j <= total - i; ++j) out.push_back({i, j, total - i - j});
        }
    }
    return out;
}

inline std::string index_to_string(const MultiIndex& m, int n) {
    std::string s = "(";
    for (int i = 0; i < n; ++i) {
        if (i) s += " ";
        s += std::to_string(m[static_cast<size_t>(i)]);
    }
    return s + ")";
}

}  // namespace detail

/// One row per (alpha, beta, x-shell): the empirical constant for that shell.
/// Pass iff no (alpha, beta) has a consecutive-shell growth factor above 2
/// in either the |x| or the |xi| direction.
inline EstimateReport seminorm_check(const SymbolFn& q, const SymbolFn& weight, int order_limit,
                                     const ShellSampleSpec& samples, int n) {
    if (order_limit > 3) throw std::invalid_argument("seminorm_check: order limit is 3");
    EstimateReport rep;
    rep.experiment = "seminorm";
    rep.columns = {"alpha_order", "beta_order", "x_radius", "constant"};
    rep.environment["n"] = std::to_string(n);
    rep.environment["order_limit"] = std::to_string(order_limit);
    rep.environment["seed"] = std::to_string(samples.seed);

    auto alphas = detail::multi_indices_up_to(n, order_limit);
    bool pass = true;
    double worst_growth = 0.0;

    for (const auto& alpha : alphas) {
        for (const auto& beta : alphas) {
            int oa = order_of(alpha), ob = order_of(beta);
            if (oa + ob > order_limit) continue;
            // per-shell sup in |x| (max over xi shells) and in |xi|
            std::vector<double> cx(samples.x_radii.size(), 0.0);
            std::vector<double> cxi(samples.xi_radii.size(), 0.0);
            double noise_floor = 0.0;  // rounding noise of the FD stencil, in constant units
            FdPolicy fd;
            Rng rng(samples.seed ^ (static_cast<uint64_t>(oa * 7 + ob * 13 + 1) * 0x9e37u));
            for (size_t ix = 0; ix < samples.x_radii.size(); ++ix) {
                for (size_t ik = 0; ik < samples.xi_radii.size(); ++ik) {
                    for (int d = 0; d < samples.dirs_per_shell; ++d) {
                        Vec x = rng.unit_vector(n) * samples.x_radii[ix];
                        Vec xi = rng.unit_vector(n) * samples.xi_radii[ik];
                        double dq = q.derivative(alpha, beta, 0.0, x, xi);
                        double bound = weight(0.0, x, xi) *
                                       std::pow(japanese_bracket(x), -static_cast<double>(ob)) *
                                       std::pow(japanese_bracket(xi), -static_cast<double>(oa));
                        if (!(bound > 0.0)) continue;
                        double c = std::abs(dq) / bound;
                        cx[ix] = std::max(cx[ix], c);
                        cxi[ik] = std::max(cxi[ik], c);
                        int total = oa + ob;
                        if (total > 0) {
                            double h = std::pow(fd.step(total, x.norm()), ob) *
                                       std::pow(fd.step(total, xi.norm()), oa);
                            double qscale = std::abs(q(0.0, x, xi));
                            noise_floor =
                                std::max(noise_floor, 2e-16 * std::pow(3.0, total) * qscale / (h * bound));
                        }
                    }
                }
            }
            double floor = 30.0 * noise_floor + 1e-300;
            // Growth is judged on the dyadic regime (radius >= 1) and only
            // when it is sustained at the two outermost shell pairs: bounded
            // symbols with compactly supported corrections show a local bump
            // in the constants (up then back down), which is not growth.
            auto tail_growth = [floor](const std::vector<double>& c, const std::vector<double>& r) {
                std::vector<double> ratios;
                for (size_t i = 0; i + 1 < c.size(); ++i) {
                    if (r[i] < 1.0 || c[i] <= floor) continue;  // noise denominator
                    ratios.push_back(c[i + 1] / c[i]);          // sub-floor numerators count as decay
                }
                if (ratios.empty()) return 0.0;
                if (ratios.size() == 1) return ratios[0];
                return std::min(ratios[ratios.size() - 1], ratios[ratios.size() - 2]);
            };
            double gx = tail_growth(cx, samples.x_radii), gxi = tail_growth(cxi, samples.xi_radii);
            worst_growth = std::max({worst_growth, gx, gxi});
            if (gx > 2.0 || gxi > 2.0) pass = false;
            for (size_t ix = 0; ix < samples.x_radii.size(); ++ix)
                rep.add_row(detail::index_to_string(alpha, n) + detail::index_to_string(beta, n),
                            {static_cast<double>(oa), static_cast<double>(ob),
                             samples.x_radii[ix], cx[ix]});
        }
    }
    rep.constants["worst_shell_growth"] = worst_growth;
    rep.constants["growth_threshold"] = 2.0;
    rep.pass = pass;
    return rep;
}

/// Decay trend for the metric gradient: <x> |grad g^{jk}| must not increase
/// between the two outermost tested shells (finite-sample surrogate for
/// gradient decay faster than 1/|x|).
inline bool metric_decay_trend(const HamiltonianSpec& spec, double r_lo = 32.0, double r_hi = 64.0,
                               int dirs = 32, uint64_t seed = 99) {
    Rng rng(seed);
    double lo = 0.0, hi = 0.0;
    for (int d = 0; d < dirs; ++d) {
        Vec ulo = rng.unit_vector(spec.n) * r_lo;
        Vec uhi = rng.unit_vector(spec.n) * r_hi;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) {
                lo = std::max(lo, japanese_bracket(ulo) *
                                      spec.g(j, k).grad_x(0.0, ulo, Vec(spec.n)).norm());
                hi = std::max(hi, japanese_bracket(uhi) *
                                      spec.g(j, k).grad_x(0.0, uhi, Vec(spec.n)).norm());
            }
    }
    return hi <= lo + 1e-12;
}

}  // namespace smoothlab

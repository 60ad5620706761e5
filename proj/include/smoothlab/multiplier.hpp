#pragma once

// The two phase-space multipliers whose flow derivative carries the
// smoothing estimates, with their exact term decompositions.
//
// SmoothingMultiplier (scalar weight):
//   -lambda = ( theta psi0(theta) - (M0 - <a>^{-nu}) psi1(theta) )
//             * p^{1/m - 1/2} chi_unit(r)
// with theta = a/<x> and r = <x>^{m/2} / sqrt(p). Its flow derivative
// splits into six terms A1..A6 (every factor except p itself is
// transported, and H_p p = 0).
//
// TangentialMultiplier (angular weight):
//   -lambda = a D^{-1/2} p^{1/m - 1/2} theta_cut(r),
//   D = 1 + a^2 + sum_{jk} A_jk^2,  A_jk = (x_j xi_k - x_k xi_j)/<xi>,
// whose derivative splits as I1 (transport of a and D) + I2 (transport of
// the cutoff).

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smoothlab/core.hpp"
#include "smoothlab/cutoffs.hpp"
#include "smoothlab/escape.hpp"
#include "smoothlab/fitting.hpp"
#include "smoothlab/flow.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/report.hpp"

namespace smoothlab {

/// A_jk = (x_j xi_k - x_k xi_j) / <xi>; antisymmetric, A_jj = 0.
inline double angular_symbol(const PhasePoint& pt, int j, int k) {
    return (pt.x[j] * pt.xi[k] - pt.x[k] * pt.xi[j]) / japanese_bracket(pt.xi);
}

/// l_jk = A_jk / <x>.
inline double angular_symbol_normalized(const PhasePoint& pt, int j, int k) {
    return angular_symbol(pt, j, k) / japanese_bracket(pt.x);
}

/// {p, A_jk} through analytic partial derivatives. Vanishes identically for
/// the flat metric (|xi|^2 is rotation invariant).
inline double hp_angular_analytic(const HamiltonianSpec& spec, const PhasePoint& pt, int j, int k) {
    if (spec.flat_metric) return 0.0;
    double br = japanese_bracket(pt.xi);
    double ajk = angular_symbol(pt, j, k);
    Vec dx(spec.n), dxi(spec.n);
    for (int l = 0; l < spec.n; ++l) {
        dx[l] = ((l == j ? pt.xi[k] : 0.0) - (l == k ? pt.xi[j] : 0.0)) / br;
        dxi[l] = ((k == l ? pt.x[j] : 0.0) - (j == l ? pt.x[k] : 0.0)) / br -
                 ajk * pt.xi[l] / (br * br);
    }
    return dp_dxi(spec, pt).dot(dx) - dp_dx(spec, pt).dot(dxi);
}

/// Returns (lhs, rhs) of
///   (x.xi)^2 + sum_{j,k} (x_j xi_k - x_k xi_j)^2 >= |x|^2 |xi|^2,
/// with the double-counted full sum over ordered pairs; lhs >= rhs holds up
/// to rounding (it is the Lagrange identity plus a nonnegative surplus).
inline std::pair<double, double> lagrange_identity(const Vec& x, const Vec& xi) {
    if (x.dim() != xi.dim()) throw std::invalid_argument("lagrange_identity: dim mismatch");
    double dot = x.dot(xi);
    double cross = 0.0;
    for (int j = 0; j < x.dim(); ++j)
        for (int k = 0; k < x.dim(); ++k) {
            double c = x[j] * xi[k] - x[k] * xi[j];
            cross += c * c;
        }
    return {dot * dot + cross, x.norm2() * xi.norm2()};
}

struct ThetaR {
    double theta = 0.0;
    double r = 0.0;
};

/// theta = a/<x> and r = <x>^{m/2}/sqrt(p); r requires p > 0 (callers apply
/// the cutoff in r first, which vanishes long before p can reach zero).
inline ThetaR eval_theta_r(const EscapeFunction& esc, double m, const PhasePoint& pt) {
    double p = eval_p(esc.spec(), pt);
    if (p <= 0.0) throw std::invalid_argument("eval_theta_r: r undefined at p = 0");
    ThetaR out;
    out.theta = esc.eval(pt).value / japanese_bracket(pt.x);
    out.r = std::pow(japanese_bracket(pt.x), 0.5 * m) / std::sqrt(p);
    return out;
}

namespace detail {

/// H_p <x>^{-1} = dp_dxi . grad(<x>^{-1}).
inline double hp_inv_bracket(const HamiltonianSpec& spec, const PhasePoint& pt) {
    double br = japanese_bracket(pt.x);
    return dp_dxi(spec, pt).dot(pt.x) * (-1.0 / (br * br * br));
}

/// H_p r = (m/2) <x>^{m/2-2} (x . dp_dxi) / sqrt(p)   (H_p p = 0).
inline double hp_r(const HamiltonianSpec& spec, double m, const PhasePoint& pt, double p) {
    double br = japanese_bracket(pt.x);
    return 0.5 * m * std::pow(br, 0.5 * m - 2.0) * pt.x.dot(dp_dxi(spec, pt)) / std::sqrt(p);
}

}  // namespace detail

class SmoothingMultiplier {
public:
    struct Params {
        double nu = 0.1;
        double M0 = 4.0;
        double m = 2.0;
        CutoffFamily cuts{0.125};
        double hp_dt = 1e-3;
    };

    struct Eval {
        double value = 0.0;
        bool tail_ok = true;
    };

    SmoothingMultiplier(const EscapeFunction& esc, Params prm)
        : esc_(&esc), prm_(prm), flow_(esc.spec()) {
        if (!(prm_.nu > 0.0)) throw std::invalid_argument("SmoothingMultiplier: nu must be > 0");
        if (!(prm_.m >= 2.0)) throw std::invalid_argument("SmoothingMultiplier: m must be >= 2");
    }

    const Params& params() const { return prm_; }
    const EscapeFunction& escape() const { return *esc_; }

    Eval value(const PhasePoint& pt) const {
        Eval out;
        double p = eval_p(esc_->spec(), pt);
        if (p <= 0.0) return out;  // deep inside the dead zone of chi(r)
        double r = std::pow(japanese_bracket(pt.x), 0.5 * prm_.m) / std::sqrt(p);
        double chi = prm_.cuts.chi_unit(r);
        if (chi == 0.0) return out;  // never evaluate the p-power off support
        auto a = esc_->eval(pt);
        out.tail_ok = a.tail_ok;
        double brx = japanese_bracket(pt.x);
        double theta = a.value / brx;
        double g = theta * prm_.cuts.psi0(theta) -
                   (prm_.M0 - std::pow(japanese_bracket(a.value), -prm_.nu)) * prm_.cuts.psi1(theta);
        out.value = -g * std::pow(p, 1.0 / prm_.m - 0.5) * chi;
        return out;
    }

    double operator()(const PhasePoint& pt) const { return value(pt).value; }

    /// -H_p lambda by a fourth-order centered difference of lambda along the
    /// flow; step widening by `widen` for boundary retries.
    Eval minus_hp_direct(const PhasePoint& pt, double widen = 1.0) const {
        double p = eval_p(esc_->spec(), pt);
        double h = widen * prm_.hp_dt / std::max(1.0, std::sqrt(p));
        StepPolicy pol;
        pol.dt = h;
        Eval vals[4];
        double offs[4] = {-2.0, -1.0, 1.0, 2.0};
        for (int i = 0; i < 4; ++i) {
            PhasePoint z = flow_.advance(pt, offs[i] * h, pol);
            vals[i] = value(z);
        }
        Eval out;
        out.tail_ok = vals[0].tail_ok && vals[1].tail_ok && vals[2].tail_ok && vals[3].tail_ok;
        out.value = -(vals[0].value - 8.0 * vals[1].value + 8.0 * vals[2].value - vals[3].value) /
                    (12.0 * h);
        return out;
    }

    struct Decomposition {
        std::array<double, 6> term{};  // A1..A6
        double sum = 0.0;
        double direct = 0.0;  // independent flow difference of lambda
        bool tail_ok = true;
    };

    /// Exact six-term split of -H_p lambda; `sum` must agree with `direct`.
    Decomposition decompose(const PhasePoint& pt) const {
        Decomposition out;
        const auto& spec = esc_->spec();
        double p = eval_p(spec, pt);
        if (p > 0.0) {
            double brx = japanese_bracket(pt.x);
            double r = std::pow(brx, 0.5 * prm_.m) / std::sqrt(p);
            double chi = prm_.cuts.chi_unit(r);
            double chi_d = prm_.cuts.chi_unit_deriv(r);
            if (chi != 0.0 || chi_d != 0.0) {
                double pk = std::pow(p, 1.0 / prm_.m - 0.5);
                auto a = esc_->eval(pt);
                auto hpa = esc_->hp(pt);
                out.tail_ok = a.tail_ok && hpa.tail_ok;
                double theta = a.value / brx;
                double bra = japanese_bracket(a.value);
                double hp_invbr = detail::hp_inv_bracket(spec, pt);
                double hp_theta = hpa.value / brx + a.value * hp_invbr;
                double hp_abr = -prm_.nu * std::pow(bra, -prm_.nu - 2.0) * a.value * hpa.value;
                double hp_chi = chi_d * detail::hp_r(spec, prm_.m, pt, p);
                double psi0 = prm_.cuts.psi0(theta);
                double psi0d = prm_.cuts.psi0_deriv(theta);
                double psi1 = prm_.cuts.psi1(theta);
                double psi1d = prm_.cuts.psi1_deriv(theta);
                double mass = prm_.M0 - std::pow(bra, -prm_.nu);

                out.term[0] = hp_invbr * pk * a.value * psi0 * chi;
                out.term[1] = (1.0 / brx) * pk * hpa.value * psi0 * chi;
                out.term[2] = (1.0 / brx) * pk * a.value * psi0d * hp_theta * chi;
                out.term[3] = pk * hp_abr * psi1 * chi;
                out.term[4] = -pk * mass * hp_theta * psi1d * chi;
                out.term[5] = ((1.0 / brx) * a.value * psi0 - mass * psi1) * pk * hp_chi;
            }
        }
        for (double t : out.term) out.sum += t;
        auto direct = minus_hp_direct(pt);
        if (!direct.tail_ok) {
            // widened-step retry near support boundaries
            auto wide = minus_hp_direct(pt, 4.0);
            if (wide.tail_ok) direct = wide;
        }
        out.direct = direct.value;
        out.tail_ok = out.tail_ok && direct.tail_ok;
        return out;
    }

private:
    const EscapeFunction* esc_;
    Params prm_;
    HamiltonianFlow flow_;
};

class TangentialMultiplier {
public:
    struct Params {
        double m = 2.0;
        CutoffFamily cuts{0.125};
        double hp_dt = 1e-3;
    };

    using Eval = SmoothingMultiplier::Eval;

    TangentialMultiplier(const EscapeFunction& esc, Params prm)
        : esc_(&esc), prm_(prm), flow_(esc.spec()) {
        if (!(prm_.m >= 2.0)) throw std::invalid_argument("TangentialMultiplier: m must be >= 2");
    }

    const Params& params() const { return prm_; }
    const EscapeFunction& escape() const { return *esc_; }

    /// D = 1 + a^2 + sum_{jk} A_jk^2 >= 1.
    Eval D(const PhasePoint& pt) const {
        auto a = esc_->eval(pt);
        double s = 1.0 + a.value * a.value;
        for (int j = 0; j < pt.dim(); ++j)
            for (int k = 0; k < pt.dim(); ++k) {
                double c = angular_symbol(pt, j, k);
                s += c * c;
            }
        return {s, a.tail_ok};
    }

    Eval value(const PhasePoint& pt) const {
        Eval out;
        double p = eval_p(esc_->spec(), pt);
        if (p <= 0.0) return out;
        double r = std::pow(japanese_bracket(pt.x), 0.5 * prm_.m) / std::sqrt(p);
        double chi = prm_.cuts.theta_cut(r);
        if (chi == 0.0) return out;
        auto a = esc_->eval(pt);
        auto d = D(pt);
        out.tail_ok = a.tail_ok && d.tail_ok;
        out.value = -a.value / std::sqrt(d.value) * std::pow(p, 1.0 / prm_.m - 0.5) * chi;
        return out;
    }

    double operator()(const PhasePoint& pt) const { return value(pt).value; }

    Eval minus_hp_direct(const PhasePoint& pt, double widen = 1.0) const {
        double p = eval_p(esc_->spec(), pt);
        double h = widen * prm_.hp_dt / std::max(1.0, std::sqrt(p));
        StepPolicy pol;
        pol.dt = h;
        Eval vals[4];
        double offs[4] = {-2.0, -1.0, 1.0, 2.0};
        for (int i = 0; i < 4; ++i) {
            PhasePoint z = flow_.advance(pt, offs[i] * h, pol);
            vals[i] = value(z);
        }
        Eval out;
        out.tail_ok = vals[0].tail_ok && vals[1].tail_ok && vals[2].tail_ok && vals[3].tail_ok;
        out.value = -(vals[0].value - 8.0 * vals[1].value + 8.0 * vals[2].value - vals[3].value) /
                    (12.0 * h);
        return out;
    }

    struct Split {
        double I1 = 0.0, I2 = 0.0;
        double sum = 0.0;
        double direct = 0.0;
        bool tail_ok = true;
    };

    /// -H_p lambda = I1 + I2 with I1 carrying the transport of a and D and
    /// I2 the transport of the cutoff.
    Split split(const PhasePoint& pt) const {
        Split out;
        const auto& spec = esc_->spec();
        double p = eval_p(spec, pt);
        if (p > 0.0) {
            double r = std::pow(japanese_bracket(pt.x), 0.5 * prm_.m) / std::sqrt(p);
            double chi = prm_.cuts.theta_cut(r);
            double chi_d = prm_.cuts.theta_cut_deriv(r);
            if (chi != 0.0 || chi_d != 0.0) {
                double pk = std::pow(p, 1.0 / prm_.m - 0.5);
                auto a = esc_->eval(pt);
                auto hpa = esc_->hp(pt);
                out.tail_ok = a.tail_ok && hpa.tail_ok;
                double d = D(pt).value;
                double hp_d = 2.0 * a.value * hpa.value;
                for (int j = 0; j < pt.dim(); ++j)
                    for (int k = 0; k < pt.dim(); ++k)
                        hp_d += 2.0 * angular_symbol(pt, j, k) * hp_angular_analytic(spec, pt, j, k);
                double hp_chi = chi_d * detail::hp_r(spec, prm_.m, pt, p);
                out.I1 = std::pow(d, -1.5) * (d * hpa.value - 0.5 * a.value * hp_d) * pk * chi;
                out.I2 = pk * a.value / std::sqrt(d) * hp_chi;
            }
        }
        out.sum = out.I1 + out.I2;
        auto direct = minus_hp_direct(pt);
        if (!direct.tail_ok) {
            auto wide = minus_hp_direct(pt, 4.0);
            if (wide.tail_ok) direct = wide;
        }
        out.direct = direct.value;
        out.tail_ok = out.tail_ok && direct.tail_ok;
        return out;
    }

private:
    const EscapeFunction* esc_;
    Params prm_;
    HamiltonianFlow flow_;
};

// ---------------------------------------------------------------------------
// Sampling and the inequality fits.

struct PhaseSampleSpec {
    int count = 2000;
    double x_rad_lo = 0.1, x_rad_hi = 32.0;
    double xi_rad_lo = 0.25, xi_rad_hi = 128.0;
    uint64_t seed = 808;
};

/// Log-spaced cloud over T*(R^n).
inline std::vector<PhasePoint> sample_log_phase_space(int n, const PhaseSampleSpec& ss) {
    std::vector<PhasePoint> out;
    out.reserve(static_cast<size_t>(ss.count));
    Rng rng(ss.seed);
    for (int i = 0; i < ss.count; ++i) {
        double rx = std::exp(rng.uniform(std::log(ss.x_rad_lo), std::log(ss.x_rad_hi)));
        double rxi = std::exp(rng.uniform(std::log(ss.xi_rad_lo), std::log(ss.xi_rad_hi)));
        out.emplace_back(rng.unit_vector(n) * rx, rng.unit_vector(n) * rxi);
    }
    return out;
}

/// Samples concentrated on the support of the cutoff in r: sqrt(p) is set to
/// s * <x>^{m/2} with s log-uniform in [s_lo, s_hi].
inline std::vector<PhasePoint> sample_supp_chi(const HamiltonianSpec& spec, double m, int count,
                                               uint64_t seed, double s_lo = 1.3, double s_hi = 8.0,
                                               double x_rad_hi = 8.0) {
    std::vector<PhasePoint> out;
    out.reserve(static_cast<size_t>(count));
    Rng rng(seed);
    while (static_cast<int>(out.size()) < count) {
        double rx = std::exp(rng.uniform(std::log(0.05), std::log(x_rad_hi)));
        Vec x = rng.unit_vector(spec.n) * rx;
        Vec dir = rng.unit_vector(spec.n);
        double p1 = eval_p(spec, PhasePoint(x, dir));
        if (p1 <= 0.0) continue;
        double s = std::exp(rng.uniform(std::log(s_lo), std::log(s_hi)));
        double target = s * std::pow(japanese_bracket(x), 0.5 * m);
        out.emplace_back(x, dir * (target / std::sqrt(p1)));
    }
    return out;
}

/// Fit of -H_p lambda >= C <x>^{-1-nu} (|xi|^2 + |x|^m)^{1/m} - C'.
inline EstimateReport verify_smoothing_inequality(const SmoothingMultiplier& mult,
                                                  const std::vector<PhasePoint>& samples) {
    const auto& prm = mult.params();
    struct Row {
        double lhs = 0.0, w = 0.0;
        bool ok = false;
    };
    std::vector<Row> rows(samples.size());
    parallel_for(samples.size(), [&](size_t i) {
        auto lhs = mult.minus_hp_direct(samples[i]);
        double w = std::pow(japanese_bracket(samples[i].x), -1.0 - prm.nu) *
                   std::pow(samples[i].xi.norm2() + std::pow(samples[i].x.norm(), prm.m),
                            1.0 / prm.m);
        rows[i] = Row{lhs.value, w, lhs.tail_ok};
    });

    EstimateReport rep;
    rep.experiment = "multiplier";
    rep.columns = {"lhs", "weight", "ratio"};
    rep.environment["nu"] = format_double(prm.nu);
    rep.environment["M0"] = format_double(prm.M0);
    rep.environment["m"] = format_double(prm.m);
    std::vector<double> lhs, w;
    for (const auto& r : rows) {
        if (!r.ok) {
            ++rep.excluded;
            continue;
        }
        lhs.push_back(r.lhs);
        w.push_back(r.w);
        rep.add_row("sample", {r.lhs, r.w, r.lhs / std::max(r.w, 1e-30)});
    }
    FitResult fit = fit_lower_bound(lhs, w);
    rep.constants["C"] = fit.C;
    rep.constants["Cprime"] = fit.Cprime;
    rep.constants["budget"] = fit.budget;
    rep.pass = fit.pass && fit.C > 0.0;
    if (fit.worst_index >= 0) rep.constants["worst_ratio"] =
        lhs[static_cast<size_t>(fit.worst_index)] / std::max(w[static_cast<size_t>(fit.worst_index)], 1e-30);
    return rep;
}

/// Fit of the angular lower bound
///   -H_p lambda >= C0 <x>^{-3} (|xi| + <x>^{m/2})^{2/m} sum A_jk^2
///                 - C1 <x>^{-1-sigma0} (|xi| + <x>^{m/2})^{2/m} - C2
/// plus the I1 + I2 consistency and the transported-angular-symbol bound
///   |H_p A_jk| <= C |xi| / <x>^{sigma0}.
inline EstimateReport verify_tangential_inequality(const TangentialMultiplier& mult,
                                                   const std::vector<PhasePoint>& samples) {
    const auto& spec = mult.escape().spec();
    if (spec.n < 2)
        throw std::invalid_argument("tangential inequality degenerates in one dimension");
    const double m = mult.params().m;
    const double sigma0 = spec.sigma0;

    struct Row {
        double lhs = 0.0, w0 = 0.0, w1 = 0.0, i2 = 0.0, rel = 0.0, hpa_ratio = 0.0;
        bool ok = false;
    };
    std::vector<Row> rows(samples.size());
    parallel_for(samples.size(), [&](size_t i) {
        const PhasePoint& z = samples[i];
        auto sp = mult.split(z);
        double brx = japanese_bracket(z.x);
        double scale = std::pow(z.xi.norm() + std::pow(brx, 0.5 * m), 2.0 / m);
        double sumA = 0.0, hpa_max = 0.0;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) {
                double c = angular_symbol(z, j, k);
                sumA += c * c;
                hpa_max = std::max(hpa_max, std::abs(hp_angular_analytic(spec, z, j, k)));
            }
        Row r;
        r.lhs = sp.direct;
        r.w0 = std::pow(brx, -3.0) * scale * sumA;
        r.w1 = std::pow(brx, -1.0 - sigma0) * scale;
        r.i2 = sp.I2;
        r.rel = std::abs(sp.sum - sp.direct);
        r.hpa_ratio = hpa_max * std::pow(brx, sigma0) / std::max(z.xi.norm(), 1e-30);
        r.ok = sp.tail_ok;
        rows[i] = r;
    });

    EstimateReport rep;
    rep.experiment = "tangential";
    rep.columns = {"lhs", "w_angular", "w_decay", "I2", "split_absdiff", "hpA_ratio"};
    rep.environment["m"] = format_double(m);
    rep.environment["sigma0"] = format_double(sigma0);
    std::vector<double> lhs, w0, w1;
    double i2_sup = 0.0, hpa_sup = 0.0, split_err = 0.0, lhs_scale = 0.0;
    for (const auto& r : rows) {
        if (!r.ok) {
            ++rep.excluded;
            continue;
        }
        lhs.push_back(r.lhs);
        w0.push_back(r.w0);
        w1.push_back(r.w1);
        i2_sup = std::max(i2_sup, std::abs(r.i2));
        hpa_sup = std::max(hpa_sup, r.hpa_ratio);
        split_err = std::max(split_err, r.rel);
        lhs_scale = std::max(lhs_scale, std::abs(r.lhs));
        rep.add_row("sample", {r.lhs, r.w0, r.w1, r.i2, r.rel, r.hpa_ratio});
    }
    Fit2Result fit = fit_lower_bound_two_slack(lhs, w0, w1);
    rep.constants["C0"] = fit.C0;
    rep.constants["C1"] = fit.C1;
    rep.constants["C2"] = fit.C2;
    rep.constants["I2_sup"] = i2_sup;
    rep.constants["hpA_over_weight_sup"] = hpa_sup;
    rep.constants["split_max_abs_err"] = split_err;
    rep.constants["split_rel_err"] = split_err / std::max(lhs_scale, 1e-30);
    rep.pass = fit.pass && fit.C0 > 0.0 && std::isfinite(i2_sup) && std::isfinite(hpa_sup);
    return rep;
}

}  // namespace smoothlab

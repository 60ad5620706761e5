#pragma once

// Smooth cutoff machinery. Everything is built from the C^inf step
//   step(t) = f(t) / (f(t) + f(1-t)),  f(t) = exp(-1/t) for t > 0,
// which is exactly 0 for t <= 0 and exactly 1 for t >= 1.

#include <cmath>
#include <stdexcept>

#include "smoothlab/core.hpp"

namespace smoothlab {

namespace detail {
inline double bump_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double bump_exp_deriv(double t) {
    if (t <= 0.0) return 0.0;
    return std::exp(-1.0 / t) / (t * t);
}
}  // namespace detail

struct SmoothStep {
    /// 0 on (-inf,0], 1 on [1,inf), monotone C^inf in between.
    static double value(double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        double a = detail::bump_exp(t);
        double b = detail::bump_exp(1.0 - t);
        return a / (a + b);
    }
    static double deriv(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        double a = detail::bump_exp(t);
        double b = detail::bump_exp(1.0 - t);
        double ap = detail::bump_exp_deriv(t);
        double bp = detail::bump_exp_deriv(1.0 - t);
        double den = (a + b) * (a + b);
        return (ap * b + a * bp) / den;  // both terms >= 0
    }
};

inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

/// The cutoff family used throughout: an increasing switch psi supported in
/// [eps, inf) with psi = 1 on [2 eps, inf), the derived even/odd pieces
/// psi0 = 1 - psi(|t|) and psi1 = -sgn(t) psi(|t|), plus two unit-scale
/// cutoff profiles:
///   chi_unit:  1 on (-inf, 1/2],  0 on [1, inf)
///   theta_cut: 1 on (-inf, 1],    0 on [2, inf)
class CutoffFamily {
public:
    explicit CutoffFamily(double eps = 0.125) : eps_(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("CutoffFamily: eps must be > 0");
    }

    double eps() const { return eps_; }

    double psi(double t) const { return SmoothStep::value((t - eps_) / eps_); }
    double psi_deriv(double t) const { return SmoothStep::deriv((t - eps_) / eps_) / eps_; }

    double psi0(double t) const { return 1.0 - psi(t) - psi(-t); }
    double psi0_deriv(double t) const { return -sgn(t) * psi_deriv(std::abs(t)); }

    double psi1(double t) const { return psi(-t) - psi(t); }
    double psi1_deriv(double t) const { return -psi_deriv(std::abs(t)); }

    double chi_unit(double t) const { return 1.0 - SmoothStep::value(2.0 * t - 1.0); }
    double chi_unit_deriv(double t) const { return -2.0 * SmoothStep::deriv(2.0 * t - 1.0); }

    double theta_cut(double t) const { return 1.0 - SmoothStep::value(t - 1.0); }
    double theta_cut_deriv(double t) const { return -SmoothStep::deriv(t - 1.0); }

private:
    double eps_;
};

// Dyadic radial partition of unity on R^n:
//   inner(x) + sum_{j>=0} shell(2^{-j} x) = 1,
// inner supported in |x| < 1, shell supported in 1/2 <= |x| <= 2. Built by
// telescoping the theta_cut profile, so the identity is exact up to rounding.
class DyadicPartition {
public:
    DyadicPartition() = default;

    double inner(const Vec& x) const { return cuts_.theta_cut(2.0 * x.norm()); }
    double shell(const Vec& x) const {
        double r = x.norm();
        return cuts_.theta_cut(r) - cuts_.theta_cut(2.0 * r);
    }
    double shell_scaled(int j, const Vec& x) const {
        double s = std::ldexp(1.0, -j);  // 2^{-j}
        return shell(x * s);
    }

    /// Sum over even or odd j >= 0 of shell(2^{-j} x). Only the shells with
    /// 1/2 <= 2^{-j}|x| <= 2 contribute, so the sum is finite.
    double shell_sum(const Vec& x, bool even) const {
        double r = x.norm();
        if (r <= 0.25) return 0.0;
        int jc = static_cast<int>(std::floor(std::log2(r)));
        double total = 0.0;
        for (int j = jc - 2; j <= jc + 2; ++j) {
            if (j < 0) continue;
            if ((j % 2 == 0) != even) continue;
            total += shell_scaled(j, x);
        }
        return total;
    }

    double partition_residual(const Vec& x) const {
        return inner(x) + shell_sum(x, true) + shell_sum(x, false) - 1.0;
    }

private:
    CutoffFamily cuts_;
};

}  // namespace smoothlab

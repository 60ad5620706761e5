#pragma once

// Shared constant-fitting protocol for lower bounds of the form
//   lhs_i >= C * w_i - C'        (one slack)
//   lhs_i >= C0 * w0_i - C1 * w1_i - C2   (two slacks).
// The leading constant is scanned over a log-spaced grid; the slack is the
// positive part of the worst violation; we report the Pareto pair with the
// largest leading constant whose slack stays within budget. The budget is
// 10 x a robust scale of |lhs| (median, floored at 2% of the max: the
// distributions here are zero-inflated off cutoff supports and heavy-tailed
// on them, and the true bounded remainders live in the tail).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smoothlab/core.hpp"

namespace smoothlab {

inline double robust_scale(const std::vector<double>& xs) {
    double mx = 0.0;
    for (double x : xs) mx = std::max(mx, std::abs(x));
    return std::max(median_abs(xs), 0.02 * mx);
}

/// Upper anchor for the leading-constant grid: a high quantile of the
/// positive ratios lhs/w (the raw max is dominated by near-zero weights).
inline double ratio_anchor(const std::vector<double>& lhs, const std::vector<double>& w,
                           double quantile = 0.995) {
    std::vector<double> ratios;
    for (size_t i = 0; i < lhs.size(); ++i)
        if (w[i] > 0.0 && lhs[i] > 0.0) ratios.push_back(lhs[i] / w[i]);
    if (ratios.empty()) return 0.0;
    std::sort(ratios.begin(), ratios.end());
    size_t idx = static_cast<size_t>(quantile * (ratios.size() - 1));
    return ratios[idx];
}

struct FitResult {
    double C = 0.0;
    double Cprime = 0.0;
    double budget = 0.0;
    bool pass = false;
    bool degenerate = false;  // no positive signal to fit against
    int worst_index = -1;     // sample achieving the binding violation
};

inline FitResult fit_lower_bound(const std::vector<double>& lhs, const std::vector<double>& w,
                                 double budget_factor = 10.0, int grid_points = 20) {
    FitResult res;
    if (lhs.empty() || lhs.size() != w.size()) {
        res.degenerate = true;
        return res;
    }
    res.budget = budget_factor * robust_scale(lhs);
    if (res.budget <= 0.0) res.budget = budget_factor;

    double c_hi = ratio_anchor(lhs, w);
    if (c_hi <= 0.0) {
        res.degenerate = true;
        return res;
    }

    auto slack_at = [&](double C, int* worst) {
        double s = 0.0;
        int arg = -1;
        for (size_t i = 0; i < lhs.size(); ++i) {
            double viol = C * w[i] - lhs[i];
            if (viol > s) {
                s = viol;
                arg = static_cast<int>(i);
            }
        }
        if (worst) *worst = arg;
        return s;
    };

    double lo = c_hi * 1e-6;
    for (int k = grid_points - 1; k >= 0; --k) {
        double f = (grid_points == 1) ? 0.0 : static_cast<double>(k) / (grid_points - 1);
        double C = lo * std::pow(c_hi / lo, f);
        int worst = -1;
        double s = slack_at(C, &worst);
        if (s <= res.budget) {
            res.C = C;
            res.Cprime = s;
            res.worst_index = worst;
            res.pass = true;
            return res;
        }
    }
    // even the smallest grid constant violates the budget
    res.C = 0.0;
    res.Cprime = slack_at(lo, &res.worst_index);
    return res;
}

struct Fit2Result {
    double C0 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double budget1 = 0.0;
    double budget2 = 0.0;
    bool pass = false;
    bool degenerate = false;
};

inline Fit2Result fit_lower_bound_two_slack(const std::vector<double>& lhs,
                                            const std::vector<double>& w0,
                                            const std::vector<double>& w1,
                                            double budget_factor = 10.0, int grid_points = 20) {
    Fit2Result res;
    size_t nsamp = lhs.size();
    if (nsamp == 0 || w0.size() != nsamp || w1.size() != nsamp) {
        res.degenerate = true;
        return res;
    }
    double med = robust_scale(lhs);
    res.budget2 = budget_factor * (med > 0.0 ? med : 1.0);

    double c_hi = ratio_anchor(lhs, w0);
    if (c_hi <= 0.0) {
        res.degenerate = true;
        return res;
    }
    // C1 budget: the residual slack per unit of w1 cannot exceed the data scale
    double w1_med = robust_scale(w1);
    res.budget1 = budget_factor * (w1_med > 0.0 ? med / w1_med : 0.0);
    if (res.budget1 <= 0.0) res.budget1 = budget_factor;

    double lo = c_hi * 1e-6;
    for (int k = grid_points - 1; k >= 0; --k) {
        double f = (grid_points == 1) ? 0.0 : static_cast<double>(k) / (grid_points - 1);
        double C0 = lo * std::pow(c_hi / lo, f);
        // residual_i = C0 w0_i - lhs_i must be <= C1 w1_i + C2
        std::vector<double> residual(nsamp);
        for (size_t i = 0; i < nsamp; ++i) residual[i] = C0 * w0[i] - lhs[i];
        // scan C1 upward on its own grid, take the smallest one in budget
        for (int k1 = 0; k1 < grid_points; ++k1) {
            double f1 = (grid_points == 1) ? 0.0 : static_cast<double>(k1) / (grid_points - 1);
            double C1 = res.budget1 * 1e-4 * std::pow(1e4, f1);
            double s = 0.0;
            for (size_t i = 0; i < nsamp; ++i) s = std::max(s, residual[i] - C1 * w1[i]);
            if (s <= res.budget2) {
                res.C0 = C0;
                res.C1 = C1;
                res.C2 = s;
                res.pass = true;
                return res;
            }
        }
    }
    return res;
}

}  // namespace smoothlab

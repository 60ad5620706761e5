#pragma once

// Evaluable phase-space symbols q(t, x, xi) with derivative access.
// Derivatives come from user-supplied closures when available and from
// centered finite differences otherwise.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "smoothlab/core.hpp"

namespace smoothlab {

enum class Arity { SpaceOnly, PhaseSpace, TimeSpace, TimePhaseSpace };

/// Multi-index over at most Vec::max_dim axes.
using MultiIndex = std::array<int, Vec::max_dim>;

inline int order_of(const MultiIndex& m) { return m[0] + m[1] + m[2]; }
inline MultiIndex zero_index() { return {0, 0, 0}; }

struct FdPolicy {
    // Base steps by total derivative order (1-based). The first-order step
    // follows the h = max(1e-5, 1e-5 |c|) rule; higher orders use larger
    // bases because nested centered differences amplify rounding noise.
    std::array<double, 3> base{1e-5, 2.5e-4, 4e-3};
    double step(int total_order, double coordinate) const {
        double b = base[static_cast<size_t>(std::min(std::max(total_order, 1), 3) - 1)];
        return std::max(b, b * std::abs(coordinate));
    }
};

class SymbolFn {
public:
    using Evaluator = std::function<double(double, const Vec&, const Vec&)>;
    using Gradient = std::function<Vec(double, const Vec&, const Vec&)>;

    SymbolFn() = default;
    SymbolFn(Arity arity, Evaluator eval) : arity_(arity), eval_(std::move(eval)) {}

    static SymbolFn constant(double c) {
        return SymbolFn(Arity::SpaceOnly, [c](double, const Vec&, const Vec&) { return c; });
    }
    static SymbolFn space(std::function<double(const Vec&)> f) {
        return SymbolFn(Arity::SpaceOnly,
                        [f = std::move(f)](double, const Vec& x, const Vec&) { return f(x); });
    }
    static SymbolFn phase(std::function<double(const Vec&, const Vec&)> f) {
        return SymbolFn(Arity::PhaseSpace, [f = std::move(f)](double, const Vec& x, const Vec& xi) {
            return f(x, xi);
        });
    }
    static SymbolFn time_space(std::function<double(double, const Vec&)> f) {
        return SymbolFn(Arity::TimeSpace, [f = std::move(f)](double t, const Vec& x, const Vec&) {
            return f(t, x);
        });
    }

    Arity arity() const { return arity_; }
    bool depends_on_time() const {
        return arity_ == Arity::TimeSpace || arity_ == Arity::TimePhaseSpace;
    }
    bool depends_on_xi() const {
        return arity_ == Arity::PhaseSpace || arity_ == Arity::TimePhaseSpace;
    }
    explicit operator bool() const { return static_cast<bool>(eval_); }

    double operator()(double t, const Vec& x, const Vec& xi) const { return eval_(t, x, xi); }
    double operator()(const Vec& x, const Vec& xi) const { return eval_(0.0, x, xi); }
    double operator()(const Vec& x) const { return eval_(0.0, x, Vec(x.dim())); }

    /// Attach analytic spatial / frequency gradients (used by flows and by
    /// first-order derivative queries; higher orders still go through FD).
    SymbolFn& with_grad_x(Gradient g) {
        grad_x_ = std::move(g);
        return *this;
    }
    SymbolFn& with_grad_xi(Gradient g) {
        grad_xi_ = std::move(g);
        return *this;
    }
    bool has_grad_x() const { return static_cast<bool>(grad_x_); }
    bool has_grad_xi() const { return static_cast<bool>(grad_xi_); }

    SymbolFn& with_fd_policy(FdPolicy p) {
        fd_ = p;
        return *this;
    }

    Vec grad_x(double t, const Vec& x, const Vec& xi) const {
        if (grad_x_) return grad_x_(t, x, xi);
        Vec g(x.dim());
        for (int i = 0; i < x.dim(); ++i) {
            MultiIndex beta = zero_index();
            beta[static_cast<size_t>(i)] = 1;
            g[i] = derivative(zero_index(), beta, t, x, xi);
        }
        return g;
    }
    Vec grad_xi(double t, const Vec& x, const Vec& xi) const {
        if (grad_xi_) return grad_xi_(t, x, xi);
        Vec g(xi.dim());
        for (int i = 0; i < xi.dim(); ++i) {
            MultiIndex alpha = zero_index();
            alpha[static_cast<size_t>(i)] = 1;
            g[i] = derivative(alpha, zero_index(), t, x, xi);
        }
        return g;
    }

    /// d^beta_x d^alpha_xi q at (t, x, xi), |alpha| + |beta| <= 3.
    /// Centered differences, nested by axis; the order-3 step gets a
    /// Richardson pass (the 4 h/2 estimate minus the h one, over 3).
    double derivative(const MultiIndex& alpha, const MultiIndex& beta, double t, const Vec& x,
                      const Vec& xi) const {
        int total = order_of(alpha) + order_of(beta);
        if (total > 3) throw std::invalid_argument("SymbolFn::derivative: order > 3 unsupported");
        if (total == 0) return eval_(t, x, xi);
        if (total < 3) return deriv_rec(alpha, beta, t, x, xi, total);
        double coarse = deriv_rec(alpha, beta, t, x, xi, total);
        double fine = deriv_rec(alpha, beta, t, x, xi, total, 0.5);
        return (4.0 * fine - coarse) / 3.0;
    }

private:
    double deriv_rec(MultiIndex alpha, MultiIndex beta, double t, Vec x, Vec xi, int total_order,
                     double step_scale = 1.0) const {
        // Peel one derivative off the first active axis.
        for (int i = 0; i < Vec::max_dim; ++i) {
            size_t ui = static_cast<size_t>(i);
            if (alpha[ui] > 0) {
                alpha[ui] -= 1;
                double h = fd_.step(total_order, xi[i]) * step_scale;
                Vec xp = xi, xm = xi;
                xp[i] += h;
                xm[i] -= h;
                double fp = value_or_deriv(alpha, beta, t, x, xp, total_order, step_scale);
                double fm = value_or_deriv(alpha, beta, t, x, xm, total_order, step_scale);
                return (fp - fm) / (2.0 * h);
            }
            if (beta[ui] > 0) {
                beta[ui] -= 1;
                double h = fd_.step(total_order, x[i]) * step_scale;
                Vec xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                double fp = value_or_deriv(alpha, beta, t, xp, xi, total_order, step_scale);
                double fm = value_or_deriv(alpha, beta, t, xm, xi, total_order, step_scale);
                return (fp - fm) / (2.0 * h);
            }
        }
        return eval_(t, x, xi);
    }

    double value_or_deriv(const MultiIndex& alpha, const MultiIndex& beta, double t, const Vec& x,
                          const Vec& xi, int total_order, double step_scale) const {
        if (order_of(alpha) + order_of(beta) == 0) return eval_(t, x, xi);
        return deriv_rec(alpha, beta, t, x, xi, total_order, step_scale);
    }

    Arity arity_ = Arity::PhaseSpace;
    Evaluator eval_;
    Gradient grad_x_;
    Gradient grad_xi_;
    FdPolicy fd_;
};

}  // namespace smoothlab

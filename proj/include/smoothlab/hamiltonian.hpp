#pragma once

// Problem data for the operator
//   P = sum_{jk} (D_j - a_j(t,x)) g^{jk}(x) (D_k - a_k(t,x)) + V(t,x)
// and its principal symbol p(x, xi) = sum g^{jk}(x) xi_j xi_k, together with
// the named example specs selectable from experiment configs.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothlab/core.hpp"
#include "smoothlab/cutoffs.hpp"
#include "smoothlab/symbol.hpp"

namespace smoothlab {

struct HamiltonianSpec {
    int n = 1;             // spatial dimension (1 or 2)
    double m = 2.0;        // potential growth exponent, >= 2
    double T = 1.0;        // time horizon
    double delta = 1.0;    // ellipticity constant: p >= delta |xi|^2
    double sigma0 = 1.0;   // metric perturbation decay rate (where applicable)
    std::string name = "custom";
    bool flat_metric = false;
    bool has_magnetic = false;

    std::vector<SymbolFn> metric;    // n*n entries, row-major, x-only, symmetric
    std::vector<SymbolFn> magnetic;  // n entries (t, x); empty means zero
    SymbolFn potential;              // (t, x); empty means zero

    const SymbolFn& g(int j, int k) const {
        return metric[static_cast<size_t>(j * n + k)];
    }
    double g_at(int j, int k, const Vec& x) const { return g(j, k)(x); }

    double magnetic_at(int j, double t, const Vec& x) const {
        if (!has_magnetic) return 0.0;
        return magnetic[static_cast<size_t>(j)](t, x, Vec(n));
    }
    double potential_at(double t, const Vec& x) const {
        if (!potential) return 0.0;
        return potential(t, x, Vec(n));
    }
    bool time_dependent_coefficients() const {
        if (potential && potential.depends_on_time()) return true;
        for (const auto& a : magnetic)
            if (a && a.depends_on_time()) return true;
        return false;
    }
};

/// Principal symbol p(x, xi) = sum g^{jk}(x) xi_j xi_k.
inline double eval_p(const HamiltonianSpec& spec, const PhasePoint& pt) {
    if (pt.dim() != spec.n) throw std::invalid_argument("eval_p: dimension mismatch");
    double s = 0.0;
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k) s += spec.g_at(j, k, pt.x) * pt.xi[j] * pt.xi[k];
    return s;
}

/// d p / d xi = 2 g(x) xi.
inline Vec dp_dxi(const HamiltonianSpec& spec, const PhasePoint& pt) {
    Vec out(spec.n);
    for (int j = 0; j < spec.n; ++j) {
        double s = 0.0;
        for (int k = 0; k < spec.n; ++k) s += spec.g_at(j, k, pt.x) * pt.xi[k];
        out[j] = 2.0 * s;
    }
    return out;
}

/// d p / d x_l = sum_{jk} (d g^{jk} / d x_l) xi_j xi_k.
inline Vec dp_dx(const HamiltonianSpec& spec, const PhasePoint& pt) {
    Vec out(spec.n);
    if (spec.flat_metric) return out;
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k) {
            Vec gg = spec.g(j, k).grad_x(0.0, pt.x, pt.xi);
            double w = pt.xi[j] * pt.xi[k];
            for (int l = 0; l < spec.n; ++l) out[l] += gg[l] * w;
        }
    return out;
}

/// Poisson bracket {p, q} = dp_dxi . dq_dx - dp_dx . dq_dxi evaluated with
/// the symbols' own gradient routes (analytic when attached, FD otherwise).
inline double hamiltonian_derivative(const HamiltonianSpec& spec, const SymbolFn& q,
                                     const PhasePoint& pt) {
    Vec qx = q.grad_x(0.0, pt.x, pt.xi);
    Vec qxi = q.grad_xi(0.0, pt.x, pt.xi);
    return dp_dxi(spec, pt).dot(qx) - dp_dx(spec, pt).dot(qxi);
}

// ---------------------------------------------------------------------------
// Named example specs.

namespace detail {

inline SymbolFn kronecker_metric_entry(double value) {
    SymbolFn s = SymbolFn::space([value](const Vec&) { return value; });
    s.with_grad_x([](double, const Vec& x, const Vec&) { return Vec(x.dim()); });
    return s;
}

}  // namespace detail

inline HamiltonianSpec make_flat(int n, double T = 1.0) {
    HamiltonianSpec spec;
    spec.n = n;
    spec.m = 2.0;
    spec.T = T;
    spec.delta = 1.0;
    spec.name = "flat";
    spec.flat_metric = true;
    spec.metric.reserve(static_cast<size_t>(n * n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            spec.metric.push_back(detail::kronecker_metric_entry(j == k ? 1.0 : 0.0));
    return spec;
}

/// V = |x|^2 on the flat metric.
inline HamiltonianSpec make_harmonic(int n, double T = 1.0) {
    HamiltonianSpec spec = make_flat(n, T);
    spec.name = "harmonic";
    spec.m = 2.0;
    spec.potential = SymbolFn::time_space([](double, const Vec& x) { return x.norm2(); });
    return spec;
}

/// V = |x|^4 on the flat metric (smoothly truncated at grid binding time).
inline HamiltonianSpec make_quartic(int n, double T = 1.0) {
    HamiltonianSpec spec = make_flat(n, T);
    spec.name = "quartic";
    spec.m = 4.0;
    spec.potential = SymbolFn::time_space([](double, const Vec& x) {
        double r2 = x.norm2();
        return r2 * r2;
    });
    return spec;
}

/// Dyadic checkerboard potential: V = |x|^m on even shells and -|x|^2 on odd
/// ones, glued with the radial partition of unity. V >= -|x|^2 everywhere
/// and V(0) = 0.
inline SymbolFn build_checkerboard_potential(double m) {
    if (!(m >= 2.0)) throw std::invalid_argument("checkerboard potential requires m >= 2");
    DyadicPartition part;
    return SymbolFn::time_space([part, m](double, const Vec& x) {
        double even = part.shell_sum(x, true);
        double odd = part.shell_sum(x, false);
        if (even == 0.0 && odd == 0.0) return 0.0;
        double r2 = x.norm2();
        return std::pow(r2, 0.5 * m) * even - r2 * odd;
    });
}

inline HamiltonianSpec make_checkerboard(int n, double m, double T = 1.0) {
    HamiltonianSpec spec = make_flat(n, T);
    spec.name = "checkerboard";
    spec.m = m;
    spec.potential = build_checkerboard_potential(m);
    return spec;
}

/// Metric perturbation of the flat Laplacian with |x|^{-sigma0} decay.
/// In one dimension g = (1 + eps <x>^{-sigma0}); in two the perturbation is
/// anisotropic (a radial conformal factor commutes with rotations, which
/// would make every angular bracket vanish identically).
inline HamiltonianSpec make_perturbed_flat(int n, double eps, double sigma0, double T = 1.0) {
    if (!(eps >= 0.0) || !(sigma0 > 0.0))
        throw std::invalid_argument("perturbed_flat: need eps >= 0 and sigma0 > 0");
    HamiltonianSpec spec;
    spec.n = n;
    spec.m = 2.0;
    spec.T = T;
    spec.sigma0 = sigma0;
    spec.delta = 1.0 - 2.0 * eps;
    if (spec.delta <= 0.0) throw std::invalid_argument("perturbed_flat: eps too large");
    spec.name = "perturbed_flat";
    spec.flat_metric = (eps == 0.0);

    auto decay = [sigma0](const Vec& x) { return std::pow(japanese_bracket(x), -sigma0); };
    auto decay_grad = [sigma0](const Vec& x) {
        double br = japanese_bracket(x);
        return x * (-sigma0 * std::pow(br, -sigma0 - 2.0));
    };

    if (n == 1) {
        SymbolFn g = SymbolFn::space([eps, decay](const Vec& x) { return 1.0 + eps * decay(x); });
        g.with_grad_x([eps, decay_grad](double, const Vec& x, const Vec&) {
            return decay_grad(x) * eps;
        });
        spec.metric.push_back(std::move(g));
        return spec;
    }
    if (n != 2) throw std::invalid_argument("perturbed_flat: only n in {1,2}");

    // g^{11/22} = 1 + eps u (1 +/- v/2), g^{12} = (eps/4) u w, with
    // u = <x>^{-sigma0}, v = x_1/<x>, w = x_2/<x>.
    auto dir = [](const Vec& x, int axis) { return x[axis] / japanese_bracket(x); };
    auto dir_grad = [](const Vec& x, int axis) {
        double br = japanese_bracket(x);
        Vec g = x * (-x[axis] / (br * br * br));
        g[axis] += 1.0 / br;
        return g;
    };

    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            SymbolFn entry;
            if (j == k) {
                double sign = (j == 0) ? 0.5 : -0.5;
                entry = SymbolFn::space([eps, sign, decay, dir](const Vec& x) {
                    return 1.0 + eps * decay(x) * (1.0 + sign * dir(x, 0));
                });
                entry.with_grad_x([eps, sign, decay, decay_grad, dir, dir_grad](
                                      double, const Vec& x, const Vec&) {
                    double u = decay(x);
                    double v = dir(x, 0);
                    Vec gu = decay_grad(x);
                    Vec gv = dir_grad(x, 0);
                    return gu * (eps * (1.0 + sign * v)) + gv * (eps * u * sign);
                });
            } else {
                entry = SymbolFn::space([eps, decay, dir](const Vec& x) {
                    return 0.25 * eps * decay(x) * dir(x, 1);
                });
                entry.with_grad_x(
                    [eps, decay, decay_grad, dir, dir_grad](double, const Vec& x, const Vec&) {
                        double u = decay(x);
                        double w = dir(x, 1);
                        Vec gu = decay_grad(x);
                        Vec gw = dir_grad(x, 1);
                        return gu * (0.25 * eps * w) + gw * (0.25 * eps * u);
                    });
            }
            spec.metric.push_back(std::move(entry));
        }
    return spec;
}

/// Radial conformal metric g^{jk} = c(|x|) delta_{jk}; handy for engineered
/// test geometries (c and its radial derivative supplied analytically).
inline HamiltonianSpec make_radial_conformal(int n, std::function<double(double)> c,
                                             std::function<double(double)> cprime,
                                             double delta = 0.5, double T = 1.0) {
    HamiltonianSpec spec;
    spec.n = n;
    spec.m = 2.0;
    spec.T = T;
    spec.delta = delta;
    spec.name = "radial_conformal";
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            if (j != k) {
                spec.metric.push_back(detail::kronecker_metric_entry(0.0));
                continue;
            }
            SymbolFn entry = SymbolFn::space([c](const Vec& x) { return c(x.norm()); });
            entry.with_grad_x([cprime](double, const Vec& x, const Vec&) {
                double r = x.norm();
                if (r < 1e-14) return Vec(x.dim());
                return x * (cprime(r) / r);
            });
            spec.metric.push_back(std::move(entry));
        }
    return spec;
}

/// Name-based spec lookup used by configs and the CLI.
/// Recognized: flat | harmonic | quartic | checkerboard | perturbed_flat.
inline HamiltonianSpec make_spec_by_name(const std::string& name, int n, double m = 2.0,
                                         double eps = 0.1, double sigma0 = 1.0, double T = 1.0) {
    if (name == "flat") return make_flat(n, T);
    if (name == "harmonic") return make_harmonic(n, T);
    if (name == "quartic") return make_quartic(n, T);
    if (name == "checkerboard") return make_checkerboard(n, m, T);
    if (name == "perturbed_flat") return make_perturbed_flat(n, eps, sigma0, T);
    throw std::invalid_argument("unknown spec name: " + name);
}

/// Spot checks of the structural requirements: metric symmetry on random
/// samples and ellipticity p >= delta |xi|^2 on a dense random sample.
inline void validate_spec(const HamiltonianSpec& spec, uint64_t seed = 7, int samples = 512) {
    if (spec.n < 1 || spec.n > 2) throw std::invalid_argument("spec: n must be 1 or 2");
    if (!(spec.m >= 2.0)) throw std::invalid_argument("spec: growth exponent m must be >= 2");
    if (!(spec.T > 0.0)) throw std::invalid_argument("spec: horizon T must be > 0");
    if (spec.metric.size() != static_cast<size_t>(spec.n * spec.n))
        throw std::invalid_argument("spec: metric entry count mismatch");
    Rng rng(seed);
    for (int s = 0; s < samples; ++s) {
        Vec x = rng.unit_vector(spec.n) * std::exp(rng.uniform(-2.0, 5.0));
        Vec xi = rng.unit_vector(spec.n) * std::exp(rng.uniform(-2.0, 5.0));
        for (int j = 0; j < spec.n; ++j)
            for (int k = j + 1; k < spec.n; ++k)
                if (std::abs(spec.g_at(j, k, x) - spec.g_at(k, j, x)) > 1e-12)
                    throw std::runtime_error("spec: metric asymmetry detected");
        double p = eval_p(spec, PhasePoint(x, xi));
        if (p < spec.delta * xi.norm2() - 1e-9 * xi.norm2())
            throw std::runtime_error("spec: ellipticity p >= delta |xi|^2 violated");
    }
}

}  // namespace smoothlab

#pragma once

// Discrete Weyl quantization and the operator zoo built on it:
//  - dense midpoint-rule kernels in one dimension (the oracle path),
//  - matrix-free application of P = sum (D_j - a_j) g^{jk} (D_k - a_k) + V,
//  - anisotropic weight operators E_s (dense exact or symmetrized-product
//    surrogate with a calibrated stabilizer),
//  - normalized angular derivative operators,
//  - the commutator-remainder norm probe and the lower-bound form check.

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "smoothlab/fitting.hpp"
#include "smoothlab/grid.hpp"
#include "smoothlab/hamiltonian.hpp"
#include "smoothlab/multiplier.hpp"
#include "smoothlab/report.hpp"

namespace smoothlab {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dense operators (one-dimensional oracle scale).

class DenseOperator {
public:
    using Cx = std::complex<double>;

    DenseOperator() = default;
    explicit DenseOperator(int N) : N_(N), a_(static_cast<size_t>(N) * N, Cx{0.0, 0.0}) {}

    int rows() const { return N_; }
    Cx& at(int i, int j) { return a_[static_cast<size_t>(i) * N_ + static_cast<size_t>(j)]; }
    Cx at(int i, int j) const { return a_[static_cast<size_t>(i) * N_ + static_cast<size_t>(j)]; }

    static DenseOperator identity(int N) {
        DenseOperator I(N);
        for (int i = 0; i < N; ++i) I.at(i, i) = 1.0;
        return I;
    }

    GridFunction apply(const GridFunction& u) const {
        if (static_cast<int>(u.size()) != N_) throw std::invalid_argument("DenseOperator: size mismatch");
        GridFunction out(u.grid());
        for (int i = 0; i < N_; ++i) {
            Cx s{0.0, 0.0};
            const Cx* row = &a_[static_cast<size_t>(i) * N_];
            for (int j = 0; j < N_; ++j) s += row[j] * u[static_cast<size_t>(j)];
            out[static_cast<size_t>(i)] = s;
        }
        return out;
    }

    DenseOperator& operator+=(const DenseOperator& o) {
        for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    DenseOperator& operator-=(const DenseOperator& o) {
        for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        return *this;
    }
    DenseOperator& operator*=(Cx s) {
        for (auto& z : a_) z *= s;
        return *this;
    }

    friend DenseOperator multiply(const DenseOperator& A, const DenseOperator& B) {
        DenseOperator C(A.N_);
        for (int i = 0; i < A.N_; ++i)
            for (int k = 0; k < A.N_; ++k) {
                Cx aik = A.at(i, k);
                if (aik == Cx{0.0, 0.0}) continue;
                for (int j = 0; j < A.N_; ++j) C.at(i, j) += aik * B.at(k, j);
            }
        return C;
    }
    friend DenseOperator commutator(const DenseOperator& A, const DenseOperator& B) {
        DenseOperator C = multiply(A, B);
        C -= multiply(B, A);
        return C;
    }

    double hermiticity_defect() const {
        double d = 0.0;
        for (int i = 0; i < N_; ++i)
            for (int j = i; j < N_; ++j) d = std::max(d, std::abs(at(i, j) - std::conj(at(j, i))));
        return d;
    }

    /// Largest singular value by power iteration on A^H A.
    double norm_estimate(int iters = 30, int restarts = 3, uint64_t seed = 12345) const {
        Rng rng(seed);
        double best = 0.0;
        for (int r = 0; r < restarts; ++r) {
            std::vector<Cx> v(static_cast<size_t>(N_));
            double nrm = 0.0;
            for (auto& z : v) {
                z = {rng.normal(), rng.normal()};
                nrm += std::norm(z);
            }
            nrm = std::sqrt(nrm);
            for (auto& z : v) z /= nrm;
            double sigma = 0.0;
            for (int it = 0; it < iters; ++it) {
                std::vector<Cx> av(static_cast<size_t>(N_), Cx{0.0, 0.0});
                for (int i = 0; i < N_; ++i) {
                    Cx s{0.0, 0.0};
                    for (int j = 0; j < N_; ++j) s += at(i, j) * v[static_cast<size_t>(j)];
                    av[static_cast<size_t>(i)] = s;
                }
                std::vector<Cx> aav(static_cast<size_t>(N_), Cx{0.0, 0.0});
                for (int j = 0; j < N_; ++j) {
                    Cx s{0.0, 0.0};
                    for (int i = 0; i < N_; ++i) s += std::conj(at(i, j)) * av[static_cast<size_t>(i)];
                    aav[static_cast<size_t>(j)] = s;
                }
                double an = 0.0;
                for (const auto& z : aav) an += std::norm(z);
                an = std::sqrt(an);
                if (an == 0.0) break;
                sigma = std::sqrt(an);
                for (size_t j = 0; j < aav.size(); ++j) v[j] = aav[j] / an;
            }
            best = std::max(best, sigma);
        }
        return best;
    }

private:
    int N_ = 0;
    std::vector<Cx> a_;
};

/// Dense midpoint-rule Weyl kernel in one dimension:
///   K[a,b] = (1/N) sum_j w_j e^{i (x_a - x_b) xi_j} q(mid(a,b), xi_j)
/// with j running over -N/2 .. N/2 and half weights at the two Nyquist ends
/// (that symmetrization is what makes real symbols quantize Hermitian).
/// mid(a,b) is the periodic midpoint: the index separation is wrapped to
/// [-N/2, N/2] before halving, so pairs adjacent across the seam average the
/// symbol near the seam and not at the box centre; the two equally valid
/// midpoints of an antipodal pair are averaged.
inline DenseOperator weyl_quantize_dense(const std::function<double(double, double)>& symbol,
                                         const GridSpec& g) {
    if (g.dim() != 1) throw std::invalid_argument("weyl_quantize_dense: one-dimensional only");
    int N = g.points_per_axis();
    if (N > 512) throw std::invalid_argument("weyl_quantize_dense: N capped at 512");
    double h = g.spacing();
    double dxi = 3.141592653589793238463 / g.box();

    // symbol table on the 2N half-grid circle points and the symmetric
    // frequency set
    int nfreq = N + 1;  // j = -N/2 .. N/2
    std::vector<double> qtab(static_cast<size_t>(2 * N) * nfreq);
    for (int s = 0; s < 2 * N; ++s) {
        double mid = -g.box() + 0.5 * h * s;
        for (int j = 0; j < nfreq; ++j) {
            double xi = dxi * (j - N / 2);
            qtab[static_cast<size_t>(s) * nfreq + j] = symbol(mid, xi);
        }
    }
    // phase table e^{i h d xi_j}
    std::vector<std::complex<double>> phase(static_cast<size_t>(2 * N - 1) * nfreq);
    for (int d = -(N - 1); d <= N - 1; ++d)
        for (int j = 0; j < nfreq; ++j) {
            double arg = h * d * dxi * (j - N / 2);
            phase[static_cast<size_t>(d + N - 1) * nfreq + j] = {std::cos(arg), std::sin(arg)};
        }

    DenseOperator K(N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            int d = a - b;
            int d_r = d;
            if (d_r > N / 2) d_r -= N;
            if (d_r < -N / 2) d_r += N;
            bool antipodal = (d_r == N / 2 || d_r == -N / 2);
            int s1 = (((2 * b + d_r) % (2 * N)) + 2 * N) % (2 * N);
            int s2 = antipodal ? (s1 + N) % (2 * N) : s1;
            const double* q1 = &qtab[static_cast<size_t>(s1) * nfreq];
            const double* q2 = &qtab[static_cast<size_t>(s2) * nfreq];
            const std::complex<double>* prow = &phase[static_cast<size_t>(d + N - 1) * nfreq];
            std::complex<double> s{0.0, 0.0};
            for (int j = 0; j < nfreq; ++j) {
                double w = (j == 0 || j == nfreq - 1) ? 0.5 : 1.0;
                s += w * (0.5 * (q1[j] + q2[j])) * prow[j];
            }
            K.at(a, b) = s / static_cast<double>(N);
        }
    return K;
}

/// Column-by-column dense assembly of any linear grid operator (oracle use).
inline DenseOperator dense_from_apply(const std::function<GridFunction(const GridFunction&)>& op,
                                      GridPtr g) {
    int N = static_cast<int>(g->size());
    DenseOperator K(N);
    for (int j = 0; j < N; ++j) {
        GridFunction e(g);
        e[static_cast<size_t>(j)] = 1.0;
        GridFunction col = op(e);
        for (int i = 0; i < N; ++i) K.at(i, j) = col[static_cast<size_t>(i)];
    }
    return K;
}

// ---------------------------------------------------------------------------
// Collar flattening: coefficients that grow at the box edge are blended to a
// constant in the outer collar so their periodic extension stays smooth.

inline double collar_value(const GridSpec& g, const std::function<double(const Vec&)>& f,
                           const Vec& x, double start = 0.85, double end = 0.97) {
    double L = g.box();
    Vec xref(g.dim());
    xref[0] = start * L;
    double keep = 1.0;
    for (int a = 0; a < g.dim(); ++a)
        keep *= 1.0 - SmoothStep::value((std::abs(x[a]) / L - start) / (end - start));
    double w = 1.0 - keep;
    return (1.0 - w) * f(x) + w * f(xref);
}

inline std::vector<double> collar_flatten(const GridSpec& g,
                                          const std::function<double(const Vec&)>& f,
                                          double start = 0.85, double end = 0.97) {
    std::vector<double> out(g.size());
    for (size_t i = 0; i < g.size(); ++i) out[i] = collar_value(g, f, g.point(i), start, end);
    return out;
}

// ---------------------------------------------------------------------------
// Matrix-free application of the differential operator P.

class POperator {
public:
    POperator(const HamiltonianSpec& spec, GridPtr g, double t) : g_(std::move(g)), n_(spec.n) {
        if (spec.n != g_->dim()) throw std::invalid_argument("POperator: dimension mismatch");
        gcoef_.resize(static_cast<size_t>(n_ * n_));
        for (int j = 0; j < n_; ++j)
            for (int k = 0; k < n_; ++k)
                gcoef_[static_cast<size_t>(j * n_ + k)] =
                    collar_flatten(*g_, [&](const Vec& x) { return spec.g_at(j, k, x); });
        if (spec.has_magnetic) {
            acoef_.resize(static_cast<size_t>(n_));
            for (int j = 0; j < n_; ++j)
                acoef_[static_cast<size_t>(j)] =
                    collar_flatten(*g_, [&](const Vec& x) { return spec.magnetic_at(j, t, x); });
        }
        if (spec.potential)
            vcoef_ = collar_flatten(*g_, [&](const Vec& x) { return spec.potential_at(t, x); });

        aliasing_tail_ = 0.0;
        auto check_tail = [&](const std::vector<double>& c) {
            GridFunction u(g_);
            bool constant = true;
            for (size_t i = 1; i < c.size() && constant; ++i) constant = (c[i] == c[0]);
            if (constant) return;  // constants have no tail
            for (size_t i = 0; i < c.size(); ++i) u[i] = c[i];
            aliasing_tail_ = std::max(aliasing_tail_, spectral_tail_fraction(u, 0.5));
        };
        for (const auto& c : gcoef_) check_tail(c);
        for (const auto& c : acoef_) check_tail(c);
        if (!vcoef_.empty()) check_tail(vcoef_);
    }

    const GridPtr& grid() const { return g_; }
    double aliasing_tail() const { return aliasing_tail_; }
    bool aliasing_warning() const { return aliasing_tail_ > 1e-6; }

    GridFunction apply(const GridFunction& u) const {
        // v_k = (D_k - a_k) u, w_j = sum_k g^{jk} v_k, out = sum_j (D_j - a_j) w_j + V u
        std::vector<GridFunction> v;
        v.reserve(static_cast<size_t>(n_));
        for (int k = 0; k < n_; ++k) {
            GridFunction d = spectral_derivative(u, k);
            d *= std::complex<double>(0.0, -1.0);  // D = -i d/dx
            if (!acoef_.empty()) {
                for (size_t i = 0; i < d.size(); ++i)
                    d[i] -= acoef_[static_cast<size_t>(k)][i] * u[i];
            }
            v.push_back(std::move(d));
        }
        GridFunction out(g_);
        for (int j = 0; j < n_; ++j) {
            GridFunction w(g_);
            for (int k = 0; k < n_; ++k) {
                const auto& gj = gcoef_[static_cast<size_t>(j * n_ + k)];
                for (size_t i = 0; i < w.size(); ++i) w[i] += gj[i] * v[static_cast<size_t>(k)][i];
            }
            GridFunction dw = spectral_derivative(w, j);
            dw *= std::complex<double>(0.0, -1.0);
            if (!acoef_.empty())
                for (size_t i = 0; i < dw.size(); ++i)
                    dw[i] -= acoef_[static_cast<size_t>(j)][i] * w[i];
            out += dw;
        }
        if (!vcoef_.empty())
            for (size_t i = 0; i < out.size(); ++i) out[i] += vcoef_[i] * u[i];
        return out;
    }

private:
    GridPtr g_;
    int n_;
    std::vector<std::vector<double>> gcoef_;
    std::vector<std::vector<double>> acoef_;
    std::vector<double> vcoef_;
    double aliasing_tail_ = 0.0;
};

inline GridFunction apply_P(const HamiltonianSpec& spec, double t, const GridFunction& u) {
    return POperator(spec, u.grid(), t).apply(u);
}

// ---------------------------------------------------------------------------
// E_s: Weyl operator with symbol (1 + |xi|^2 + |x|^m)^{s/2}.

enum class EsMode { dense_exact, surrogate };

class EsOperator {
public:
    /// Dense mode builds the midpoint kernel (n = 1 only). Surrogate mode is
    ///   G_s u = (1/2)[ w_s (F^-1 d_s F u) + F^-1 d_s F (w_s u) ],
    /// d_s = (1+|xi|^2)^{s/2}, w_s = (1+q_c(x))^{s/2}/stabilizer, with q_c the
    /// collar-flattened |x|^m; the stabilizer is calibrated on Gaussian and
    /// coherent states so surrogate norms track the exact ones.
    static EsOperator make(GridPtr g, double s, double m, EsMode mode, uint64_t seed = 4242) {
        EsOperator op;
        op.g_ = std::move(g);
        op.s_ = s;
        op.m_ = m;
        op.mode_ = mode;
        auto growth = [m](const Vec& x) { return std::pow(x.norm(), m); };
        auto qc = collar_flatten(*op.g_, growth);
        if (mode == EsMode::dense_exact) {
            if (op.g_->dim() != 1)
                throw std::invalid_argument("EsOperator: dense mode requires n = 1");
            const GridSpec& gs = *op.g_;
            op.dense_ = std::make_shared<DenseOperator>(weyl_quantize_dense(
                [s, &gs, &growth](double x, double xi) {
                    return std::pow(1.0 + xi * xi + collar_value(gs, growth, Vec{x}), 0.5 * s);
                },
                gs));
            return op;
        }
        op.dmult_ = FourierMultiplier(op.g_, [s](const Vec& xi) {
            return std::pow(1.0 + xi.norm2(), 0.5 * s);
        });
        op.wgt_.resize(op.g_->size());
        for (size_t i = 0; i < op.wgt_.size(); ++i) op.wgt_[i] = std::pow(1.0 + qc[i], 0.5 * s);
        op.calibrate(seed);
        return op;
    }

    GridFunction apply(const GridFunction& u) const {
        if (mode_ == EsMode::dense_exact) return dense_->apply(u);
        GridFunction a = dmult_.apply(u);
        a.scale_pointwise(wgt_);
        GridFunction b = u;
        b.scale_pointwise(wgt_);
        b = dmult_.apply(b);
        a += b;
        a *= std::complex<double>(0.5 / stabilizer_, 0.0);
        return a;
    }

    double stabilizer() const { return stabilizer_; }
    EsMode mode() const { return mode_; }
    const DenseOperator& dense() const { return *dense_; }

private:
    void calibrate(uint64_t seed) {
        // 16 calibration states; target norms are dense-exact in 1-D and the
        // coherent-state symbol value e_s(x0, xi0) ||u|| in 2-D
        const GridSpec& g = *g_;
        std::shared_ptr<DenseOperator> exact;
        if (g.dim() == 1 && g.points_per_axis() <= 512)
            exact = std::make_shared<DenseOperator>(
                EsOperator::make(g_, s_, m_, EsMode::dense_exact).dense());
        Rng rng(seed);
        std::vector<double> ratios;
        double worst = 0.0;
        for (int c = 0; c < 16; ++c) {
            double width = rng.uniform(0.5, 1.2);
            double x0 = rng.uniform(-g.box() / 8.0, g.box() / 8.0);
            double k0 = (c % 4) * g.nyquist() / 8.0;
            GridFunction u = GridFunction::sample(g_, [&](const Vec& x) {
                double phase = k0 * x[0];
                double r2 = 0.0;
                for (int a = 0; a < x.dim(); ++a) {
                    double d = x[a] - (a == 0 ? x0 : 0.0);
                    r2 += d * d;
                }
                return std::polar(std::exp(-r2 / (2.0 * width * width)), phase);
            });
            u.normalize();
            double target;
            if (exact) {
                target = exact->apply(u).norm();
            } else {
                Vec xc(g.dim()), kc(g.dim());
                xc[0] = x0;
                kc[0] = k0;
                target = std::pow(1.0 + kc.norm2() + std::pow(xc.norm(), m_), 0.5 * s_);
            }
            double raw = raw_norm(u);
            if (target > 0.0) ratios.push_back(raw / target);
        }
        if (ratios.empty()) throw CalibrationError("E_s calibration produced no usable states");
        std::sort(ratios.begin(), ratios.end());
        stabilizer_ = ratios[ratios.size() / 2];
        for (double r : ratios) worst = std::max(worst, std::max(r / stabilizer_, stabilizer_ / r));
        if (worst > 4.0)
            throw CalibrationError("E_s surrogate calibration mismatch exceeds factor 4");
    }

    double raw_norm(const GridFunction& u) const {
        GridFunction a = dmult_.apply(u);
        a.scale_pointwise(wgt_);
        GridFunction b = u;
        b.scale_pointwise(wgt_);
        b = dmult_.apply(b);
        a += b;
        a *= std::complex<double>(0.5, 0.0);
        return a.norm();
    }

    GridPtr g_;
    double s_ = 0.0, m_ = 2.0;
    EsMode mode_ = EsMode::surrogate;
    std::shared_ptr<DenseOperator> dense_;
    FourierMultiplier dmult_;
    std::vector<double> wgt_;
    double stabilizer_ = 1.0;
};

// ---------------------------------------------------------------------------
// Normalized angular derivative: the quantization surrogate for
// (x_j xi_k - x_k xi_j)/(<x><xi>), built as (1/2)[ M L J + J L M ] with
// M = multiplication by 1/<x>, J = <D>^{-1}, L = x_j D_k - x_k D_j.

inline GridFunction apply_ljk(const GridFunction& u, int j, int k) {
    const GridSpec& g = *u.grid();
    if (g.dim() < 2) throw std::invalid_argument("apply_ljk: requires n >= 2");
    if (j == k) return GridFunction(u.grid());

    FourierMultiplier J(u.grid(), [](const Vec& xi) { return 1.0 / japanese_bracket(xi); });
    auto L = [&](const GridFunction& w) {
        GridFunction dk = spectral_derivative(w, k);
        dk *= std::complex<double>(0.0, -1.0);
        GridFunction dj = spectral_derivative(w, j);
        dj *= std::complex<double>(0.0, -1.0);
        GridFunction out(w.grid());
        for (size_t i = 0; i < out.size(); ++i) {
            Vec x = g.point(i);
            out[i] = x[j] * dk[i] - x[k] * dj[i];
        }
        return out;
    };
    auto M = [&](GridFunction w) {
        for (size_t i = 0; i < w.size(); ++i) w[i] *= 1.0 / japanese_bracket(g.point(i));
        return w;
    };
    GridFunction first = M(L(J.apply(u)));
    GridFunction second = J.apply(L(M(u)));
    first += second;
    first *= std::complex<double>(0.5, 0.0);
    return first;
}

// ---------------------------------------------------------------------------
// Commutator remainder probe: R = [P, Lam] - (1/i) HpLam measured as
// ||R Pi|| with Pi = (smooth spatial window) o (band limit to N/4), by power
// iteration on (R Pi)^H (R Pi). Probes are band limited and confined, which
// is what keeps the periodic seam out of the estimate.

struct CommutatorResult {
    double norm_estimate = 0.0;
    bool converged = true;
};

inline DenseOperator probe_projector(GridPtr g, double band_fraction = 0.25) {
    const GridSpec& gs = *g;
    int N = gs.points_per_axis();
    if (gs.dim() != 1) throw std::invalid_argument("probe_projector: one-dimensional only");
    // band limit in Fourier
    DenseOperator B(N);
    std::vector<std::complex<double>> col(static_cast<size_t>(N));
    for (int jcol = 0; jcol < N; ++jcol) {
        for (auto& z : col) z = {0.0, 0.0};
        col[static_cast<size_t>(jcol)] = {1.0, 0.0};
        fft_forward_inplace(gs, col.data());
        int cut = static_cast<int>(band_fraction * N / 2);
        for (int i = 0; i < N; ++i)
            if (std::abs(gs.signed_mode(i)) > cut) col[static_cast<size_t>(i)] = {0.0, 0.0};
        fft_backward_inplace(gs, col.data());
        for (int i = 0; i < N; ++i) B.at(i, jcol) = col[static_cast<size_t>(i)];
    }
    // Gaussian confinement: ~1e-16 at the seam, spectrally narrow, so probes
    // never see the sawtooth discontinuity of multiplication by x
    double w0 = gs.box() / 6.0;
    for (int i = 0; i < N; ++i) {
        double x = gs.coord(i);
        double w = std::exp(-x * x / (w0 * w0));
        for (int jcol = 0; jcol < N; ++jcol) B.at(i, jcol) *= w;
    }
    return B;
}

inline CommutatorResult commutator_residual_norm(const DenseOperator& P, const DenseOperator& Lam,
                                                 const DenseOperator& HpLam, GridPtr g,
                                                 int iters = 30, int restarts = 3,
                                                 uint64_t seed = 777) {
    DenseOperator R = commutator(P, Lam);
    DenseOperator iH = HpLam;
    iH *= std::complex<double>(0.0, 1.0);  // -(1/i) = +i
    R += iH;
    DenseOperator RP = multiply(R, probe_projector(std::move(g)));
    CommutatorResult res;
    res.norm_estimate = RP.norm_estimate(iters, restarts, seed);
    return res;
}

// ---------------------------------------------------------------------------
// Lower-bound form check: <(-H_p lambda)^w u, u> against the weighted
// smoothing norm, fitted over an ensemble with the shared protocol.

inline EstimateReport garding_form_check(const SmoothingMultiplier& mult, GridPtr g,
                                         const std::vector<GridFunction>& states) {
    if (g->dim() != 1)
        throw std::invalid_argument("garding_form_check: dense path requires n = 1");
    const double nu = mult.params().nu;
    const double m = mult.params().m;

    DenseOperator B = weyl_quantize_dense(
        [&](double x, double xi) {
            return mult.minus_hp_direct(PhasePoint(Vec{x}, Vec{xi})).value;
        },
        *g);
    EsOperator E = EsOperator::make(g, 1.0 / m, m, EsMode::dense_exact);
    std::vector<double> wvec(g->size());
    for (size_t i = 0; i < g->size(); ++i)
        wvec[i] = std::pow(japanese_bracket(g->point(i)), -0.5 * (1.0 + nu));

    EstimateReport rep;
    rep.experiment = "garding";
    rep.columns = {"form", "weighted_norm2", "norm2"};
    std::vector<double> lhs, w;
    bool all_zero = true;
    for (const auto& u0 : states) {
        GridFunction u = u0;
        u.normalize();
        double form = std::real(inner(B.apply(u), u));
        GridFunction v = E.apply(u);
        v.scale_pointwise(wvec);
        double wn = v.norm2();
        lhs.push_back(form);
        w.push_back(wn);
        if (form != 0.0) all_zero = false;
        rep.add_row("state", {form, wn, u.norm2()});
    }
    FitResult fit = fit_lower_bound(lhs, w);
    rep.constants["C"] = fit.C;
    rep.constants["Cprime"] = fit.Cprime;
    rep.constants["budget"] = fit.budget;
    rep.constants["degenerate"] = (fit.degenerate || all_zero) ? 1.0 : 0.0;
    rep.pass = fit.pass && fit.C > 0.0 && !all_zero;
    return rep;
}

}  // namespace smoothlab

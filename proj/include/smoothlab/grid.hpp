#pragma once

// Periodic tensor grids on [-L, L)^n, complex grid functions with
// cell-weighted L^2 geometry, FFT plumbing (FFTW, deterministic ESTIMATE
// plans, cached per shape), Fourier multipliers with per-axis Nyquist
// symmetrization, and the binary snapshot format.

#include <fftw3.h>

#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "smoothlab/core.hpp"
#include "smoothlab/report.hpp"

namespace smoothlab {

class GridSpec {
public:
    GridSpec(int n, int N, double L) : n_(n), N_(N), L_(L) {
        if (n < 1 || n > 2) throw std::invalid_argument("GridSpec: n must be 1 or 2");
        if (N < 4 || (N & (N - 1)) != 0) throw std::invalid_argument("GridSpec: N must be a power of two");
        if (!(L > 0.0)) throw std::invalid_argument("GridSpec: L must be positive");
    }

    int dim() const { return n_; }
    int points_per_axis() const { return N_; }
    double box() const { return L_; }
    size_t size() const {
        size_t s = 1;
        for (int i = 0; i < n_; ++i) s *= static_cast<size_t>(N_);
        return s;
    }
    double spacing() const { return 2.0 * L_ / N_; }
    double cell_volume() const {
        double v = 1.0;
        for (int i = 0; i < n_; ++i) v *= spacing();
        return v;
    }
    double coord(int i) const { return -L_ + i * spacing(); }

    /// Signed mode index: j -> j for j <= N/2, j - N otherwise (the +N/2 slot
    /// is the shared Nyquist mode).
    int signed_mode(int j) const { return j <= N_ / 2 ? j : j - N_; }
    double freq(int j) const { return (3.141592653589793238463 / L_) * signed_mode(j); }
    double nyquist() const { return 3.141592653589793238463 * N_ / (2.0 * L_); }
    bool resolves(double frequency, double factor = 4.0) const {
        return nyquist() >= factor * frequency;
    }

    size_t index(int i0, int i1 = 0) const {
        return n_ == 1 ? static_cast<size_t>(i0)
                       : static_cast<size_t>(i0) * static_cast<size_t>(N_) + static_cast<size_t>(i1);
    }
    Vec point(size_t flat) const {
        Vec x(n_);
        if (n_ == 1) {
            x[0] = coord(static_cast<int>(flat));
        } else {
            x[0] = coord(static_cast<int>(flat / static_cast<size_t>(N_)));
            x[1] = coord(static_cast<int>(flat % static_cast<size_t>(N_)));
        }
        return x;
    }
    Vec freq_point(size_t flat) const {
        Vec xi(n_);
        if (n_ == 1) {
            xi[0] = freq(static_cast<int>(flat));
        } else {
            xi[0] = freq(static_cast<int>(flat / static_cast<size_t>(N_)));
            xi[1] = freq(static_cast<int>(flat % static_cast<size_t>(N_)));
        }
        return xi;
    }

private:
    int n_;
    int N_;
    double L_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

inline GridPtr make_grid(int n, int N, double L) { return std::make_shared<GridSpec>(n, N, L); }

class GridFunction {
public:
    using Cx = std::complex<double>;

    GridFunction() = default;
    explicit GridFunction(GridPtr g) : g_(std::move(g)), v_(g_->size(), Cx{0.0, 0.0}) {}

    static GridFunction sample(GridPtr g, const std::function<Cx(const Vec&)>& f) {
        GridFunction u(std::move(g));
        for (size_t i = 0; i < u.v_.size(); ++i) u.v_[i] = f(u.g_->point(i));
        return u;
    }

    const GridPtr& grid() const { return g_; }
    size_t size() const { return v_.size(); }
    Cx* data() { return v_.data(); }
    const Cx* data() const { return v_.data(); }
    Cx operator[](size_t i) const { return v_[i]; }
    Cx& operator[](size_t i) { return v_[i]; }

    double norm2() const {
        double s = 0.0;
        for (const Cx& z : v_) s += std::norm(z);
        return s * g_->cell_volume();
    }
    double norm() const { return std::sqrt(norm2()); }

    GridFunction& operator+=(const GridFunction& o) {
        check_same(o);
        for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        check_same(o);
        for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    GridFunction& operator*=(Cx s) {
        for (auto& z : v_) z *= s;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(Cx s, GridFunction a) { return a *= s; }

    GridFunction& axpy(Cx alpha, const GridFunction& o) {
        check_same(o);
        for (size_t i = 0; i < v_.size(); ++i) v_[i] += alpha * o.v_[i];
        return *this;
    }
    GridFunction& scale_pointwise(const std::vector<double>& w) {
        if (w.size() != v_.size()) throw std::invalid_argument("scale_pointwise: size mismatch");
        for (size_t i = 0; i < v_.size(); ++i) v_[i] *= w[i];
        return *this;
    }
    GridFunction& normalize() {
        double s = norm();
        if (s == 0.0) throw std::runtime_error("normalize: zero grid function");
        return *this *= Cx{1.0 / s, 0.0};
    }

private:
    void check_same(const GridFunction& o) const {
        if (!g_ || !o.g_ || g_->size() != o.g_->size() || g_->dim() != o.g_->dim())
            throw std::invalid_argument("grid function shape mismatch");
    }

    GridPtr g_;
    std::vector<Cx> v_;
};

inline std::complex<double> inner(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner: size mismatch");
    std::complex<double> s{0.0, 0.0};
    for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s * a.grid()->cell_volume();
}

// ---------------------------------------------------------------------------
// FFT plumbing. Plans use FFTW_ESTIMATE so the transform algorithm (and thus
// every last bit of the output) is reproducible run to run.

namespace detail {

class FftCache {
public:
    static FftCache& instance() {
        static FftCache cache;
        return cache;
    }

    void execute(int n, int N, std::complex<double>* data, bool forward) {
        fftw_plan plan = get_plan(n, N, forward);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

private:
    fftw_plan get_plan(int n, int N, bool forward) {
        std::lock_guard<std::mutex> lock(mx_);
        auto key = std::make_tuple(n, N, forward);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        size_t total = static_cast<size_t>(N);
        if (n == 2) total *= static_cast<size_t>(N);
        std::vector<std::complex<double>> scratch(total);
        auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
        int sign = forward ? FFTW_FORWARD : FFTW_BACKWARD;
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = (n == 1) ? fftw_plan_dft_1d(N, ptr, ptr, sign, flags)
                                  : fftw_plan_dft_2d(N, N, ptr, ptr, sign, flags);
        if (!plan) throw std::runtime_error("FFTW plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mx_;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized forward transform (in place on a copy).
inline void fft_forward_inplace(const GridSpec& g, std::complex<double>* data) {
    detail::FftCache::instance().execute(g.dim(), g.points_per_axis(), data, true);
}
/// Inverse of fft_forward_inplace (includes the 1/size factor).
inline void fft_backward_inplace(const GridSpec& g, std::complex<double>* data) {
    detail::FftCache::instance().execute(g.dim(), g.points_per_axis(), data, false);
    double inv = 1.0 / static_cast<double>(g.size());
    for (size_t i = 0; i < g.size(); ++i) data[i] *= inv;
}

/// Precomputed real Fourier multiplier. The shared Nyquist slot of each axis
/// is assigned the average of the symbol over the +/- Nyquist frequencies,
/// which keeps quantizations of real symbols Hermitian (odd symbols get an
/// exact zero there).
class FourierMultiplier {
public:
    FourierMultiplier() = default;
    FourierMultiplier(GridPtr g, const std::function<double(const Vec&)>& symbol)
        : g_(std::move(g)), mult_(g_->size(), 0.0) {
        int N = g_->points_per_axis();
        int n = g_->dim();
        for (size_t flat = 0; flat < mult_.size(); ++flat) {
            int idx[2] = {0, 0};
            if (n == 1) {
                idx[0] = static_cast<int>(flat);
            } else {
                idx[0] = static_cast<int>(flat / static_cast<size_t>(N));
                idx[1] = static_cast<int>(flat % static_cast<size_t>(N));
            }
            // enumerate Nyquist sign choices per axis
            std::vector<int> nyq_axes;
            for (int a = 0; a < n; ++a)
                if (idx[a] == N / 2) nyq_axes.push_back(a);
            double acc = 0.0;
            int combos = 1 << nyq_axes.size();
            for (int c = 0; c < combos; ++c) {
                Vec xi(n);
                for (int a = 0; a < n; ++a) xi[a] = g_->freq(idx[a]);
                for (size_t b = 0; b < nyq_axes.size(); ++b)
                    if (c & (1 << b)) xi[nyq_axes[b]] = -xi[nyq_axes[b]];
                acc += symbol(xi);
            }
            mult_[flat] = acc / combos;
        }
    }

    GridFunction apply(const GridFunction& u) const {
        GridFunction out = u;
        fft_forward_inplace(*g_, out.data());
        for (size_t i = 0; i < mult_.size(); ++i) out[i] *= mult_[i];
        fft_backward_inplace(*g_, out.data());
        return out;
    }

    const std::vector<double>& table() const { return mult_; }

private:
    GridPtr g_;
    std::vector<double> mult_;
};

/// Spectral partial derivative d/dx_axis (the operator is i xi_axis in
/// frequency; the odd symbol zeroes the Nyquist slot, keeping D Hermitian
/// as -i d/dx).
inline GridFunction spectral_derivative(const GridFunction& u, int axis) {
    const GridSpec& g = *u.grid();
    GridFunction out = u;
    fft_forward_inplace(g, out.data());
    int N = g.points_per_axis();
    for (size_t flat = 0; flat < out.size(); ++flat) {
        int j = (g.dim() == 1) ? static_cast<int>(flat)
                               : (axis == 0 ? static_cast<int>(flat / static_cast<size_t>(N))
                                            : static_cast<int>(flat % static_cast<size_t>(N)));
        double xi = (j == N / 2) ? 0.0 : g.freq(j);
        out[flat] *= std::complex<double>(0.0, xi);
    }
    fft_backward_inplace(g, out.data());
    return out;
}

/// Fraction of spectral energy beyond `frac` of the Nyquist frequency on any
/// axis; the aliasing guard for coefficient grids.
inline double spectral_tail_fraction(const GridFunction& u, double frac = 0.5) {
    const GridSpec& g = *u.grid();
    GridFunction hat = u;
    fft_forward_inplace(g, hat.data());
    int N = g.points_per_axis();
    int cut = static_cast<int>(frac * N / 2);
    double tail = 0.0, total = 0.0;
    for (size_t flat = 0; flat < hat.size(); ++flat) {
        double e = std::norm(hat[flat]);
        total += e;
        bool beyond = false;
        if (g.dim() == 1) {
            beyond = std::abs(g.signed_mode(static_cast<int>(flat))) > cut;
        } else {
            int j0 = static_cast<int>(flat / static_cast<size_t>(N));
            int j1 = static_cast<int>(flat % static_cast<size_t>(N));
            beyond = std::abs(g.signed_mode(j0)) > cut || std::abs(g.signed_mode(j1)) > cut;
        }
        if (beyond) tail += e;
    }
    return total > 0.0 ? tail / total : 0.0;
}

// ---------------------------------------------------------------------------
// Snapshot format: header (uint32 n, uint32 N, float64 L, float64 time) then
// size() complex64 values (float32 re, float32 im), little-endian.

inline void write_snapshot(const GridFunction& u, double time, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const GridSpec& g = *u.grid();
    uint32_t n = static_cast<uint32_t>(g.dim());
    uint32_t N = static_cast<uint32_t>(g.points_per_axis());
    double L = g.box();
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&N), 4);
    out.write(reinterpret_cast<const char*>(&L), 8);
    out.write(reinterpret_cast<const char*>(&time), 8);
    std::vector<float> buf(2 * u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        buf[2 * i] = static_cast<float>(u[i].real());
        buf[2 * i + 1] = static_cast<float>(u[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
}

inline GridFunction read_snapshot(const std::filesystem::path& path, double* time_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    uint32_t n = 0, N = 0;
    double L = 0.0, time = 0.0;
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&N), 4);
    in.read(reinterpret_cast<char*>(&L), 8);
    in.read(reinterpret_cast<char*>(&time), 8);
    if (!in) throw std::runtime_error("snapshot header truncated: " + path.string());
    GridFunction u(make_grid(static_cast<int>(n), static_cast<int>(N), L));
    std::vector<float> buf(2 * u.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in) throw std::runtime_error("snapshot payload truncated: " + path.string());
    for (size_t i = 0; i < u.size(); ++i)
        u[i] = {static_cast<double>(buf[2 * i]), static_cast<double>(buf[2 * i + 1])};
    if (time_out) *time_out = time;
    return u;
}

/// 1-D slice export (axis 0 at the middle index of the other axis in 2-D).
inline void write_slice_csv(const GridFunction& u, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const GridSpec& g = *u.grid();
    out << "x,re,im,abs\n";
    int N = g.points_per_axis();
    for (int i = 0; i < N; ++i) {
        size_t flat = (g.dim() == 1) ? g.index(i) : g.index(i, N / 2);
        out << format_double(g.coord(i)) << "," << format_double(u[flat].real()) << ","
            << format_double(u[flat].imag()) << "," << format_double(std::abs(u[flat])) << "\n";
    }
}

}  // namespace smoothlab

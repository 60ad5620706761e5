#pragma once

// Small dense vectors, phase-space points and shared numeric helpers.
// Dimensions are tiny (n <= 3), so vectors live on the stack.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace smoothlab {

class Vec {
public:
    static constexpr int max_dim = 3;

    Vec() = default;
    explicit Vec(int n, double fill = 0.0) : n_(n) {
        if (n < 0 || n > max_dim) throw std::invalid_argument("Vec: dimension out of range");
        v_.fill(0.0);
        for (int i = 0; i < n_; ++i) v_[i] = fill;
    }
    Vec(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
        if (n_ > max_dim) throw std::invalid_argument("Vec: dimension out of range");
        v_.fill(0.0);
        int i = 0;
        for (double x : xs) v_[i++] = x;
    }

    int dim() const { return n_; }
    double operator[](int i) const { return v_[static_cast<size_t>(i)]; }
    double& operator[](int i) { return v_[static_cast<size_t>(i)]; }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < n_; ++i) v_[i] += o.v_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < n_; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < n_; ++i) v_[i] *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator*(Vec a, double s) { return a *= s; }

    double dot(const Vec& o) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i) s += v_[i] * o.v_[i];
        return s;
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    bool all_finite() const {
        for (int i = 0; i < n_; ++i)
            if (!std::isfinite(v_[i])) return false;
        return true;
    }

private:
    std::array<double, max_dim> v_{};
    int n_ = 0;
};

/// <v> = (1 + |v|^2)^{1/2}; always >= 1.
inline double japanese_bracket(const Vec& v) { return std::sqrt(1.0 + v.norm2()); }
inline double japanese_bracket(double s) { return std::sqrt(1.0 + s * s); }

/// A point (x, xi) in the cotangent bundle of R^n.
struct PhasePoint {
    Vec x;
    Vec xi;

    PhasePoint() = default;
    PhasePoint(Vec x_, Vec xi_) : x(std::move(x_)), xi(std::move(xi_)) {
        if (x.dim() != xi.dim()) throw std::invalid_argument("PhasePoint: x/xi dimension mismatch");
        if (!x.all_finite() || !xi.all_finite())
            throw std::invalid_argument("PhasePoint: non-finite component");
    }
    int dim() const { return x.dim(); }
};

inline double phase_distance(const PhasePoint& a, const PhasePoint& b) {
    return std::sqrt((a.x - b.x).norm2() + (a.xi - b.xi).norm2());
}

// Deterministic 64-bit RNG: every sampled quantity must be reproducible
// from a seed recorded in the run environment.
class Rng {
public:
    explicit Rng(uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {
        // xorshift64*
        s_ ^= s_ >> 12;
        s_ ^= s_ << 25;
        s_ ^= s_ >> 27;
        return s_ * 0x2545f4914f6cdd1dull;
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        // Box-Muller; one value per call keeps the stream layout simple.
        double u1 = std::max(uniform(), 1e-300);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }
    Vec unit_vector(int n) {
        Vec v(n);
        double r2 = 0.0;
        do {
            for (int i = 0; i < n; ++i) v[i] = normal();
            r2 = v.norm2();
        } while (r2 < 1e-12);
        return v * (1.0 / std::sqrt(r2));
    }

private:
    uint64_t s_;
};

inline int worker_count() {
    if (const char* env = std::getenv("SMOOTHLAB_WORKERS")) {
        int k = std::atoi(env);
        if (k >= 1) return k;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, count). Results must be stored by index by the
/// callee; scheduling never influences values.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    auto run = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    int t = std::min<size_t>(static_cast<size_t>(workers), count);
    pool.reserve(static_cast<size_t>(t));
    for (int k = 0; k < t; ++k) pool.emplace_back(run);
    for (auto& th : pool) th.join();
}

inline double median_abs(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    for (auto& x : xs) x = std::abs(x);
    size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<long>(mid), xs.end());
    return xs[mid];
}

}  // namespace smoothlab

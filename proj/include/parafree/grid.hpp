#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace parafree {

/// Spatial point; components beyond the grid dimension are zero.
using Vec = std::array<double, 3>;
/// Node multi-index; the last used axis (n-1) is the normal direction x_n.
using Idx = std::array<int, 3>;

inline double dot(const Vec& a, const Vec& b, int n) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += a[d] * b[d];
    return s;
}

inline double norm2(const Vec& a, int n) { return dot(a, a, n); }

/**
 * Uniform space-time grid on [-L,L]^n x [t_start, t_end].
 *
 * Node i sits at (i - c) h with c = (M-1)/2, so x = 0 and the thin hyperplane
 * x_n = 0 are nodes and mirrored nodes have exactly opposite coordinates.
 */
struct GridSpec {
    int n = 2;
    double L = 6.0;
    int M = 193;
    int K = 256;
    double t_start = -1.0;
    double t_end = 0.0;

    double h() const { return 2.0 * L / (M - 1); }
    double tau() const { return (t_end - t_start) / K; }
    int center() const { return (M - 1) / 2; }
    double coord(int i) const { return (i - center()) * h(); }
    double time(int k) const { return t_start + (t_end - t_start) * k / K; }

    Vec node(const Idx& I) const {
        Vec x{0.0, 0.0, 0.0};
        for (int d = 0; d < n; ++d) x[d] = coord(I[d]);
        return x;
    }

    std::size_t full_slice_size() const {
        std::size_t s = 1;
        for (int d = 0; d < n; ++d) s *= static_cast<std::size_t>(M);
        return s;
    }

    /// Nodes per slice when only x_n >= 0 is stored.
    std::size_t half_slice_size() const {
        return full_slice_size() / M * static_cast<std::size_t>(center() + 1);
    }

    void validate() const {
        if (n != 2 && n != 3) throw InvalidGrid("dimension must be 2 or 3");
        if (M < 5 || M % 2 == 0) throw InvalidGrid("M must be odd and at least 5");
        if (!(L > 0.0)) throw InvalidGrid("L must be positive");
        if (K < 1) throw InvalidGrid("K must be at least 1");
        if (!(t_end > t_start)) throw InvalidGrid("empty time interval");
    }
};

inline bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.n == b.n && a.L == b.L && a.M == b.M && a.K == b.K && a.t_start == b.t_start &&
           a.t_end == b.t_end;
}

/// Backward heat kernel centred at (x0, t0); zero for t >= t0.
inline double kernel_value(const Vec& x, double t, const Vec& x0, double t0, int n) {
    const double s = t0 - t;
    if (!(s > 0.0)) return 0.0;
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (x[d] - x0[d]) * (x[d] - x0[d]);
    return std::pow(4.0 * std::numbers::pi * s, -0.5 * n) * std::exp(-r2 / (4.0 * s));
}

/// Space-time base point z0 = (x0, t0).
struct BasePoint {
    Vec x{0.0, 0.0, 0.0};
    double t = 0.0;
};

/**
 * Index arithmetic for one time slice. With half storage only the nodes with
 * x_n >= 0 are kept and the mirrored node maps onto the same slot.
 */
struct SliceLayout {
    int n = 2;
    int M = 0;
    int c = 0;
    bool half = false;

    SliceLayout() = default;
    SliceLayout(const GridSpec& g, bool half_storage)
        : n(g.n), M(g.M), c(g.center()), half(half_storage) {}

    int normal_extent() const { return half ? c + 1 : M; }

    std::size_t size() const {
        std::size_t s = static_cast<std::size_t>(normal_extent());
        for (int d = 0; d + 1 < n; ++d) s *= static_cast<std::size_t>(M);
        return s;
    }

    std::size_t offset(const Idx& I) const {
        const int j = half ? std::abs(I[n - 1] - c) : I[n - 1];
        std::size_t off = static_cast<std::size_t>(j);
        for (int d = n - 2; d >= 0; --d) off = off * static_cast<std::size_t>(M) + I[d];
        return off;
    }

    /// Stride between neighbours along axis d in the stored layout.
    std::size_t stride(int d) const {
        std::size_t s = 1;
        for (int e = 0; e < d; ++e) s *= static_cast<std::size_t>(M);
        return s;
    }

    /// Full-grid index of a stored slot (the x_n >= 0 representative).
    Idx index(std::size_t off) const {
        Idx I{0, 0, 0};
        for (int d = 0; d + 1 < n; ++d) {
            I[d] = static_cast<int>(off % M);
            off /= M;
        }
        I[n - 1] = half ? static_cast<int>(off) + c : static_cast<int>(off);
        return I;
    }
};

}  // namespace parafree

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace parafree {

/// Value, spatial gradient and time derivative of a field at one point.
struct Sample {
    double u = 0.0;
    Vec grad{0.0, 0.0, 0.0};
    double dt = 0.0;
};

/**
 * Any space-time function the quadrature can integrate. Grid fields report
 * continuous_time() == false and are integrated on their own time nodes;
 * continuous fields may be sampled at any time.
 */
template <class F>
concept SpaceTimeField = requires(const F& f, const Vec& x, double t, const Idx& I, int k) {
    { f.grid() } -> std::convertible_to<GridSpec>;
    { f.sample(x, t) } -> std::same_as<Sample>;
    { f.sample_node(I, k) } -> std::same_as<Sample>;
    { f.continuous_time() } -> std::convertible_to<bool>;
    { f.even() } -> std::convertible_to<bool>;
};

/**
 * Discrete space-time field u[i, k] on a GridSpec. Even fields store only the
 * half x_n >= 0; reads of x_n < 0 nodes return the mirrored value, so the even
 * symmetry holds exactly at node level.
 */
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(const GridSpec& g, bool even_symmetric)
        : grid_(g), layout_(g, even_symmetric), even_(even_symmetric) {
        g.validate();
        data_.assign(layout_.size() * static_cast<std::size_t>(g.K + 1), 0.0);
    }

    const GridSpec& grid() const { return grid_; }
    const SliceLayout& layout() const { return layout_; }
    bool even() const { return even_; }
    static constexpr bool continuous_time() { return false; }

    std::size_t slice_size() const { return layout_.size(); }
    double* slice(int k) { return data_.data() + static_cast<std::size_t>(k) * layout_.size(); }
    const double* slice(int k) const {
        return data_.data() + static_cast<std::size_t>(k) * layout_.size();
    }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double value(const Idx& I, int k) const { return slice(k)[layout_.offset(I)]; }
    double& value(const Idx& I, int k) { return slice(k)[layout_.offset(I)]; }

    /// Fills every node from f(x, t).
    template <class Fn>
    void fill(Fn&& f) {
        for (int k = 0; k <= grid_.K; ++k) {
            const double t = grid_.time(k);
            double* s = slice(k);
            for (std::size_t o = 0; o < layout_.size(); ++o) s[o] = f(grid_.node(layout_.index(o)), t);
        }
    }

    /// First spatial derivative along axis d at a node.
    double derivative(const Idx& I, int k, int d) const {
        const int M = grid_.M;
        const double h = grid_.h();
        const int i = I[d];
        auto at = [&](int shift) {
            Idx J = I;
            J[d] += shift;
            return value(J, k);
        };
        // The thin hyperplane of an even field: one-sided from x_n > 0.
        if (even_ && d == grid_.n - 1 && i == grid_.center())
            return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        if (i == M - 1) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
        return (at(1) - at(-1)) / (2.0 * h);
    }

    /// Backward difference matching the time stepping (forward at k = 0).
    double time_derivative(const Idx& I, int k) const {
        const double tau = grid_.tau();
        if (k == 0) return (value(I, 1) - value(I, 0)) / tau;
        return (value(I, k) - value(I, k - 1)) / tau;
    }

    Sample sample_node(const Idx& I, int k) const {
        Sample s;
        s.u = value(I, k);
        for (int d = 0; d < grid_.n; ++d) s.grad[d] = derivative(I, k, d);
        s.dt = time_derivative(I, k);
        return s;
    }

    /// Gradient of the even extension: the x_n < 0 half reuses the gradient of
    /// the mirror node without flipping the normal component.
    Vec even_gradient(const Idx& I, int k) const {
        Idx J = I;
        const int c = grid_.center();
        if (J[grid_.n - 1] < c) J[grid_.n - 1] = 2 * c - J[grid_.n - 1];
        Vec g{0.0, 0.0, 0.0};
        for (int d = 0; d < grid_.n; ++d) g[d] = derivative(J, k, d);
        return g;
    }

    /// Multilinear interpolation in space and linear in time. Points outside
    /// the box or time range are clamped to it.
    Sample sample(const Vec& x, double t) const { return interpolate_impl(x, t, true); }

    double interpolate(const Vec& x, double t) const { return interpolate_impl(x, t, false).u; }

private:
    Sample interpolate_impl(const Vec& x, double t, bool derivatives) const {
        const int n = grid_.n;
        const int M = grid_.M;
        const double h = grid_.h();
        std::array<int, 3> i0{0, 0, 0};
        std::array<double, 3> w{0.0, 0.0, 0.0};
        for (int d = 0; d < n; ++d) {
            double q = std::clamp(x[d] / h + grid_.center(), 0.0, double(M - 1));
            int i = std::min(static_cast<int>(std::floor(q)), M - 2);
            i0[d] = i;
            w[d] = q - i;
            if (w[d] < 1e-12) w[d] = 0.0;
            if (w[d] > 1.0 - 1e-12) {
                i0[d] = i + 1;
                w[d] = 0.0;
                if (i0[d] == M - 1) {
                    i0[d] = M - 2;
                    w[d] = 1.0;
                }
            }
        }
        double qt = std::clamp((t - grid_.t_start) / grid_.tau(), 0.0, double(grid_.K));
        int k0 = std::min(static_cast<int>(std::floor(qt)), grid_.K - 1);
        double wt = qt - k0;
        if (wt < 1e-12) wt = 0.0;
        if (wt > 1.0 - 1e-12) {
            if (k0 + 1 < grid_.K) {
                ++k0;
                wt = 0.0;
            } else {
                wt = 1.0;
            }
        }
        Sample out;
        const int corners = 1 << n;
        for (int kk = 0; kk < 2; ++kk) {
            const double ct = kk ? wt : 1.0 - wt;
            if (ct == 0.0) continue;
            for (int c = 0; c < corners; ++c) {
                double cw = ct;
                Idx I{0, 0, 0};
                for (int d = 0; d < n; ++d) {
                    const int bit = (c >> d) & 1;
                    cw *= bit ? w[d] : 1.0 - w[d];
                    I[d] = i0[d] + bit;
                }
                if (cw == 0.0) continue;
                if (derivatives) {
                    const Sample s = sample_node(I, k0 + kk);
                    out.u += cw * s.u;
                    for (int d = 0; d < n; ++d) out.grad[d] += cw * s.grad[d];
                    out.dt += cw * s.dt;
                } else {
                    out.u += cw * value(I, k0 + kk);
                }
            }
        }
        return out;
    }

    GridSpec grid_;
    SliceLayout layout_;
    bool even_ = false;
    std::vector<double> data_;
};

/**
 * Field given by a callable returning exact value and derivatives. The grid is
 * nominal: it fixes the truncation box and the spatial spacing the quadrature
 * uses, but nothing is stored.
 */
class AnalyticField {
public:
    using Fn = std::function<Sample(const Vec&, double)>;

    AnalyticField() = default;
    AnalyticField(const GridSpec& g, Fn f, bool even_symmetric, std::string name = {})
        : grid_(g), f_(std::move(f)), even_(even_symmetric), name_(std::move(name)) {}

    const GridSpec& grid() const { return grid_; }
    bool even() const { return even_; }
    static constexpr bool continuous_time() { return true; }
    const std::string& name() const { return name_; }

    Sample sample(const Vec& x, double t) const { return f_(x, t); }
    Sample sample_node(const Idx& I, int k) const { return f_(grid_.node(I), grid_.time(k)); }

    AnalyticField with_grid(const GridSpec& g) const { return AnalyticField(g, f_, even_, name_); }

private:
    GridSpec grid_;
    Fn f_;
    bool even_ = false;
    std::string name_;
};

/// Samples any field on the nodes of g (values only; derivatives are
/// recomputed by finite differences on the result).
template <SpaceTimeField F>
ScalarField materialize(const F& f, const GridSpec& g, bool even_symmetric) {
    ScalarField out(g, even_symmetric);
    out.fill([&](const Vec& x, double t) { return f.sample(x, t).u; });
    return out;
}

}  // namespace parafree

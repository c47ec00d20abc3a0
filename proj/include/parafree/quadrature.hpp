#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"

namespace parafree {

struct QuadOptions {
    /// Half-width of the sampled window, in kernel standard deviations.
    double window = 7.0;
    /// Grid nodes are used when the kernel standard deviation is at least
    /// resolve * h; thinner slices go to a local sub-grid. Fields with
    /// continuous time are always sampled on the local sub-grid.
    double resolve = 1.0;
    /// Local sub-grid points per kernel standard deviation.
    int local_per_sigma = 6;
    /// Time panels for continuous fields (rounded up to even).
    int time_panels = 64;
};

/// Time band (t0 - r^2, t0 - rho^2] at base point z0.
struct StripRegion {
    BasePoint z0;
    double r = 0.0;
    double rho = 0.0;
};

/**
 * One quadrature result. coarse is the same rule with every other node in
 * space and time, used for the embedded error estimate; tail bounds the
 * Gaussian mass cut off by the box times the integrand size on the box faces.
 */
struct Quad {
    double value = 0.0;
    double coarse = 0.0;
    double tail = 0.0;
    double error() const { return std::abs(value - coarse) / 3.0 + tail; }
};

namespace detail {

inline double gaussian_box_mass(const Vec& x0, double sigma, double L, int n) {
    double inside = 1.0;
    for (int d = 0; d < n; ++d) {
        const double a = (-L - x0[d]) / (sigma * std::numbers::sqrt2);
        const double b = (L - x0[d]) / (sigma * std::numbers::sqrt2);
        inside *= 0.5 * (std::erf(b) - std::erf(a));
    }
    return std::max(0.0, 1.0 - inside);
}

struct TimeWeights {
    double fine = 0.0;
    double coarse = 0.0;
};

struct SliceVisit {
    double t = 0.0;
    int k = -1;  // grid slice, or -1 for a continuous-time slice
    TimeWeights w;
};

/// Trapezoid weights on the listed abscissae (fine) and on every other one
/// (coarse, always keeping both ends).
inline void trapezoid_weights(const std::vector<double>& ts, std::vector<double>& wf,
                              std::vector<double>& wc) {
    const std::size_t m = ts.size();
    wf.assign(m, 0.0);
    wc.assign(m, 0.0);
    if (m < 2) return;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double dt = ts[j + 1] - ts[j];
        wf[j] += 0.5 * dt;
        wf[j + 1] += 0.5 * dt;
    }
    std::vector<std::size_t> sub;
    for (std::size_t j = 0; j < m; j += 2) sub.push_back(j);
    if (sub.back() != m - 1) sub.push_back(m - 1);
    for (std::size_t q = 0; q + 1 < sub.size(); ++q) {
        const double dt = ts[sub[q + 1]] - ts[sub[q]];
        wc[sub[q]] += 0.5 * dt;
        wc[sub[q + 1]] += 0.5 * dt;
    }
}

}  // namespace detail

/**
 * Visits every quadrature node of one time slice with the kernel weight folded
 * into the spatial weights: vis(sample, x, t, w_fine, w_coarse, on_face).
 * Returns the Gaussian mass outside the box for this slice.
 */
template <SpaceTimeField F, class Visitor>
double visit_slice(const F& f, double t, int k, const BasePoint& z0, double wt_fine, double wt_coarse,
                   const QuadOptions& opt, Visitor&& vis) {
    const GridSpec& g = f.grid();
    const int n = g.n;
    const double s = z0.t - t;
    if (!(s > 0.0)) return 0.0;
    const double sigma = std::sqrt(2.0 * s);
    const double h = g.h();
    const double W = opt.window * sigma;
    const double norm = std::pow(4.0 * std::numbers::pi * s, -0.5 * n);
    const double inv4s = 1.0 / (4.0 * s);
    const double tail = detail::gaussian_box_mass(z0.x, sigma, g.L, n);

    const bool on_grid = !f.continuous_time() && sigma >= opt.resolve * h;
    double step = h;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0}, ref{0, 0, 0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    if (on_grid) {
        for (int d = 0; d < n; ++d) {
            origin[d] = g.coord(0);
            lo[d] = std::max(0, static_cast<int>(std::ceil((z0.x[d] - W + g.L) / h - 1e-9)));
            hi[d] = std::min(g.M - 1, static_cast<int>(std::floor((z0.x[d] + W + g.L) / h + 1e-9)));
            ref[d] = static_cast<int>(std::lround((z0.x[d] + g.L) / h));
        }
    } else {
        step = sigma / opt.local_per_sigma;
        const int half = static_cast<int>(std::ceil(opt.window * opt.local_per_sigma));
        for (int d = 0; d < n; ++d) {
            origin[d] = z0.x[d] - half * step;
            lo[d] = 0;
            hi[d] = 2 * half;
            ref[d] = half;
        }
    }
    const double cell = std::pow(step, n);
    const double coarse_cell = cell * std::pow(2.0, n);

    Idx I{0, 0, 0};
    Vec x{0.0, 0.0, 0.0};
    auto body = [&]() {
        double face = 1.0;
        bool on_face = false;
        bool parity = true;
        for (int d = 0; d < n; ++d) {
            x[d] = on_grid ? g.coord(I[d]) : origin[d] + I[d] * step;
            if (!on_grid) {
                if (x[d] < -g.L - 1e-12 || x[d] > g.L + 1e-12) return;
                if (std::abs(x[d]) > g.L - step) on_face = true;
            }
            if (on_grid && (I[d] == 0 || I[d] == g.M - 1)) {
                face *= 0.5;
                on_face = true;
            }
            if (((I[d] - ref[d]) & 1) != 0) parity = false;
        }
        double r2 = 0.0;
        for (int d = 0; d < n; ++d) r2 += (x[d] - z0.x[d]) * (x[d] - z0.x[d]);
        const double G = norm * std::exp(-r2 * inv4s);
        if (G == 0.0) return;
        const double wf = wt_fine * cell * face * G;
        const double wc = parity ? wt_coarse * coarse_cell * face * G : 0.0;
        if (wf == 0.0 && wc == 0.0) return;
        Sample smp;
        if (on_grid && !f.continuous_time())
            smp = f.sample_node(I, k);
        else
            smp = f.sample(x, t);
        vis(smp, x, t, wf, wc, on_face);
    };
    if (n == 2) {
        for (I[1] = lo[1]; I[1] <= hi[1]; ++I[1])
            for (I[0] = lo[0]; I[0] <= hi[0]; ++I[0]) body();
    } else {
        for (I[2] = lo[2]; I[2] <= hi[2]; ++I[2])
            for (I[1] = lo[1]; I[1] <= hi[1]; ++I[1])
                for (I[0] = lo[0]; I[0] <= hi[0]; ++I[0]) body();
    }
    return tail;
}

/**
 * Time schedule of a strip: the slices to visit with their trapezoid weights,
 * plus the weight of the end point t0 where the kernel is a point mass.
 */
struct StripSchedule {
    std::vector<detail::SliceVisit> slices;
    detail::TimeWeights endpoint;
    bool has_endpoint = false;
};

template <SpaceTimeField F>
StripSchedule strip_schedule(const F& f, const StripRegion& reg, const QuadOptions& opt) {
    const GridSpec& g = f.grid();
    StripSchedule sch;
    if (!(reg.r > reg.rho)) return sch;
    const double t0 = reg.z0.t;
    const double t_lo = t0 - reg.r * reg.r;
    const double t_hi = t0 - reg.rho * reg.rho;
    const double tau = g.tau();
    if (t_lo < g.t_start - 1e-9 * tau) throw RegionOutOfRange("strip starts before the grid time range");
    if (t0 > g.t_end + 1e-9 * tau) throw RegionOutOfRange("base time after the grid time range");
    const bool endpoint = reg.rho == 0.0;

    std::vector<double> ts;
    if (f.continuous_time()) {
        int m = std::max(2, opt.time_panels);
        if (m % 2) ++m;
        for (int j = 0; j <= m; ++j) ts.push_back(t_lo + (t_hi - t_lo) * j / m);
    } else {
        ts.push_back(t_lo);
        const int k_first = static_cast<int>(std::floor((t_lo - g.t_start) / tau)) + 1;
        for (int k = std::max(0, k_first); k <= g.K; ++k) {
            const double tk = g.time(k);
            if (tk >= t_hi - 1e-9 * tau) break;
            if (tk <= t_lo + 1e-9 * tau) continue;
            ts.push_back(tk);
        }
        ts.push_back(t_hi);
    }
    std::vector<double> wf, wc;
    detail::trapezoid_weights(ts, wf, wc);

    std::map<int, detail::TimeWeights> per_slice;
    std::vector<detail::SliceVisit> free_slices;
    auto add_time = [&](double t, double a, double b) {
        if (f.continuous_time()) {
            free_slices.push_back({t, -1, {a, b}});
            return;
        }
        const double q = (t - g.t_start) / tau;
        int k = static_cast<int>(std::lround(q));
        if (std::abs(q - k) < 1e-9) {
            k = std::clamp(k, 0, g.K);
            per_slice[k].fine += a;
            per_slice[k].coarse += b;
            return;
        }
        int k0 = std::clamp(static_cast<int>(std::floor(q)), 0, g.K - 1);
        double lam = q - k0;
        // Do not lean on a slice at or after t0, where the kernel vanishes.
        if (g.time(k0 + 1) >= t0 - 1e-12) lam = 0.0;
        per_slice[k0].fine += (1.0 - lam) * a;
        per_slice[k0].coarse += (1.0 - lam) * b;
        if (lam > 0.0) {
            per_slice[k0 + 1].fine += lam * a;
            per_slice[k0 + 1].coarse += lam * b;
        }
    };
    for (std::size_t j = 0; j < ts.size(); ++j) {
        if (endpoint && j + 1 == ts.size()) {
            sch.endpoint = {wf[j], wc[j]};
            sch.has_endpoint = true;
            continue;
        }
        add_time(ts[j], wf[j], wc[j]);
    }
    if (f.continuous_time()) {
        sch.slices = std::move(free_slices);
    } else {
        for (const auto& [k, w] : per_slice) sch.slices.push_back({g.time(k), k, w});
    }
    return sch;
}

/**
 * Visits all weighted nodes of a strip. Returns the time-integrated Gaussian
 * mass outside the box (multiply by the integrand size to bound the tail).
 */
template <SpaceTimeField F, class Visitor>
double visit_strip(const F& f, const StripRegion& reg, const QuadOptions& opt, Visitor&& vis) {
    const StripSchedule sch = strip_schedule(f, reg, opt);
    double tail = 0.0;
    for (const auto& sl : sch.slices)
        tail += sl.w.fine * visit_slice(f, sl.t, sl.k, reg.z0, sl.w.fine, sl.w.coarse, opt, vis);
    if (sch.has_endpoint) {
        const Sample s = f.sample(reg.z0.x, reg.z0.t);
        vis(s, reg.z0.x, reg.z0.t, sch.endpoint.fine, sch.endpoint.coarse, false);
    }
    return tail;
}

/// Several strip integrals of fn(sample, x, t) -> std::array<double, N> in one pass.
template <std::size_t N, SpaceTimeField F, class Integrand>
std::array<Quad, N> strip_integrals(const F& f, const StripRegion& reg, Integrand&& fn,
                                    const QuadOptions& opt = {}) {
    std::array<Quad, N> out{};
    std::array<double, N> face_max{};
    const double tail = visit_strip(f, reg, opt,
                                    [&](const Sample& s, const Vec& x, double t, double wf, double wc,
                                        bool on_face) {
                                        const std::array<double, N> v = fn(s, x, t);
                                        for (std::size_t i = 0; i < N; ++i) {
                                            out[i].value += wf * v[i];
                                            out[i].coarse += wc * v[i];
                                            if (on_face) face_max[i] = std::max(face_max[i], std::abs(v[i]));
                                        }
                                    });
    for (std::size_t i = 0; i < N; ++i) out[i].tail = tail * face_max[i];
    return out;
}

template <SpaceTimeField F, class Integrand>
Quad strip_integral(const F& f, const StripRegion& reg, Integrand&& fn, const QuadOptions& opt = {}) {
    return strip_integrals<1>(
        f, reg, [&](const Sample& s, const Vec& x, double t) { return std::array<double, 1>{fn(s, x, t)}; },
        opt)[0];
}

/// Several slice integrals at time t < t0; off-node times of grid fields are
/// linearly interpolated between the neighbouring slices.
template <std::size_t N, SpaceTimeField F, class Integrand>
std::array<Quad, N> slice_integrals(const F& f, double t, const BasePoint& z0, Integrand&& fn,
                                    const QuadOptions& opt = {}) {
    const GridSpec& g = f.grid();
    if (!(t < z0.t)) throw RegionOutOfRange("slice time must precede the base time");
    if (t < g.t_start - 1e-9 * g.tau() || t > g.t_end + 1e-9 * g.tau())
        throw RegionOutOfRange("slice time outside the grid time range");
    std::array<Quad, N> out{};
    std::array<double, N> face_max{};
    auto vis = [&](const Sample& s, const Vec& x, double tt, double wf, double wc, bool on_face) {
        const std::array<double, N> v = fn(s, x, tt);
        for (std::size_t i = 0; i < N; ++i) {
            out[i].value += wf * v[i];
            out[i].coarse += wc * v[i];
            if (on_face) face_max[i] = std::max(face_max[i], std::abs(v[i]));
        }
    };
    double tail = 0.0;
    if (f.continuous_time()) {
        tail = visit_slice(f, t, -1, z0, 1.0, 1.0, opt, vis);
    } else {
        const double q = (t - g.t_start) / g.tau();
        const int k = static_cast<int>(std::lround(q));
        if (std::abs(q - k) < 1e-9) {
            tail = visit_slice(f, g.time(k), k, z0, 1.0, 1.0, opt, vis);
        } else {
            const int k0 = std::clamp(static_cast<int>(std::floor(q)), 0, g.K - 1);
            double lam = q - k0;
            if (g.time(k0 + 1) >= z0.t - 1e-12) lam = 0.0;
            tail = (1.0 - lam) * visit_slice(f, g.time(k0), k0, z0, 1.0 - lam, 1.0 - lam, opt, vis);
            if (lam > 0.0) tail += lam * visit_slice(f, g.time(k0 + 1), k0 + 1, z0, lam, lam, opt, vis);
        }
    }
    for (std::size_t i = 0; i < N; ++i) out[i].tail = tail * face_max[i];
    return out;
}

template <SpaceTimeField F, class Integrand>
Quad slice_integral(const F& f, double t, const BasePoint& z0, Integrand&& fn, const QuadOptions& opt = {}) {
    return slice_integrals<1>(
        f, t, z0, [&](const Sample& s, const Vec& x, double tt) { return std::array<double, 1>{fn(s, x, tt)}; },
        opt)[0];
}

}  // namespace parafree

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "functionals.hpp"
#include "quadrature.hpp"
#include "signorini.hpp"

namespace parafree {

// Views hold a pointer to the source field; they must not outlive it.

namespace detail {

template <SpaceTimeField F>
void check_window(const F& u, const BasePoint& z0, double r, double L_target, double t_target_start) {
    const GridSpec& g = u.grid();
    double reach = 0.0;
    for (int d = 0; d < g.n; ++d) reach = std::max(reach, std::abs(z0.x[d]) + r * L_target);
    if (reach > g.L * (1.0 + 1e-12)) throw RegionOutOfRange("rescaled window leaves the source box");
    if (z0.t + r * r * t_target_start < g.t_start - 1e-9 * g.tau())
        throw RegionOutOfRange("rescaled window starts before the source time range");
    if (z0.t > g.t_end + 1e-9 * g.tau()) throw RegionOutOfRange("base time after the source time range");
}

/// Nominal grid of a view at scale r: the largest box that maps inside the source.
inline GridSpec view_grid(const GridSpec& src, const BasePoint& z0, double r) {
    GridSpec g = src;
    double m = 0.0;
    for (int d = 0; d < src.n; ++d) m = std::max(m, std::abs(z0.x[d]));
    g.L = (src.L - m) / r;
    g.t_start = -1.0;
    g.t_end = 0.0;
    return g;
}

}  // namespace detail

/// u_{z0,r}(x,t) = u(x0 + r x, t0 + r^2 t) / r^kappa (lazy).
template <SpaceTimeField F>
AnalyticField homogeneous_view(const F& u, const BasePoint& z0, double r, double kappa) {
    const GridSpec g = detail::view_grid(u.grid(), z0, r);
    detail::check_window(u, z0, r, g.L, g.t_start);
    const F* src = &u;
    const int n = g.n;
    const double s0 = std::pow(r, -kappa);
    return AnalyticField(
        g,
        [src, z0, r, n, s0](const Vec& x, double t) {
            Vec y = z0.x;
            for (int d = 0; d < n; ++d) y[d] += r * x[d];
            Sample s = src->sample(y, z0.t + r * r * t);
            s.u *= s0;
            for (int d = 0; d < n; ++d) s.grad[d] *= s0 * r;
            s.dt *= s0 * r * r;
            return s;
        },
        u.even(), "homogeneous-rescaling");
}

/// Materialized rescaling on the target grid (default: the source grid).
template <SpaceTimeField F>
ScalarField homogeneous_rescale(const F& u, const BasePoint& z0, double r, double kappa,
                                std::optional<GridSpec> target = std::nullopt) {
    const GridSpec g = target ? *target : u.grid();
    detail::check_window(u, z0, r, g.L, g.t_start);
    const AnalyticField v = homogeneous_view(u, z0, r, kappa);
    return materialize(v, g, u.even());
}

/// u^A_{z0,r}: the rescaling normalized to unit weighted mass on S_1 (lazy).
template <SpaceTimeField F>
AnalyticField almgren_view(const F& u, const BasePoint& z0, double r, double fnorm = 0.0,
                           const QuadOptions& opt = {}) {
    const StripMoments m = strip_moments(u, z0, r, 0.0, opt);
    if (!(m.mass.value > std::max(degeneracy_floor(fnorm), 1e-300)))
        throw DegenerateDenominator("weighted mass below the degeneracy floor");
    const double scale = std::sqrt(m.mass.value / (r * r));
    const AnalyticField h = homogeneous_view(u, z0, r, 0.0);
    auto inner = std::make_shared<AnalyticField>(h);
    return AnalyticField(
        h.grid(),
        [inner, scale](const Vec& x, double t) {
            Sample s = inner->sample(x, t);
            s.u /= scale;
            for (double& gcomp : s.grad) gcomp /= scale;
            s.dt /= scale;
            return s;
        },
        u.even(), "almgren-rescaling");
}

template <SpaceTimeField F>
ScalarField almgren_rescale(const F& u, const BasePoint& z0, double r, double fnorm = 0.0,
                            const QuadOptions& opt = {}) {
    const GridSpec g = u.grid();
    detail::check_window(u, z0, r, g.L, g.t_start);
    return materialize(almgren_view(u, z0, r, fnorm, opt), g, u.even());
}

/**
 * Values of u~(y, tau) = e^{kappa tau/2} u(x0 + 2 e^{-tau/2} y, t0 - e^{-tau})
 * on [-Y,Y]^n x [tau_min, tau_max]. The stored grid uses tau as its time axis.
 */
struct SelfSimilarField {
    ScalarField values;
    double kappa = 0.0;
    BasePoint z0;

    const GridSpec& grid() const { return values.grid(); }
    double tau_min() const { return grid().t_start; }
    double tau_max() const { return grid().t_end; }
    double Y() const { return grid().L; }
    Sample sample(const Vec& y, double tau) const { return values.sample(y, tau); }
};

inline GridSpec self_similar_grid(int n, double Y, int My, double tau_min, double tau_max, int Ktau) {
    GridSpec g;
    g.n = n;
    g.L = Y;
    g.M = My;
    g.K = Ktau;
    g.t_start = tau_min;
    g.t_end = tau_max;
    return g;
}

struct SelfSimilarOptions {
    double Y = 4.0;
    int My = 129;
    int Ktau = 200;
    double tau_max = 12.0;
};

template <SpaceTimeField F>
void check_self_similar_window(const F& u, const BasePoint& z0, double r, double Y) {
    const GridSpec& g = u.grid();
    double m = 0.0;
    for (int d = 0; d < g.n; ++d) m = std::max(m, std::abs(z0.x[d]));
    if (m + 2.0 * r * Y > g.L * (1.0 + 1e-12)) throw RegionOutOfRange("self-similar window leaves the source box");
    if (z0.t - r * r < g.t_start - 1e-9 * g.tau()) throw RegionOutOfRange("strip starts before the source time range");
}

template <SpaceTimeField F>
SelfSimilarField to_self_similar(const F& u, const BasePoint& z0, double kappa, double r,
                                 const SelfSimilarOptions& so = {}) {
    const double tau_min = -2.0 * std::log(r);
    if (!(so.tau_max > tau_min)) throw InvalidArgument("tau_max must exceed -2 ln r");
    check_self_similar_window(u, z0, r, so.Y);
    const int n = u.grid().n;
    SelfSimilarField out;
    out.kappa = kappa;
    out.z0 = z0;
    out.values = ScalarField(self_similar_grid(n, so.Y, so.My, tau_min, so.tau_max, so.Ktau), u.even());
    out.values.fill([&](const Vec& y, double tau) {
        const double sc = 2.0 * std::exp(-0.5 * tau);
        Vec x = z0.x;
        for (int d = 0; d < n; ++d) x[d] += sc * y[d];
        return std::exp(0.5 * kappa * tau) * u.sample(x, z0.t - std::exp(-tau)).u;
    });
    return out;
}

/// Inverse transform as a lazy physical-space field on the nominal grid g.
inline AnalyticField from_self_similar(const SelfSimilarField& s, const GridSpec& g) {
    auto src = std::make_shared<SelfSimilarField>(s);
    const int n = g.n;
    return AnalyticField(
        g,
        [src, n](const Vec& x, double t) {
            Sample out;
            const double st = src->z0.t - t;
            if (!(st > 0.0)) return out;
            const double tau = -std::log(st);
            const double sc = 0.5 * std::exp(0.5 * tau);
            Vec y{0.0, 0.0, 0.0};
            for (int d = 0; d < n; ++d) y[d] = (x[d] - src->z0.x[d]) * sc;
            const Sample s = src->sample(y, tau);
            const double damp = std::exp(-0.5 * src->kappa * tau);
            out.u = damp * s.u;
            for (int d = 0; d < n; ++d) out.grad[d] = damp * sc * s.grad[d];
            // d tau/dt = 1/st; dy/dt = y/(2 st).
            double ydotg = 0.0;
            for (int d = 0; d < n; ++d) ydotg += y[d] * s.grad[d];
            out.dt = damp * (s.dt + 0.5 * ydotg - 0.5 * src->kappa * s.u) / st;
            return out;
        },
        s.values.even(), "self-similar-inverse");
}

/**
 * w(x,t) = ((t0-t)^{1/2}/r)^kappa u(x0 + r(x-x0)/(t0-t)^{1/2}, t0 - r^2), the
 * parabolically kappa-homogeneous extension of the slice at t0 - r^2 (lazy).
 */
template <SpaceTimeField F>
AnalyticField homogeneous_replacement_view(const F& u, const BasePoint& z0, double r, double kappa) {
    const GridSpec& g = u.grid();
    if (z0.t - r * r < g.t_start - 1e-9 * g.tau() || z0.t > g.t_end + 1e-9 * g.tau())
        throw RegionOutOfRange("replacement slice outside the source time range");
    const F* src = &u;
    const int n = g.n;
    return AnalyticField(
        g,
        [src, z0, r, kappa, n](const Vec& x, double t) {
            Sample out;
            const double st = z0.t - t;
            if (!(st > 0.0)) {
                if (kappa == 0.0) out.u = src->sample(z0.x, z0.t - r * r).u;
                return out;
            }
            const double lam = r / std::sqrt(st);
            Vec y = z0.x;
            for (int d = 0; d < n; ++d) y[d] += lam * (x[d] - z0.x[d]);
            const Sample s = src->sample(y, z0.t - r * r);
            const double f = std::pow(lam, -kappa);
            out.u = f * s.u;
            double xg = 0.0;
            for (int d = 0; d < n; ++d) {
                out.grad[d] = f * lam * s.grad[d];
                xg += (x[d] - z0.x[d]) * out.grad[d];
            }
            out.dt = (xg - kappa * out.u) / (2.0 * st);
            return out;
        },
        u.even(), "homogeneous-replacement");
}

template <SpaceTimeField F>
ScalarField homogeneous_replacement(const F& u, const BasePoint& z0, double r, double kappa) {
    const AnalyticField w = homogeneous_replacement_view(u, z0, r, kappa);
    return materialize(w, u.grid(), u.even());
}

/// Both sides of the replacement identity over S_r \ S_rho:
/// ∫(kappa u - (x-x0)·∇u - 2(t-t0)∂_t u)(u-w)G = rho^2∫_{t0-rho^2}(u-w)^2G + (kappa+1)∫(u-w)^2G.
struct IdentityCheck {
    double lhs = 0.0, rhs = 0.0;
    double lhs_err = 0.0, rhs_err = 0.0;
    double relative() const {
        const double s = std::max(std::abs(lhs), std::abs(rhs));
        return s > 0.0 ? std::abs(lhs - rhs) / s : 0.0;
    }
};

template <SpaceTimeField F, SpaceTimeField W>
IdentityCheck replacement_identity(const F& u, const W& w, const BasePoint& z0, double r, double rho, double kappa,
                                   const QuadOptions& opt = {}) {
    const int n = u.grid().n;
    const auto q = strip_integrals<2>(
        u, StripRegion{z0, r, rho},
        [&](const Sample& s, const Vec& x, double t) {
            const double diff = s.u - w.sample(x, t).u;
            double xg = 0.0;
            for (int d = 0; d < n; ++d) xg += (x[d] - z0.x[d]) * s.grad[d];
            const double hom = kappa * s.u - xg - 2.0 * (t - z0.t) * s.dt;
            return std::array<double, 2>{hom * diff, diff * diff};
        },
        opt);
    IdentityCheck out;
    out.lhs = q[0].value;
    out.lhs_err = q[0].error();
    out.rhs = (kappa + 1.0) * q[1].value;
    out.rhs_err = (kappa + 1.0) * q[1].error();
    if (rho > 0.0) {
        const Quad b = slice_integral(
            u, z0.t - rho * rho, z0,
            [&](const Sample& s, const Vec& x, double t) {
                const double diff = s.u - w.sample(x, t).u;
                return diff * diff;
            },
            opt);
        out.rhs += rho * rho * b.value;
        out.rhs_err += rho * rho * b.error();
    }
    return out;
}

/// Weighted L1 slice distance between the 3/2-rescalings at radii r and s.
template <SpaceTimeField F>
double rotation_distance(const F& u, const BasePoint& z0, double r, double s, double t, const QuadOptions& opt = {}) {
    if (!(s > 0.0 && s <= r)) throw InvalidArgument("need 0 < s <= r");
    if (!(t > -1.0 && t < 0.0)) throw InvalidArgument("need -1 < t < 0");
    if (s == r) return 0.0;
    const AnalyticField ur = homogeneous_view(u, z0, r, 1.5);
    const AnalyticField us = homogeneous_view(u, z0, s, 1.5);
    return slice_integral(
               ur, t, BasePoint{},
               [&](const Sample& a, const Vec& x, double tt) { return std::abs(a.u - us.sample(x, tt).u); }, opt)
        .value;
}

struct BlowupReport {
    AnalyticField field;
    std::vector<double> radii;
    /// distances[j] = rotation_distance(radii[j], radii[j+1], t).
    std::vector<double> distances;
    double scale = 0.0;
    bool converged = false;
};

/**
 * 3/2-homogeneous blowup along decreasing radii. Converged when the last
 * distance is below tol relative to the rescaling's weighted L1 size, or when
 * the distances decay geometrically (successive ratios below 0.9).
 */
template <SpaceTimeField F>
BlowupReport blowup(const F& u, const BasePoint& z0, std::vector<double> radii, double tol = 1e-3,
                    double t = -0.25, const QuadOptions& opt = {}) {
    std::sort(radii.begin(), radii.end(), std::greater<>());
    if (radii.size() < 2) throw InsufficientRadii("blowup needs at least two radii");
    BlowupReport rep;
    rep.radii = radii;
    const AnalyticField last = homogeneous_view(u, z0, radii.back(), 1.5);
    const double mass = strip_moments(u, z0, radii.back(), 0.0, opt).mass.value;
    if (!(mass > 1e-300)) throw DegenerateDenominator("zero weighted mass at the smallest radius");
    rep.scale = slice_integral(
                    last, t, BasePoint{}, [](const Sample& a, const Vec&, double) { return std::abs(a.u); }, opt)
                    .value;
    for (std::size_t j = 0; j + 1 < radii.size(); ++j)
        rep.distances.push_back(rotation_distance(u, z0, radii[j], radii[j + 1], t, opt));
    const double floor = tol * std::max(rep.scale, 1e-300);
    bool geometric = rep.distances.size() >= 3;
    for (std::size_t j = 1; j < rep.distances.size(); ++j)
        if (rep.distances[j] > 0.9 * rep.distances[j - 1] && rep.distances[j] > floor) geometric = false;
    rep.converged = rep.distances.back() <= floor || geometric;
    rep.field = last;
    if (!rep.converged) {
        std::string msg = "blowup distances:";
        for (double d : rep.distances) msg += " " + std::to_string(d);
        throw NotConverged(msg);
    }
    return rep;
}

struct HomogeneousProfile {
    double c = 0.0;
    Vec e{1.0, 0.0, 0.0};
    /// Relative weighted L2 residual on S_1.
    double residual = 1.0;
    double angle() const { return std::atan2(e[1], e[0]); }
};

struct FitOptions {
    double max_residual = 0.2;
    int sweep = 720;
    QuadOptions quad{5.0, 1.0, 3, 16};
};

/**
 * Least-squares fit of c Re(x'·e + i|x_n|)^{3/2} to v in the weighted L2(S_1)
 * norm at the origin. For fixed e the best c is the projection coefficient.
 */
template <SpaceTimeField F>
HomogeneousProfile fit_profile(const F& v, const FitOptions& fo = {}) {
    const int n = v.grid().n;
    struct Pt {
        Vec x;
        double w, v;
    };
    std::vector<Pt> pts;
    double vv = 0.0;
    visit_strip(v, StripRegion{BasePoint{}, 1.0, 0.0}, fo.quad,
                [&](const Sample& s, const Vec& x, double, double wf, double, bool) {
                    if (wf <= 0.0) return;
                    pts.push_back({x, wf, s.u});
                    vv += wf * s.u * s.u;
                });
    if (!(vv > 0.0)) throw PoorFit("field vanishes on the unit strip");

    auto score = [&](const Vec& e, std::size_t stride, double* c_out, double* res_out) {
        double vp = 0.0, pp = 0.0, vv_s = 0.0;
        for (std::size_t i = 0; i < pts.size(); i += stride) {
            const double p = profile_sample(pts[i].x, n, e).u;
            vp += pts[i].w * pts[i].v * p;
            pp += pts[i].w * p * p;
            vv_s += pts[i].w * pts[i].v * pts[i].v;
        }
        const double c = vp / pp;
        if (c_out) *c_out = c;
        if (res_out) *res_out = std::sqrt(std::max(0.0, vv_s - vp * c) / vv_s);
        // Signed projection: negative c cannot fit.
        return c > 0.0 ? vp * c / vv_s : -1.0;
    };

    HomogeneousProfile best;
    if (n == 2) {
        double best_score = -2.0;
        for (double sgn : {1.0, -1.0}) {
            const Vec e{sgn, 0.0, 0.0};
            const double sc = score(e, 1, nullptr, nullptr);
            if (sc > best_score) {
                best_score = sc;
                best.e = e;
            }
        }
    } else {
        const std::size_t stride = std::max<std::size_t>(1, pts.size() / 20000);
        double best_a = 0.0, best_sc = -2.0;
        const double da = 2.0 * std::numbers::pi / fo.sweep;
        for (int j = 0; j < fo.sweep; ++j) {
            const double a = j * da;
            const double sc = score(unit_direction(3, a), stride, nullptr, nullptr);
            if (sc > best_sc) {
                best_sc = sc;
                best_a = a;
            }
        }
        // Golden-section refinement on the full sample set.
        double lo = best_a - da, hi = best_a + da;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = score(unit_direction(3, x1), 1, nullptr, nullptr);
        double f2 = score(unit_direction(3, x2), 1, nullptr, nullptr);
        for (int it = 0; it < 60; ++it) {
            if (f1 > f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = score(unit_direction(3, x1), 1, nullptr, nullptr);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = score(unit_direction(3, x2), 1, nullptr, nullptr);
            }
        }
        double a = 0.5 * (lo + hi);
        a = std::remainder(a, 2.0 * std::numbers::pi);
        best.e = unit_direction(3, a);
    }
    score(best.e, 1, &best.c, &best.residual);
    if (!(best.c > 0.0) || best.residual > fo.max_residual) {
        throw PoorFit("relative residual " + std::to_string(best.residual) + " exceeds " +
                      std::to_string(fo.max_residual));
    }
    return best;
}

/**
 * Signorini replacement computed in self-similar variables (kappa = 0):
 * v~ solves e^{-|y|^2} ∂_tau v~ = (1/4) div(e^{-|y|^2} ∇v~) with the thin
 * constraint, initial slice u~(., -2 ln r) and v~ = u~ on the box faces.
 */
template <SpaceTimeField F>
SelfSimilarField solve_strip_replacement_self_similar(const F& u, double r, const BasePoint& z0,
                                                      const SelfSimilarOptions& so = {}, double tol_psor = 1e-10) {
    if (!u.even()) throw IncompatibleData("replacement requires an even-symmetric field");
    const double tau_min = -2.0 * std::log(r);
    check_self_similar_window(u, z0, r, so.Y);
    const int n = u.grid().n;
    const F* src = &u;
    auto phys = [src, z0, n](const Vec& y, double tau) {
        const double sc = 2.0 * std::exp(-0.5 * tau);
        Vec x = z0.x;
        for (int d = 0; d < n; ++d) x[d] += sc * y[d];
        return src->sample(x, z0.t - std::exp(-tau)).u;
    };
    SignoriniConfig cfg;
    cfg.grid = self_similar_grid(n, so.Y, so.My, tau_min, so.tau_max, so.Ktau);
    cfg.tol_psor = tol_psor;
    cfg.initial = [phys, tau_min](const Vec& y) { return phys(y, tau_min); };
    cfg.boundary = phys;
    cfg.capacity = [n](const Vec& y) { return std::exp(-norm2(y, n)); };
    cfg.coefficients = [n](const Vec& y, double, int) { return 0.25 * std::exp(-norm2(y, n)); };
    cfg.descriptor = "strip-replacement-self-similar";
    Solution sol = solve_cylinder(cfg);
    SelfSimilarField out;
    out.values = std::move(sol.u);
    out.kappa = 0.0;
    out.z0 = z0;
    return out;
}

}  // namespace parafree

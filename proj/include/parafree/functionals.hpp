#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "quadrature.hpp"
#include "signorini.hpp"

namespace parafree {

enum class ConstantsMode { Practical, Exact };

inline const char* to_string(ConstantsMode m) { return m == ConstantsMode::Exact ? "exact" : "practical"; }

/**
 * Parameters of the Weiss energy and the truncated frequencies. The exact
 * constants a, b are always recomputed; practical mode replaces them with
 * a_eff, b_eff.
 */
struct WeissParams {
    double kappa = 1.5;
    double kappa0 = 3.0;
    double alpha = 0.5;
    double eps = 0.5;
    double delta = 1.0;
    double rho = 0.0;
    double a_eff = 1.0;
    double b_eff = 1.0;

    double a() const { return 8.0 * (kappa + 1.0) / alpha; }
    double b() const { return 128.0 * (kappa0 + 1.0) / eps; }
    double a(ConstantsMode m) const { return m == ConstantsMode::Exact ? a() : a_eff; }
    double b(ConstantsMode m) const { return m == ConstantsMode::Exact ? b() : b_eff; }

    /// Radius below which the scalar weight inequalities hold with the exact constants.
    double r0() const { return std::min(std::pow(4.0, -1.0 / alpha), std::pow(2.0 * b(), -1.0 / eps)); }

    /// Largest radius where monotonicity is meaningful in the given mode: b r^eps <= 1/2
    /// and the exponential term e^{-1/r} r^{-delta-2kappa-2} still increases.
    double admissible_radius(ConstantsMode m) const {
        if (m == ConstantsMode::Exact) return r0();
        return std::min(1.0 / (delta + 2.0 * kappa + 2.0), std::pow(2.0 * b_eff, -1.0 / eps));
    }

    void validate() const {
        if (!(kappa0 > 2.0)) throw InvalidArgument("kappa0 must exceed 2");
        if (!(kappa > 0.0 && kappa < kappa0)) throw InvalidArgument("kappa must lie in (0, kappa0)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
        if (!(eps > 0.0 && eps <= alpha)) throw InvalidArgument("eps must lie in (0, alpha]");
        if (!(delta > 0.0 && delta < 2.0)) throw InvalidArgument("delta must lie in (0,2)");
        if (!(rho >= 0.0)) throw InvalidArgument("inner radius must be nonnegative");
    }
};

struct PhiPsi {
    double phi, psi, dphi, dpsi;
};

/// Scalar weights with the exact constants and their analytic derivatives.
inline PhiPsi phi_psi(double r, double rho, const WeissParams& p) {
    if (!(rho >= 0.0 && rho < r)) throw InadmissibleRadii("need 0 <= rho < r");
    if (rho > r / std::sqrt(2.0) * (1.0 + 1e-15)) throw InadmissibleRadii("need rho/r <= 1/sqrt(2)");
    const double e = 2.0 * p.kappa + 2.0;
    const double a = p.a(), b = p.b();
    const double re = std::pow(r, e);
    const double D = re - std::pow(rho, e);
    const double ra = std::pow(r, p.alpha);
    const double phi = std::exp(a * ra) / D;
    const double dphi = (a * p.alpha * ra - e * re / D) * phi / r;
    const double reps = std::pow(r, p.eps);
    const double psi = (1.0 - b * reps) * phi;
    const double dpsi = -b * p.eps * reps / r * phi + (1.0 - b * reps) * dphi;
    return {phi, psi, dphi, dpsi};
}

/**
 * The four scalar inequalities, each written as margin >= 0. `scale` is the
 * sum of the magnitudes of the terms, for a round-off relative check.
 */
struct WeightInequalities {
    std::array<double, 4> margin{};
    std::array<double, 4> scale{};
    bool holds(double rel_tol = 1e-12) const {
        for (int i = 0; i < 4; ++i)
            if (margin[i] < -rel_tol * scale[i]) return false;
        return true;
    }
};

inline WeightInequalities weight_inequalities(double r, double rho, const WeissParams& p) {
    const PhiPsi w = phi_psi(r, rho, p);
    const double e = 2.0 * p.kappa + 2.0;
    const double b = p.b();
    const double D = std::pow(r, e) - std::pow(rho, e);
    const double ra = std::pow(r, p.alpha);
    const double lead = b * w.phi * std::pow(r, e - 1.0 + p.eps) / D;
    const double hom = e * std::pow(r, e - 1.0) / D;
    WeightInequalities out;
    out.margin[0] = -w.dphi;
    out.scale[0] = std::abs(w.dphi);
    {
        const double t1 = w.dphi / (1.0 - ra), t2 = -w.dpsi, t3 = (e - p.eps / 4.0) * lead;
        out.margin[1] = t1 + t2 + t3;
        out.scale[1] = std::abs(t1) + std::abs(t2) + std::abs(t3);
    }
    {
        const double t1 = (1.0 + ra) / (1.0 - ra) * w.dphi, t2 = hom * w.phi;
        out.margin[2] = t1 + t2;
        out.scale[2] = std::abs(t1) + std::abs(t2);
    }
    {
        const double t1 = -w.dphi / (1.0 - ra), t2 = -hom * w.psi, t3 = -(e - p.eps / 8.0) * lead;
        out.margin[3] = t1 + t2 + t3;
        out.scale[3] = std::abs(t1) + std::abs(t2) + std::abs(t3);
    }
    return out;
}

/// Weighted strip moments: mass = ∫u²G and dirichlet = ∫2(t0-t)|∇u|²G.
struct StripMoments {
    Quad mass;
    Quad dirichlet;
};

template <SpaceTimeField F>
StripMoments strip_moments(const F& u, const BasePoint& z0, double r, double rho, const QuadOptions& opt = {}) {
    const int n = u.grid().n;
    const auto q = strip_integrals<2>(
        u, StripRegion{z0, r, rho},
        [&](const Sample& s, const Vec&, double t) {
            return std::array<double, 2>{s.u * s.u, 2.0 * (z0.t - t) * norm2(s.grad, n)};
        },
        opt);
    return {q[0], q[1]};
}

/// Slice moments at t: mass = ∫u²G dx and dirichlet = ∫|∇u|²G dx.
template <SpaceTimeField F>
StripMoments slice_moments(const F& u, const BasePoint& z0, double t, const QuadOptions& opt = {}) {
    const int n = u.grid().n;
    const auto q = slice_integrals<2>(
        u, t, z0, [&](const Sample& s, const Vec&, double) { return std::array<double, 2>{s.u * s.u, norm2(s.grad, n)}; },
        opt);
    return {q[0], q[1]};
}

inline double exponential_factor(double r, double delta) { return std::exp(-1.0 / r) * std::pow(r, -delta); }

inline double degeneracy_floor(double fnorm) { return 1e-14 * fnorm * fnorm; }

/// The full Weiss energy in the given constants mode; fnorm is the total F-norm at z0.
template <SpaceTimeField F>
double weiss(const F& u, const BasePoint& z0, double r, const WeissParams& p, double fnorm,
             ConstantsMode mode = ConstantsMode::Practical, const QuadOptions& opt = {}) {
    const StripMoments m = strip_moments(u, z0, r, p.rho, opt);
    const double e = 2.0 * p.kappa + 2.0;
    const double pre = std::exp(p.a(mode) * std::pow(r, p.alpha)) / (std::pow(r, e) - std::pow(p.rho, e));
    return pre * (m.dirichlet.value - p.kappa * (1.0 - p.b(mode) * std::pow(r, p.eps)) * m.mass.value +
                  fnorm * fnorm * exponential_factor(r, p.delta));
}

template <SpaceTimeField F>
double weiss(const F& u, const BasePoint& z0, double r, const WeissParams& p,
             ConstantsMode mode = ConstantsMode::Practical, const QuadOptions& opt = {}) {
    return weiss(u, z0, r, p, f_norm(u, z0, opt).total(), mode, opt);
}

struct StandardWeiss {
    double W0 = 0.0;
    double V0 = 0.0;
    double W0_err = 0.0;
    double V0_err = 0.0;
};

/// The standard 3/2 Weiss energy over S_r and the slice energy at t0 - r^2.
template <SpaceTimeField F>
StandardWeiss weiss_standard(const F& u, const BasePoint& z0, double r, const QuadOptions& opt = {}) {
    const StripMoments m = strip_moments(u, z0, r, 0.0, opt);
    const StripMoments s = slice_moments(u, z0, z0.t - r * r, opt);
    const double r5 = std::pow(r, 5.0);
    StandardWeiss out;
    out.W0 = (m.dirichlet.value - 1.5 * m.mass.value) / r5;
    out.W0_err = (m.dirichlet.error() + 1.5 * m.mass.error()) / r5;
    const double r3 = r * r * r;
    out.V0 = (2.0 * r * r * s.dirichlet.value - 1.5 * s.mass.value) / r3;
    out.V0_err = (2.0 * r * r * s.dirichlet.error() + 1.5 * s.mass.error()) / r3;
    return out;
}

/// Slice energy at an arbitrary time t < t0: (t0-t)^{-3/2}∫(2(t0-t)|∇v|² - 1.5 v²)G dx.
template <SpaceTimeField F>
std::pair<double, double> slice_weiss(const F& u, const BasePoint& z0, double t, const QuadOptions& opt = {}) {
    const StripMoments s = slice_moments(u, z0, t, opt);
    const double st = z0.t - t;
    const double scale = std::pow(st, -1.5);
    return {scale * (2.0 * st * s.dirichlet.value - 1.5 * s.mass.value),
            scale * (2.0 * st * s.dirichlet.error() + 1.5 * s.mass.error())};
}

struct Frequencies {
    double N0 = 0.0;
    double Ndelta = 0.0;
    double Ntilde = std::numeric_limits<double>::quiet_NaN();
    double Nhat = std::numeric_limits<double>::quiet_NaN();
    double err = 0.0;
};

inline Frequencies frequencies_from(const StripMoments& m, double r, const WeissParams& p, double fnorm,
                                    ConstantsMode mode) {
    if (!(m.mass.value > degeneracy_floor(fnorm)) || m.mass.value <= 0.0)
        throw DegenerateDenominator("weighted mass below the degeneracy floor");
    Frequencies f;
    f.N0 = m.dirichlet.value / m.mass.value;
    f.Ndelta = (m.dirichlet.value + fnorm * fnorm * exponential_factor(r, p.delta)) / m.mass.value;
    const double br = p.b(mode) * std::pow(r, p.eps);
    if (br < 1.0) {
        f.Ntilde = f.Ndelta / (1.0 - br);
        f.Nhat = std::min(f.Ntilde, p.kappa0);
    }
    f.err = (m.dirichlet.error() + std::abs(f.N0) * m.mass.error()) / m.mass.value;
    return f;
}

template <SpaceTimeField F>
Frequencies almgren(const F& u, const BasePoint& z0, double r, const WeissParams& p, double fnorm,
                    ConstantsMode mode = ConstantsMode::Practical, const QuadOptions& opt = {}) {
    return frequencies_from(strip_moments(u, z0, r, 0.0, opt), r, p, fnorm, mode);
}

template <SpaceTimeField F>
Frequencies almgren(const F& u, const BasePoint& z0, double r, const WeissParams& p,
                    ConstantsMode mode = ConstantsMode::Practical, const QuadOptions& opt = {}) {
    return almgren(u, z0, r, p, f_norm(u, z0, opt).total(), mode, opt);
}

template <SpaceTimeField F>
double poon(const F& u, const BasePoint& z0, double r, double fnorm, const QuadOptions& opt = {}) {
    const StripMoments s = slice_moments(u, z0, z0.t - r * r, opt);
    if (!(s.mass.value > degeneracy_floor(fnorm)) || s.mass.value <= 0.0)
        throw DegenerateDenominator("slice mass below the degeneracy floor");
    return r * r * s.dirichlet.value / s.mass.value;
}

template <SpaceTimeField F>
double poon(const F& u, const BasePoint& z0, double r, const QuadOptions& opt = {}) {
    return poon(u, z0, r, f_norm(u, z0, opt).total(), opt);
}

template <SpaceTimeField F>
double exponential_term_ratio(const F& u, const BasePoint& z0, double r, double delta, double fnorm,
                              const QuadOptions& opt = {}) {
    const StripMoments m = strip_moments(u, z0, r, 0.0, opt);
    if (!(m.mass.value > degeneracy_floor(fnorm)) || m.mass.value <= 0.0)
        throw DegenerateDenominator("weighted mass below the degeneracy floor");
    return fnorm * fnorm * exponential_factor(r, delta) / m.mass.value;
}

struct FrequencyRow {
    double r = 0.0;
    double N0 = 0.0, Ndelta = 0.0, Ntilde = 0.0, Nhat = 0.0;
    double poon = 0.0;
    double W0 = 0.0, V0 = 0.0;
    double W_practical = 0.0, W_exact = 0.0;
    double m = 0.0;
    double mass = 0.0;
    /// Error estimate of N0.
    double quad_err = 0.0;
    double W0_err = 0.0;
    /// Error estimate of the practical W.
    double W_err = 0.0;
};

struct FrequencyCurve {
    BasePoint z0;
    WeissParams params;
    double fnorm = 0.0;
    std::vector<FrequencyRow> rows;
};

/**
 * Evaluates every functional along the radii (sorted ascending in the
 * result). The frequencies Ntilde/Nhat use the practical constants.
 */
template <SpaceTimeField F>
FrequencyCurve frequency_curve(const F& u, const BasePoint& z0, std::vector<double> radii, const WeissParams& p,
                               std::optional<double> fnorm = std::nullopt, const QuadOptions& opt = {}) {
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    FrequencyCurve c;
    c.z0 = z0;
    c.params = p;
    c.fnorm = fnorm ? *fnorm : f_norm(u, z0, opt).total();
    const double F2 = c.fnorm * c.fnorm;
    const double e = 2.0 * p.kappa + 2.0;
    for (double r : radii) {
        const StripMoments m = strip_moments(u, z0, r, 0.0, opt);
        const StripMoments s = slice_moments(u, z0, z0.t - r * r, opt);
        const Frequencies f = frequencies_from(m, r, p, c.fnorm, ConstantsMode::Practical);
        FrequencyRow row;
        row.r = r;
        row.N0 = f.N0;
        row.Ndelta = f.Ndelta;
        row.Ntilde = f.Ntilde;
        row.Nhat = f.Nhat;
        row.quad_err = f.err;
        row.mass = m.mass.value;
        row.poon = s.mass.value > degeneracy_floor(c.fnorm) ? r * r * s.dirichlet.value / s.mass.value
                                                           : std::numeric_limits<double>::quiet_NaN();
        const double r5 = std::pow(r, 5.0);
        row.W0 = (m.dirichlet.value - 1.5 * m.mass.value) / r5;
        row.W0_err = (m.dirichlet.error() + 1.5 * m.mass.error()) / r5;
        row.V0 = (2.0 * r * r * s.dirichlet.value - 1.5 * s.mass.value) / (r * r * r);
        row.m = m.mass.value / r5;
        const double expo = F2 * exponential_factor(r, p.delta);
        for (ConstantsMode mode : {ConstantsMode::Practical, ConstantsMode::Exact}) {
            const double pre = std::exp(p.a(mode) * std::pow(r, p.alpha)) / std::pow(r, e);
            const double val =
                pre * (m.dirichlet.value - p.kappa * (1.0 - p.b(mode) * std::pow(r, p.eps)) * m.mass.value + expo);
            if (mode == ConstantsMode::Practical) {
                row.W_practical = val;
                row.W_err = pre * (m.dirichlet.error() +
                                   p.kappa * std::abs(1.0 - p.b(mode) * std::pow(r, p.eps)) * m.mass.error());
            } else {
                row.W_exact = val;
            }
        }
        c.rows.push_back(row);
    }
    return c;
}

enum class FrequencyColumn { N0, Ndelta, Ntilde, Nhat, Poon };

inline double column_value(const FrequencyRow& row, FrequencyColumn col) {
    switch (col) {
        case FrequencyColumn::N0: return row.N0;
        case FrequencyColumn::Ndelta: return row.Ndelta;
        case FrequencyColumn::Ntilde: return row.Ntilde;
        case FrequencyColumn::Nhat: return row.Nhat;
        case FrequencyColumn::Poon: return row.poon;
    }
    return row.N0;
}

struct FrequencyLimit {
    double kappa = 0.0;
    double confidence = 0.0;
    double rms = 0.0;
    /// Fitted exponent s of the correction A r^s (0 when the constant model won).
    double exponent = 0.0;
    double amplitude = 0.0;
    /// Radii whose quadrature error exceeds 10% of |N(r) - kappa|.
    std::vector<double> flagged;
};

struct LimitOptions {
    FrequencyColumn column = FrequencyColumn::N0;
    std::size_t max_points = 7;
    double confidence_scale = 0.02;
    /// The power model must cut the constant model's rms by this factor to be used.
    double parsimony = 0.7;
};

/**
 * Extrapolates N(r) -> kappa as r -> 0 with N(r) ≈ kappa + A r^s, fitted by
 * least squares over the smallest radii with s on a grid in [0.5, 3].
 */
inline FrequencyLimit frequency_limit(const FrequencyCurve& curve, const LimitOptions& lo = {}) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : curve.rows) {
        const double v = column_value(row, lo.column);
        if (std::isfinite(v)) pts.emplace_back(row.r, v);
    }
    std::sort(pts.begin(), pts.end());
    if (pts.size() < 5) throw InsufficientRadii("need at least five radii");
    if (pts.size() > lo.max_points) pts.resize(std::max<std::size_t>(lo.max_points, 5));
    if (pts.back().first < 4.0 * pts.front().first * (1.0 - 1e-9))
        throw InsufficientRadii("radii must span at least two dyadic octaves");

    const double m = static_cast<double>(pts.size());
    auto rms_of = [&](double k, double A, double s) {
        double acc = 0.0;
        for (auto [r, v] : pts) {
            const double d = v - (k + A * (s > 0.0 ? std::pow(r, s) : 0.0));
            acc += d * d;
        }
        return std::sqrt(acc / m);
    };
    double mean = 0.0;
    for (auto [r, v] : pts) mean += v / m;
    FrequencyLimit best;
    best.kappa = mean;
    best.rms = rms_of(mean, 0.0, 0.0);
    const double const_rms = best.rms;
    FrequencyLimit power;
    power.rms = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 12; ++j) {
        const double s = 0.25 * j;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [r, v] : pts) {
            const double x = std::pow(r, s);
            sx += x;
            sy += v;
            sxx += x * x;
            sxy += x * v;
        }
        const double det = m * sxx - sx * sx;
        if (std::abs(det) < 1e-300) continue;
        const double A = (m * sxy - sx * sy) / det;
        const double k = (sy - A * sx) / m;
        const double rms = rms_of(k, A, s);
        if (rms < power.rms) {
            power.rms = rms;
            power.kappa = k;
            power.amplitude = A;
            power.exponent = s;
        }
    }
    if (power.rms < lo.parsimony * const_rms && const_rms > 1e-3) best = power;
    best.confidence = std::exp(-best.rms / lo.confidence_scale);
    for (const auto& row : curve.rows) {
        const double v = column_value(row, lo.column);
        if (std::isfinite(v) && row.quad_err > 0.1 * std::abs(v - best.kappa)) best.flagged.push_back(row.r);
    }
    return best;
}

/// Half-dyadic radii from r_max down to r_min (inclusive of both ends when they fall on the ladder).
inline std::vector<double> radius_ladder(double r_max, double r_min, double ratio = 1.0 / std::sqrt(2.0)) {
    std::vector<double> out;
    for (double r = r_max; r >= r_min * (1.0 - 1e-12); r *= ratio) out.push_back(r);
    std::reverse(out.begin(), out.end());
    return out;
}

/// Smallest radius the grid resolves for strip functionals.
inline double radius_floor(const GridSpec& g, bool continuous_time) {
    if (continuous_time) return 0.025;
    return std::max(8.0 * g.h(), 4.0 * std::sqrt(g.tau()));
}

}  // namespace parafree

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "quadrature.hpp"

namespace parafree {

/**
 * Problem data for the parabolic Signorini problem on the box with the zero
 * thin obstacle on {x_n = 0}. The coefficient matrix is diagonal; an empty
 * callable means identity (coefficients) or zero (drift).
 */
struct SignoriniConfig {
    GridSpec grid;
    std::function<double(const Vec&)> initial;
    std::function<double(const Vec&, double)> boundary;
    /// Diagonal entry a_d(x, t) of the coefficient matrix.
    std::function<double(const Vec&, double, int)> coefficients;
    std::function<Vec(const Vec&, double)> drift;
    /// Capacity c(x) in c (u_t + b·∇u) = div(A∇u); empty means 1.
    std::function<double(const Vec&)> capacity;
    double alpha = 0.5;
    double omega = 1.5;
    double tol_psor = 1e-10;
    int max_inner = 100000;
    /// Name and parameters of the generating instance, for reports and dumps.
    std::string descriptor;
    /// Gauge exponent of the almost-minimizer property (alpha for variable
    /// coefficients, 1 - n/p for drifts, 0 when u is an exact solution).
    double gauge_exponent = 0.0;
};

struct Solution {
    ScalarField u;
    std::vector<int> iterations;
    std::vector<double> residuals;
    /// 1 where the thin node is in contact (u <= pos_tol), per time slice.
    std::vector<std::uint8_t> contact;
    std::string descriptor;
    double pos_tol = 1e-9;

    std::size_t thin_size() const { return u.grid().full_slice_size() / u.grid().M; }
    int max_iterations() const {
        return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
    }
    double max_residual() const {
        return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    }
};

namespace detail {

/// Deterministic uniform double in [0,1) from the standardized mt19937_64 stream.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double smoothstep5(double q) {
    q = std::clamp(q, 0.0, 1.0);
    return q * q * q * (q * (6.0 * q - 15.0) + 10.0);
}

}  // namespace detail

/**
 * Backward Euler in time, projected SOR for each implicit step on the half
 * domain x_n >= 0. The Signorini condition is a boundary condition at x_n = 0:
 * the normal stencil there uses the mirror node, and the update is projected
 * onto u >= 0. Dirichlet data on the other faces.
 */
inline Solution solve_cylinder(const SignoriniConfig& cfg) {
    const GridSpec& g = cfg.grid;
    g.validate();
    if (!cfg.initial || !cfg.boundary) throw InvalidArgument("initial and boundary data are required");
    if (!(cfg.omega > 0.0 && cfg.omega < 2.0)) throw InvalidArgument("relaxation factor must lie in (0,2)");

    const int n = g.n;
    const int M = g.M;
    const int c = g.center();
    const double h = g.h();
    const double tau = g.tau();
    const double ih2 = 1.0 / (h * h);
    const SliceLayout lay(g, true);
    const std::size_t N = lay.size();

    // Node classes: 0 interior, 1 thin (x_n = 0), 2 Dirichlet.
    std::vector<std::uint8_t> kind(N, 0);
    std::vector<Vec> xs(N);
    std::vector<Idx> idx(N);
    for (std::size_t o = 0; o < N; ++o) {
        const Idx I = lay.index(o);
        idx[o] = I;
        xs[o] = g.node(I);
        bool dir = I[n - 1] == M - 1;
        for (int d = 0; d + 1 < n; ++d) dir = dir || I[d] == 0 || I[d] == M - 1;
        kind[o] = dir ? 2 : (I[n - 1] == c ? 1 : 0);
    }
    std::array<std::ptrdiff_t, 3> stride{};
    for (int d = 0; d < n; ++d) stride[d] = static_cast<std::ptrdiff_t>(lay.stride(d));

    Solution sol;
    sol.u = ScalarField(g, true);
    sol.descriptor = cfg.descriptor;
    sol.pos_tol = 10.0 * cfg.tol_psor;
    sol.iterations.assign(g.K + 1, 0);
    sol.residuals.assign(g.K + 1, 0.0);

    double* u0 = sol.u.slice(0);
    for (std::size_t o = 0; o < N; ++o) {
        u0[o] = kind[o] == 2 ? cfg.boundary(xs[o], g.t_start) : cfg.initial(xs[o]);
        if (kind[o] == 1 && u0[o] < -1e-14)
            throw IncompatibleData("initial datum is negative on the thin hyperplane");
        if (kind[o] == 1) u0[o] = std::max(u0[o], 0.0);
    }

    const bool var_coef = static_cast<bool>(cfg.coefficients);
    const bool has_drift = static_cast<bool>(cfg.drift);
    // Face coefficients: face[d][o] is a_d at x_o + h/2 e_d.
    std::array<std::vector<double>, 3> face;
    std::array<std::vector<double>, 3> bvec;
    if (var_coef)
        for (int d = 0; d < n; ++d) face[d].assign(N, 1.0);
    if (has_drift)
        for (int d = 0; d < n; ++d) bvec[d].assign(N, 0.0);

    std::vector<double> cap(N, 1.0);
    if (cfg.capacity)
        for (std::size_t o = 0; o < N; ++o) cap[o] = cfg.capacity(xs[o]);
    std::vector<double> rhs(N);
    for (int k = 1; k <= g.K; ++k) {
        const double t = g.time(k);
        const double* prev = sol.u.slice(k - 1);
        double* u = sol.u.slice(k);
        if (var_coef) {
            for (std::size_t o = 0; o < N; ++o) {
                if (kind[o] == 2) continue;
                for (int d = 0; d < n; ++d) {
                    Vec xf = xs[o];
                    xf[d] += 0.5 * h;
                    const double a = cfg.coefficients(xf, t, d);
                    face[d][o] = a;
                    Vec xb = xs[o];
                    xb[d] -= 0.5 * h;
                    // Lower faces that belong to no stored node: Dirichlet neighbours.
                    if (d < n - 1 && idx[o][d] == 1) face[d][o - stride[d]] = cfg.coefficients(xb, t, d);
                }
            }
        }
        if (has_drift)
            for (std::size_t o = 0; o < N; ++o) {
                const Vec b = cfg.drift(xs[o], t);
                for (int d = 0; d < n; ++d) bvec[d][o] = b[d];
            }
        for (std::size_t o = 0; o < N; ++o) {
            rhs[o] = cap[o] * prev[o] / tau;
            if (kind[o] == 2) {
                u[o] = cfg.boundary(xs[o], t);
            } else if (k >= 2) {
                const double* prev2 = sol.u.slice(k - 2);
                u[o] = 2.0 * prev[o] - prev2[o];
                if (kind[o] == 1) u[o] = std::max(u[o], 0.0);
            } else {
                u[o] = prev[o];
            }
        }

        // One relaxation sweep; returns the largest update.
        auto sweep = [&](double omega, bool residual_only, double* residual) {
            double max_change = 0.0;
            double max_res = 0.0;
            for (std::size_t o = 0; o < N; ++o) {
                if (kind[o] == 2) continue;
                double sum = rhs[o];
                double diag = cap[o] / tau;
                for (int d = 0; d < n; ++d) {
                    const std::ptrdiff_t s = stride[d];
                    const double up = u[o + s];
                    double down;
                    double ap = 1.0, am = 1.0;
                    if (var_coef) ap = face[d][o];
                    if (d == n - 1 && kind[o] == 1) {
                        down = up;  // mirror node across the thin hyperplane
                        am = ap;
                    } else {
                        down = u[o - s];
                        if (var_coef) am = face[d][o - s];
                    }
                    sum += (ap * up + am * down) * ih2;
                    diag += (ap + am) * ih2;
                    if (has_drift) sum -= cap[o] * bvec[d][o] * (up - down) / (2.0 * h);
                }
                if (residual_only) {
                    // Residual of the implicit step (flux form): r = diag*u - sum.
                    const double r = diag * u[o] - sum;
                    const double v = kind[o] == 1 ? std::min(u[o] * diag, r) : r;
                    max_res = std::max(max_res, std::abs(v) * tau / cap[o]);
                    continue;
                }
                double nu = u[o] + omega * (sum / diag - u[o]);
                if (kind[o] == 1) nu = std::max(nu, 0.0);
                max_change = std::max(max_change, std::abs(nu - u[o]));
                u[o] = nu;
            }
            if (residual) *residual = max_res;
            return max_change;
        };

        int it = 0;
        while (true) {
            const double change = sweep(cfg.omega, false, nullptr);
            ++it;
            if (change < cfg.tol_psor) break;
            if (it >= cfg.max_inner) {
                std::ostringstream msg;
                msg << "projected SOR did not converge at step " << k << " (last update " << change << ")";
                throw NoConvergence(msg.str());
            }
        }
        double res = 0.0;
        sweep(cfg.omega, true, &res);
        sol.iterations[k] = it;
        sol.residuals[k] = res;
    }

    const std::size_t thin = g.full_slice_size() / M;
    sol.contact.assign(thin * (g.K + 1), 0);
    for (int k = 0; k <= g.K; ++k) {
        const double* u = sol.u.slice(k);
        for (std::size_t q = 0; q < thin; ++q) sol.contact[k * thin + q] = u[q] <= sol.pos_tol ? 1 : 0;
    }
    return sol;
}

/// Exact 3/2-profile data, optionally plus a smooth bump on the positivity side.
struct ProfileData {
    Vec direction{1.0, 0.0, 0.0};
    double bump_amplitude = 0.0;
    Vec bump_center{0.5, 0.0, 0.0};
    double bump_radius = 0.3;
    /// Multiple of the 7/2 mode added to both initial and boundary data; the
    /// sum stays an exact stationary solution.
    double mode_amplitude = 0.0;
};

inline double bump_value(const Vec& x, int n, const ProfileData& pd) {
    if (pd.bump_amplitude == 0.0) return 0.0;
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
        // Even in x_n: the bump is centred on the thin hyperplane.
        const double cx = d == n - 1 ? 0.0 : pd.bump_center[d];
        r2 += (x[d] - cx) * (x[d] - cx);
    }
    const double q = r2 / (pd.bump_radius * pd.bump_radius);
    if (q >= 1.0) return 0.0;
    return pd.bump_amplitude * std::exp(1.0 - 1.0 / (1.0 - q));
}

inline SignoriniConfig make_profile_instance(const GridSpec& g, const ProfileData& pd = {}) {
    SignoriniConfig cfg;
    cfg.grid = g;
    const int n = g.n;
    const Vec e = pd.direction;
    const double c7 = pd.mode_amplitude;
    auto base = [n, e, c7](const Vec& x) {
        return profile_sample(x, n, e).u + (c7 != 0.0 ? c7 * profile72_value(x, n, e) : 0.0);
    };
    cfg.initial = [base, n, pd](const Vec& x) { return base(x) + bump_value(x, n, pd); };
    cfg.boundary = [base](const Vec& x, double) { return base(x); };
    std::ostringstream d;
    d << "exact32(n=" << n << ", bump=" << pd.bump_amplitude;
    if (c7 != 0.0) d << ", mode72=" << c7;
    d << ")";
    cfg.descriptor = d.str();
    return cfg;
}

inline SignoriniConfig make_heat_positive_instance(const GridSpec& g) {
    SignoriniConfig cfg;
    cfg.grid = g;
    const int n = g.n;
    cfg.initial = [n, t0 = g.t_start](const Vec& x) { return heat_positive_sample(x, t0, n).u; };
    cfg.boundary = [n](const Vec& x, double t) { return heat_positive_sample(x, t, n).u; };
    cfg.descriptor = "heat-positive";
    return cfg;
}

/**
 * A = I + amplitude (|x|^2 + |t|)^{alpha/2} diag(m_1..m_n) with
 * m_d = cos(k_d·x' + w_d t + phi_d) cos(q_d x_n); the phases come from the
 * seed. |m_d| <= 1, and A is even in x_n.
 */
inline SignoriniConfig make_variable_coefficient_instance(const GridSpec& g, double alpha, double amplitude,
                                                          std::uint64_t seed,
                                                          const ProfileData& pd = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    SignoriniConfig cfg = make_profile_instance(g, pd);
    const int n = g.n;
    std::mt19937_64 rng(seed);
    struct Mode {
        std::array<double, 2> k;
        double w, phi, q;
    };
    std::array<Mode, 3> modes{};
    for (int d = 0; d < n; ++d) {
        for (auto& kk : modes[d].k) kk = 0.5 + 1.5 * detail::unit_uniform(rng);
        modes[d].w = 2.0 * detail::unit_uniform(rng);
        modes[d].phi = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
        modes[d].q = 0.5 + 1.5 * detail::unit_uniform(rng);
    }
    if (amplitude != 0.0) {
        cfg.coefficients = [n, alpha, amplitude, modes](const Vec& x, double t, int d) {
            const double rad = std::pow(norm2(x, n) + std::abs(t), 0.5 * alpha);
            double phase = modes[d].w * t + modes[d].phi;
            for (int e = 0; e + 1 < n; ++e) phase += modes[d].k[e] * x[e];
            return 1.0 + amplitude * rad * std::cos(phase) * std::cos(modes[d].q * x[n - 1]);
        };
        // Sampled spectral bounds over the box and time range.
        double lo = std::numeric_limits<double>::infinity();
        std::mt19937_64 probe(seed ^ 0x9e3779b97f4a7c15ULL);
        for (int s = 0; s < 4096; ++s) {
            Vec x{0.0, 0.0, 0.0};
            for (int d = 0; d < n; ++d) x[d] = g.L * (2.0 * detail::unit_uniform(probe) - 1.0);
            const double t = g.t_start + (g.t_end - g.t_start) * detail::unit_uniform(probe);
            for (int d = 0; d < n; ++d) lo = std::min(lo, cfg.coefficients(x, t, d));
        }
        if (lo < 0.5) throw EllipticityViolated("sampled coefficient eigenvalue below 1/2");
    }
    cfg.gauge_exponent = alpha;
    std::ostringstream d;
    d << "varcoef(n=" << n << ", alpha=" << alpha << ", amplitude=" << amplitude << ", seed=" << seed << ")";
    cfg.descriptor = d.str();
    return cfg;
}

/// Bounded drift of constant length `magnitude`: tangential part even and
/// normal part odd in x_n, so the even symmetry of the problem is kept.
inline SignoriniConfig make_drift_instance(const GridSpec& g, double p, double magnitude, std::uint64_t seed,
                                           const ProfileData& pd = {}) {
    const int n = g.n;
    if (!(p > n)) throw InvalidArgument("drift integrability exponent must exceed the dimension");
    SignoriniConfig cfg = make_profile_instance(g, pd);
    std::mt19937_64 rng(seed);
    const double q = 0.5 + 1.5 * detail::unit_uniform(rng);
    const double k1 = 0.5 + 1.5 * detail::unit_uniform(rng);
    const double w = 2.0 * detail::unit_uniform(rng);
    const double phi = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
    const double k2 = 0.5 + 1.5 * detail::unit_uniform(rng);
    if (magnitude != 0.0) {
        cfg.drift = [n, magnitude, q, k1, w, phi, k2](const Vec& x, double t) {
            const double psi = q * x[n - 1] * (1.0 + 0.5 * std::cos(k1 * x[0] + w * t + phi));
            Vec b{0.0, 0.0, 0.0};
            if (n == 2) {
                b[0] = magnitude * std::cos(psi);
                b[1] = magnitude * std::sin(psi);
            } else {
                const double chi = k2 * x[1] + phi;
                b[0] = magnitude * std::cos(psi) * std::cos(chi);
                b[1] = magnitude * std::cos(psi) * std::sin(chi);
                b[2] = magnitude * std::sin(psi);
            }
            return b;
        };
    }
    cfg.gauge_exponent = 1.0 - n / p;
    std::ostringstream d;
    d << "drift(n=" << n << ", p=" << p << ", magnitude=" << magnitude << ", seed=" << seed << ")";
    cfg.descriptor = d.str();
    return cfg;
}

/// Data read from a tabulated field: phi0 is its first slice, and the same
/// (time-independent) values are the lateral data.
inline SignoriniConfig make_table_instance(const GridSpec& g, const ScalarField& table) {
    SignoriniConfig cfg;
    cfg.grid = g;
    auto tab = std::make_shared<ScalarField>(table);
    const double t0 = table.grid().t_start;
    cfg.initial = [tab, t0](const Vec& x) { return tab->interpolate(x, t0); };
    cfg.boundary = [tab, t0](const Vec& x, double) { return tab->interpolate(x, t0); };
    cfg.descriptor = "custom-table";
    return cfg;
}

/**
 * Signorini replacement of u in the strip: the heat Signorini problem on
 * (t0 - r^2, t0] with initial slice u(., t0 - r^2) and v = u on the box faces.
 */
inline Solution solve_strip_replacement(const ScalarField& u, double r, const BasePoint& z0,
                                        double tol_psor = 1e-10) {
    const GridSpec& g = u.grid();
    if (!u.even()) throw IncompatibleData("replacement requires an even-symmetric field");
    const double t_lo = z0.t - r * r;
    if (t_lo < g.t_start - 1e-9 * g.tau() || z0.t > g.t_end + 1e-9 * g.tau())
        throw RegionOutOfRange("strip outside the field's time range");
    SignoriniConfig cfg;
    cfg.grid = g;
    cfg.grid.t_start = t_lo;
    cfg.grid.t_end = z0.t;
    cfg.grid.K = std::max(2, static_cast<int>(std::lround(r * r / g.tau())));
    cfg.tol_psor = tol_psor;
    const ScalarField* src = &u;
    cfg.initial = [src, t_lo](const Vec& x) { return src->interpolate(x, t_lo); };
    cfg.boundary = [src](const Vec& x, double t) { return src->interpolate(x, t); };
    cfg.descriptor = "strip-replacement";
    return solve_cylinder(cfg);
}

/// Spatial convolution with the normalized bump exp(-1/(1-|x/mu|^2)) sampled
/// on the grid; the stencil is renormalized where it leaves the box.
inline ScalarField mollify(const ScalarField& u, double mu) {
    const GridSpec& g = u.grid();
    if (mu < g.h() * (1.0 - 1e-12)) throw InvalidArgument("mollification radius must be at least h");
    const int n = g.n;
    const int R = static_cast<int>(std::floor(mu / g.h() + 1e-9));
    struct Tap {
        Idx off;
        double w;
    };
    std::vector<Tap> taps;
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b)
            for (int cc = (n == 3 ? -R : 0); cc <= (n == 3 ? R : 0); ++cc) {
                const Idx off{a, b, cc};
                double r2 = 0.0;
                for (int d = 0; d < n; ++d) r2 += double(off[d]) * off[d];
                const double q = r2 * g.h() * g.h() / (mu * mu);
                if (q >= 1.0) continue;
                taps.push_back({off, std::exp(-1.0 / (1.0 - q))});
            }
    ScalarField out(g, u.even());
    const SliceLayout& lay = out.layout();
    for (int k = 0; k <= g.K; ++k) {
        double* dst = out.slice(k);
        for (std::size_t o = 0; o < lay.size(); ++o) {
            const Idx I = lay.index(o);
            double acc = 0.0, wsum = 0.0;
            for (const Tap& tp : taps) {
                Idx J{I[0] + tp.off[0], I[1] + tp.off[1], I[2] + tp.off[2]};
                bool inside = true;
                for (int d = 0; d < n; ++d) inside = inside && J[d] >= 0 && J[d] < g.M;
                if (!inside) continue;
                acc += tp.w * u.value(J, k);
                wsum += tp.w;
            }
            dst[o] = acc / wsum;
        }
    }
    return out;
}

/// psi(x) = s(2 - 2|x|) with the quintic smoothstep s.
inline double cutoff_value(const Vec& x, int n) { return detail::smoothstep5(2.0 - 2.0 * std::sqrt(norm2(x, n))); }

inline ScalarField cutoff_multiply(const ScalarField& u) {
    ScalarField out = u;
    const GridSpec& g = u.grid();
    const SliceLayout& lay = out.layout();
    std::vector<double> psi(lay.size());
    for (std::size_t o = 0; o < lay.size(); ++o) psi[o] = cutoff_value(g.node(lay.index(o)), g.n);
    for (int k = 0; k <= g.K; ++k) {
        double* s = out.slice(k);
        for (std::size_t o = 0; o < lay.size(); ++o) s[o] *= psi[o];
    }
    return out;
}

struct FNorm {
    double weighted = 0.0;
    double unweighted = 0.0;
    double sup = 0.0;
    double total() const { return weighted + unweighted + sup; }
};

/**
 * The three-part norm at base point z0: Gaussian-weighted W^{1,1}_2 over the
 * whole time range before t0, plain W^{1,1}_2 over B_1 x (t_start, t0), and
 * the sup over the same time range.
 */
template <SpaceTimeField F>
FNorm f_norm(const F& u, const BasePoint& z0, const QuadOptions& opt = {}) {
    const GridSpec& g = u.grid();
    const int n = g.n;
    FNorm out;
    const double r = std::sqrt(std::max(0.0, z0.t - g.t_start));
    if (r > 0.0) {
        const StripRegion reg{z0, r, 0.0};
        const Quad q = strip_integral(
            u, reg,
            [&](const Sample& s, const Vec&, double t) {
                return s.u * s.u + (z0.t - t) * (norm2(s.grad, n) + s.dt * s.dt);
            },
            opt);
        out.weighted = std::sqrt(std::max(0.0, q.value));
    }
    // Unweighted part and sup on the nodes, trapezoid in time up to t0.
    const double cell = std::pow(g.h(), n);
    double acc = 0.0;
    double sup = 0.0;
    const SliceLayout full(g, false);
    for (int k = 0; k <= g.K; ++k) {
        const double t = g.time(k);
        if (t > z0.t + 1e-12) break;
        double wt = g.tau();
        if (k == 0 || std::abs(t - z0.t) < 1e-12) wt *= 0.5;
        double slice_acc = 0.0;
        for (std::size_t o = 0; o < full.size(); ++o) {
            const Idx I = full.index(o);
            const Vec x = g.node(I);
            const bool in_ball = norm2(x, n) <= 1.0 + 1e-12;
            const Sample s = u.sample_node(I, k);
            sup = std::max(sup, std::abs(s.u));
            if (in_ball) slice_acc += s.u * s.u + norm2(s.grad, n) + s.dt * s.dt;
        }
        acc += wt * cell * slice_acc;
    }
    out.unweighted = std::sqrt(acc);
    out.sup = sup;
    return out;
}

}  // namespace parafree

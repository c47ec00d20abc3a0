#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "functionals.hpp"
#include "rescaling.hpp"

namespace parafree {

enum class PointClass { Regular, NonRegular, Undetermined };

inline const char* to_string(PointClass c) {
    switch (c) {
        case PointClass::Regular: return "Regular";
        case PointClass::NonRegular: return "NonRegular";
        case PointClass::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

struct FreeBoundaryPoint {
    BasePoint z;
    /// Thin node the point was extracted at, and its time index.
    Idx node{0, 0, 0};
    int k = 0;
    double kappa_hat = std::numeric_limits<double>::quiet_NaN();
    double confidence = 0.0;
    PointClass cls = PointClass::Undetermined;
    std::optional<HomogeneousProfile> profile;
    /// Smallest radius of the frequency curve.
    double radius = 0.0;
    /// Smallest m(r) = r^{-5}∫_{S_r}u²G over the curve.
    double m_min = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};

/**
 * Thin nodes with u <= pos_tol having a tangential neighbour (same slice) with
 * u > pos_tol. With `refine`, the location is moved to the sub-cell zero of
 * the 3/2 power fitted through the two positive nodes next to it.
 */
inline std::vector<FreeBoundaryPoint> extract_free_boundary(const ScalarField& u, double pos_tol = 1e-9,
                                                            std::vector<int> slices = {}, bool refine = true) {
    const GridSpec& g = u.grid();
    const int n = g.n;
    const int M = g.M;
    const double h = g.h();
    if (slices.empty())
        for (int k = 0; k <= g.K; ++k) slices.push_back(k);
    std::vector<FreeBoundaryPoint> out;
    const int c = g.center();
    for (int k : slices) {
        if (k < 0 || k > g.K) throw InvalidArgument("slice index out of range");
        auto val = [&](int i0, int i1) {
            Idx I{i0, 0, 0};
            if (n == 2) I[1] = c;
            else {
                I[1] = i1;
                I[2] = c;
            }
            return u.value(I, k);
        };
        const int M1 = n == 3 ? M : 1;
        for (int j = 0; j < M1; ++j)
            for (int i = 0; i < M; ++i) {
                if (val(i, j) > pos_tol) continue;
                Vec inv{0.0, 0.0, 0.0};
                double inv2 = 0.0;
                bool boundary = false;
                for (int a = 0; a + 1 < n; ++a)
                    for (int s : {-1, 1}) {
                        int ii = i, jj = j;
                        (a == 0 ? ii : jj) += s;
                        if ((a == 0 ? ii : jj) < 0 || (a == 0 ? ii : jj) >= M) continue;
                        const double u1 = val(ii, jj);
                        if (u1 <= pos_tol) continue;
                        boundary = true;
                        // Distance from the node to the zero along this axis.
                        double dist = 0.5 * h;
                        int i2 = ii, j2 = jj;
                        (a == 0 ? i2 : j2) += s;
                        if (refine && (a == 0 ? i2 : j2) >= 0 && (a == 0 ? i2 : j2) < M) {
                            const double u2 = val(i2, j2);
                            if (u2 > u1) {
                                const double q = std::pow(u2 / u1, 2.0 / 3.0);
                                // Positions 1 and 2 steps from the node: zero at (2 - q)/(1 - q) steps.
                                const double z = (2.0 - q) / (1.0 - q);
                                dist = std::clamp(z, 0.0, 1.0) * h;
                            }
                        }
                        if (!refine) dist = 0.0;
                        if (dist <= 0.0) {
                            inv2 = std::numeric_limits<double>::infinity();
                            continue;
                        }
                        inv[a] += s / dist;
                        inv2 += 1.0 / (dist * dist);
                    }
                if (!boundary) continue;
                FreeBoundaryPoint p;
                p.node = n == 2 ? Idx{i, c, 0} : Idx{i, j, c};
                p.k = k;
                p.z.x = g.node(p.node);
                p.z.t = g.time(k);
                if (std::isfinite(inv2) && inv2 > 0.0)
                    for (int a = 0; a + 1 < n; ++a) p.z.x[a] += inv[a] / inv2;
                out.push_back(p);
            }
    }
    return out;
}

struct ClassifyOptions {
    WeissParams params;
    /// Empty: half-dyadic ladder from 0.4 to the grid's radius floor.
    std::vector<double> radii;
    double gap_tol = 0.15;
    double fit_tol = 0.2;
    double confidence_threshold = 0.5;
    LimitOptions limit;
    QuadOptions quad;
    std::optional<double> fnorm;
    bool fit = true;
};

template <SpaceTimeField F>
std::vector<double> default_radii(const F& u) {
    return radius_ladder(0.4, radius_floor(u.grid(), u.continuous_time()));
}

/**
 * Frequency curve, limit extrapolation and the 3/2-vs-2 gap rule; a profile is
 * fitted to the smallest-radius rescaling when the point looks regular.
 */
template <SpaceTimeField F>
FreeBoundaryPoint classify(const F& u, FreeBoundaryPoint p, const ClassifyOptions& co = {},
                           FrequencyCurve* curve_out = nullptr) {
    const std::vector<double> radii = co.radii.empty() ? default_radii(u) : co.radii;
    p.cls = PointClass::Undetermined;
    FrequencyCurve curve;
    try {
        curve = frequency_curve(u, p.z, radii, co.params, co.fnorm, co.quad);
    } catch (const DegenerateDenominator& e) {
        p.note = e.what();
        return p;
    } catch (const RegionOutOfRange& e) {
        p.note = e.what();
        return p;
    }
    if (curve_out) *curve_out = curve;
    p.radius = curve.rows.front().r;
    p.m_min = std::numeric_limits<double>::infinity();
    for (const auto& row : curve.rows) p.m_min = std::min(p.m_min, row.m);
    FrequencyLimit lim;
    try {
        lim = frequency_limit(curve, co.limit);
    } catch (const InsufficientRadii& e) {
        p.note = e.what();
        return p;
    }
    p.kappa_hat = lim.kappa;
    p.confidence = lim.confidence;
    if (lim.confidence < co.confidence_threshold) {
        p.note = "low confidence";
        return p;
    }
    if (std::abs(lim.kappa - 1.5) <= co.gap_tol) {
        if (!co.fit) {
            p.cls = PointClass::Regular;
            return p;
        }
        try {
            const AnalyticField v = homogeneous_view(u, p.z, p.radius, 1.5);
            FitOptions fo;
            fo.max_residual = co.fit_tol;
            p.profile = fit_profile(v, fo);
            p.cls = PointClass::Regular;
        } catch (const PoorFit& e) {
            p.note = e.what();
        } catch (const RegionOutOfRange& e) {
            p.note = e.what();
        }
    } else if (lim.kappa >= 2.0 - co.gap_tol) {
        p.cls = PointClass::NonRegular;
    } else {
        p.note = "frequency inside the gap";
    }
    return p;
}

struct ComplementarityReport {
    /// |u ∂⁺_n u| per thin node of the slice (full thin grid, row-major).
    std::vector<double> residual;
    double max_residual = 0.0;
    /// u and |∇̂u| at each free-boundary point's node.
    std::vector<std::pair<double, double>> at_points;
};

inline ComplementarityReport complementarity_residual(const ScalarField& u, int k,
                                                      const std::vector<FreeBoundaryPoint>& points = {}) {
    const GridSpec& g = u.grid();
    const int n = g.n;
    const int c = g.center();
    ComplementarityReport rep;
    const int M1 = n == 3 ? g.M : 1;
    for (int j = 0; j < M1; ++j)
        for (int i = 0; i < g.M; ++i) {
            const Idx I = n == 2 ? Idx{i, c, 0} : Idx{i, j, c};
            const double v = u.value(I, k) * u.derivative(I, k, n - 1);
            rep.residual.push_back(std::abs(v));
            rep.max_residual = std::max(rep.max_residual, std::abs(v));
        }
    for (const auto& p : points) {
        const Sample s = u.sample_node(p.node, p.k);
        rep.at_points.emplace_back(s.u, std::sqrt(norm2(s.grad, n)));
    }
    return rep;
}

inline double parabolic_distance(const BasePoint& a, const BasePoint& b, int n) {
    Vec d{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) d[i] = a.x[i] - b.x[i];
    return std::sqrt(norm2(d, n)) + std::sqrt(std::abs(a.t - b.t));
}

/**
 * Hölder exponent from pairs (distance, difference): slope of the log of the
 * per-bin maximum difference against the log of the bin distance. NaN when all
 * differences are below `noise`.
 */
inline double holder_exponent(std::vector<std::pair<double, double>> pairs, double noise = 1e-12, int bins = 8) {
    std::erase_if(pairs, [](const auto& p) { return !(p.first > 0.0); });
    if (pairs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0, vmax = 0.0;
    for (auto [d, v] : pairs) {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
        vmax = std::max(vmax, v);
    }
    if (vmax <= noise || dmax <= dmin * (1.0 + 1e-12)) return std::numeric_limits<double>::quiet_NaN();
    const double lmin = std::log(dmin), lmax = std::log(dmax);
    std::vector<double> bmax(bins, 0.0), bpos(bins, 0.0);
    std::vector<int> cnt(bins, 0);
    for (auto [d, v] : pairs) {
        int b = static_cast<int>((std::log(d) - lmin) / (lmax - lmin) * bins);
        b = std::clamp(b, 0, bins - 1);
        if (v > bmax[b]) {
            bmax[b] = v;
            bpos[b] = std::log(d);
        }
        ++cnt[b];
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (int b = 0; b < bins; ++b) {
        if (cnt[b] == 0 || bmax[b] <= noise) continue;
        const double x = bpos[b];
        const double y = std::log(bmax[b]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1;
    }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct RegularGraph {
    /// Mean blowup direction; the chart axis x_{n-1} after rotation.
    Vec chart{1.0, 0.0, 0.0};
    struct Row {
        double s = 0.0;  ///< x'' coordinate (n = 3), 0 for n = 2
        double t = 0.0;
        double g = 0.0;
        double grad = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<Row> rows;
    double gamma_hat = std::numeric_limits<double>::quiet_NaN();
    std::size_t pair_count = 0;
};

inline Vec mean_direction(const std::vector<FreeBoundaryPoint>& pts, double max_angle) {
    Vec m{0.0, 0.0, 0.0};
    for (const auto& p : pts)
        for (int d = 0; d < 2; ++d) m[d] += p.profile->e[d];
    const double len = std::hypot(m[0], m[1]);
    if (!(len > 0.0)) throw InconsistentDirections("blowup directions cancel");
    m[0] /= len;
    m[1] /= len;
    for (const auto& p : pts) {
        const double cosang = p.profile->e[0] * m[0] + p.profile->e[1] * m[1];
        if (cosang < std::cos(max_angle)) throw InconsistentDirections("blowup directions spread beyond the chart");
    }
    return m;
}

/**
 * Graph x_{n-1} = g(x'', t) of the regular set in the chart aligned with the
 * mean blowup direction, its x''-derivative from local least-squares planes,
 * and the Hölder exponent of that derivative in the parabolic distance.
 */
inline RegularGraph fit_regular_graph(const std::vector<FreeBoundaryPoint>& points, int n,
                                      double max_angle = std::numbers::pi / 6.0, std::size_t neighbours = 8) {
    std::vector<FreeBoundaryPoint> reg;
    for (const auto& p : points)
        if (p.cls == PointClass::Regular && p.profile) reg.push_back(p);
    if (reg.size() < 8) throw InsufficientPoints("need at least eight regular points with profiles");
    RegularGraph out;
    out.chart = n == 3 ? mean_direction(reg, max_angle) : Vec{1.0, 0.0, 0.0};
    if (n == 2) mean_direction(reg, max_angle);
    const Vec perp{-out.chart[1], out.chart[0], 0.0};
    for (const auto& p : reg) {
        RegularGraph::Row row;
        row.t = p.z.t;
        if (n == 3) {
            row.s = p.z.x[0] * perp[0] + p.z.x[1] * perp[1];
            row.g = p.z.x[0] * out.chart[0] + p.z.x[1] * out.chart[1];
        } else {
            row.g = p.z.x[0];
        }
        out.rows.push_back(row);
    }
    if (n == 2) return out;
    // Local planes g ≈ a + b s + c t over the nearest rows in the parabolic distance.
    const std::size_t kn = std::min(neighbours, out.rows.size());
    for (auto& row : out.rows) {
        std::vector<std::pair<double, std::size_t>> near;
        for (std::size_t j = 0; j < out.rows.size(); ++j) {
            const auto& o = out.rows[j];
            near.emplace_back(std::abs(o.s - row.s) + std::sqrt(std::abs(o.t - row.t)), j);
        }
        std::partial_sort(near.begin(), near.begin() + kn, near.end());
        double A[3][3] = {}, b[3] = {};
        for (std::size_t q = 0; q < kn; ++q) {
            const auto& o = out.rows[near[q].second];
            const double v[3] = {1.0, o.s - row.s, o.t - row.t};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) A[i][j] += v[i] * v[j];
                b[i] += v[i] * o.g;
            }
        }
        // Solve by Cramer's rule; time column dropped when degenerate (single slice).
        auto det3 = [](double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double D = det3(A);
        if (std::abs(D) > 1e-14 * std::max(1.0, A[0][0] * A[1][1] * A[2][2])) {
            double B[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) B[i][j] = j == 1 ? b[i] : A[i][j];
            row.grad = det3(B) / D;
        } else {
            const double D2 = A[0][0] * A[1][1] - A[0][1] * A[1][0];
            if (std::abs(D2) > 0.0) row.grad = (A[0][0] * b[1] - A[1][0] * b[0]) / D2;
        }
    }
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        for (std::size_t j = i + 1; j < out.rows.size(); ++j) {
            const auto& a = out.rows[i];
            const auto& c = out.rows[j];
            if (!std::isfinite(a.grad) || !std::isfinite(c.grad)) continue;
            pairs.emplace_back(std::abs(a.s - c.s) + std::sqrt(std::abs(a.t - c.t)), std::abs(a.grad - c.grad));
        }
    out.pair_count = pairs.size();
    out.gamma_hat = holder_exponent(pairs, 1e-9);
    return out;
}

struct DependenceRow {
    double distance = 0.0;
    double dc = 0.0;
    double de = 0.0;
};

struct BlowupDependence {
    std::vector<DependenceRow> rows;
    /// Hölder exponent of |dc| + |de| in the parabolic distance; NaN if all vanish.
    double exponent = std::numeric_limits<double>::quiet_NaN();
};

inline BlowupDependence blowup_dependence(const std::vector<FreeBoundaryPoint>& points, int n) {
    std::vector<const FreeBoundaryPoint*> reg;
    for (const auto& p : points)
        if (p.cls == PointClass::Regular && p.profile) reg.push_back(&p);
    if (reg.size() < 2) throw InsufficientPoints("need at least two regular points with profiles");
    BlowupDependence out;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < reg.size(); ++i)
        for (std::size_t j = i + 1; j < reg.size(); ++j) {
            DependenceRow row;
            row.distance = parabolic_distance(reg[i]->z, reg[j]->z, n);
            row.dc = std::abs(reg[i]->profile->c - reg[j]->profile->c);
            row.de = std::hypot(reg[i]->profile->e[0] - reg[j]->profile->e[0],
                                reg[i]->profile->e[1] - reg[j]->profile->e[1]);
            out.rows.push_back(row);
            pairs.emplace_back(row.distance, row.dc + row.de);
        }
    out.exponent = holder_exponent(pairs, 1e-9);
    return out;
}

}  // namespace parafree

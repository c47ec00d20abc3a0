#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "parafree/analytic.hpp"
#include "parafree/free_boundary.hpp"
#include "parafree/signorini.hpp"

using namespace parafree;

namespace {

GridSpec small_grid(int M = 41, int K = 4, double L = 1.0) {
    GridSpec g;
    g.n = 2;
    g.L = L;
    g.M = M;
    g.K = K;
    return g;
}

GridSpec analytic_grid() {
    GridSpec g;
    g.n = 2;
    g.L = 6.0;
    g.M = 193;
    g.K = 100;
    return g;
}

const Vec e1{1.0, 0.0, 0.0};

FreeBoundaryPoint synthetic_point(double s, double t, double angle, double c = 1.0) {
    FreeBoundaryPoint p;
    p.z.x = {0.0, s, 0.0};
    p.z.t = t;
    p.cls = PointClass::Regular;
    HomogeneousProfile prof;
    prof.c = c;
    prof.e = unit_direction(3, angle);
    prof.residual = 0.0;
    p.profile = prof;
    return p;
}

}  // namespace

TEST(Extract, ExactProfileBoundaryIsTheOrigin) {
    const GridSpec g = small_grid();
    const ScalarField u = materialize(profile_field(g, e1), g, true);
    const auto pts = extract_free_boundary(u);
    ASSERT_EQ(pts.size(), static_cast<std::size_t>(g.K + 1));
    for (const auto& p : pts) {
        EXPECT_NEAR(p.z.x[0], 0.0, 1e-12);
        EXPECT_EQ(p.z.x[1], 0.0);
    }
    // Shifted by a third of a cell: the refined point follows it.
    const Vec shift{g.h() / 3.0, 0.0, 0.0};
    const ScalarField v = materialize(profile_field(g, e1, 1.0, shift), g, true);
    for (const auto& p : extract_free_boundary(v, 1e-9, {g.K})) EXPECT_NEAR(p.z.x[0], shift[0], 1e-9);
}

TEST(Extract, NoBoundaryForConstantFields) {
    const GridSpec g = small_grid();
    EXPECT_TRUE(extract_free_boundary(materialize(constant_field(g, 1.0), g, true)).empty());
    EXPECT_TRUE(extract_free_boundary(materialize(constant_field(g, 0.0), g, true)).empty());
}

TEST(Extract, SolvedProfileBoundaryWithinOneCell) {
    const GridSpec g = small_grid(41, 40);
    const Solution s = solve_cylinder(make_profile_instance(g));
    const auto pts = extract_free_boundary(s.u, s.pos_tol, {g.K});
    ASSERT_FALSE(pts.empty());
    for (const auto& p : pts) EXPECT_LE(std::abs(p.z.x[0]), g.h());
}

TEST(Classify, ExactProfileIsRegular) {
    FreeBoundaryPoint p;
    const FreeBoundaryPoint c = classify(profile_field(analytic_grid(), e1), p);
    EXPECT_EQ(c.cls, PointClass::Regular) << c.note;
    EXPECT_NEAR(c.kappa_hat, 1.5, 0.02);
    ASSERT_TRUE(c.profile.has_value());
    EXPECT_NEAR(c.profile->e[0], 1.0, 1e-12);
    EXPECT_NEAR(c.profile->c, 1.0, 1e-3);
}

TEST(Classify, DegreeTwoFieldIsNonRegular) {
    const FreeBoundaryPoint c = classify(quadratic_field(analytic_grid()), FreeBoundaryPoint{});
    EXPECT_EQ(c.cls, PointClass::NonRegular) << c.note;
    EXPECT_NEAR(c.kappa_hat, 2.0, 0.02);
}

TEST(Classify, DegeneratePointIsUndetermined) {
    ClassifyOptions co;
    co.fnorm = 1.0;
    const FreeBoundaryPoint c = classify(constant_field(analytic_grid(), 0.0), FreeBoundaryPoint{}, co);
    EXPECT_EQ(c.cls, PointClass::Undetermined);
    EXPECT_FALSE(c.note.empty());
}

TEST(Complementarity, ProfileResidualScalesWithRootH) {
    for (int M : {41, 81}) {
        const GridSpec g = small_grid(M, 2);
        const ScalarField u = materialize(profile_field(g, e1), g, true);
        const auto pts = extract_free_boundary(u, 1e-9, {1});
        const ComplementarityReport rep = complementarity_residual(u, 1, pts);
        EXPECT_LE(rep.max_residual, 2.0 * std::sqrt(g.h()));
        ASSERT_EQ(rep.at_points.size(), 1u);
        EXPECT_EQ(rep.at_points[0].first, 0.0);
        EXPECT_LE(rep.at_points[0].second, 2.0 * std::sqrt(g.h()));
    }
}

TEST(Complementarity, PositiveSolutionHasNoResidual) {
    const GridSpec g = small_grid(41, 100);
    const Solution s = solve_cylinder(make_heat_positive_instance(g));
    EXPECT_LT(complementarity_residual(s.u, g.K).max_residual, 1e-2);
}

TEST(Graph, LinearChartOfRotatedProfile) {
    std::vector<FreeBoundaryPoint> pts;
    const double a = 0.4;
    for (int i = -3; i <= 3; ++i)
        for (double t : {-0.2, -0.1, 0.0}) {
            FreeBoundaryPoint p = synthetic_point(0.0, t, a);
            // Points on the line x'·e = 0.
            p.z.x = {-std::sin(a) * 0.1 * i, std::cos(a) * 0.1 * i, 0.0};
            pts.push_back(p);
        }
    const RegularGraph g = fit_regular_graph(pts, 3);
    EXPECT_NEAR(g.chart[0], std::cos(a), 1e-12);
    for (const auto& row : g.rows) {
        EXPECT_NEAR(row.g, 0.0, 1e-12);
        EXPECT_NEAR(row.grad, 0.0, 1e-9);
    }
    EXPECT_TRUE(std::isnan(g.gamma_hat));
}

TEST(Graph, RecoversSynthesisExponent) {
    const double gamma = 0.5, A = 0.3;
    std::vector<FreeBoundaryPoint> pts;
    for (int i = -40; i <= 40; ++i) {
        const double s = 0.01 * i;
        const double gval = A * std::pow(std::abs(s), 1.0 + gamma) / (1.0 + gamma);
        for (double t : {-0.02, -0.01, 0.0}) {
            FreeBoundaryPoint p = synthetic_point(s, t, 0.0);
            p.z.x = {gval, s, 0.0};
            pts.push_back(p);
        }
    }
    const RegularGraph g = fit_regular_graph(pts, 3);
    EXPECT_GE(g.gamma_hat, gamma - 0.1);
    EXPECT_GT(g.pair_count, 100u);
}

TEST(Graph, Preconditions) {
    std::vector<FreeBoundaryPoint> two{synthetic_point(0, 0, 0), synthetic_point(0.1, 0, 0)};
    EXPECT_THROW(fit_regular_graph(two, 3), InsufficientPoints);
    std::vector<FreeBoundaryPoint> spread;
    for (int i = 0; i < 8; ++i) spread.push_back(synthetic_point(0.1 * i, 0, i < 4 ? 0.0 : 1.2));
    EXPECT_THROW(fit_regular_graph(spread, 3), InconsistentDirections);
}

TEST(Dependence, IdenticalBlowupsAndSynthesizedFamily) {
    std::vector<FreeBoundaryPoint> same;
    for (int i = 0; i < 5; ++i) same.push_back(synthetic_point(0.1 * i, 0.0, 0.2));
    const BlowupDependence d0 = blowup_dependence(same, 3);
    for (const auto& row : d0.rows) {
        EXPECT_EQ(row.dc, 0.0);
        EXPECT_EQ(row.de, 0.0);
    }
    EXPECT_TRUE(std::isnan(d0.exponent));

    const double gamma = 0.4;
    std::vector<FreeBoundaryPoint> fam;
    for (int i = 0; i <= 60; ++i) {
        const double s = 0.01 * i;
        const double v = 0.2 * std::pow(s, gamma);
        fam.push_back(synthetic_point(s, 0.0, v, 1.0 + 0.5 * v));
    }
    const BlowupDependence d = blowup_dependence(fam, 3);
    EXPECT_NEAR(d.exponent, gamma, 0.1);
    EXPECT_THROW(blowup_dependence({synthetic_point(0, 0, 0)}, 3), InsufficientPoints);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "parafree/analytic.hpp"
#include "parafree/functionals.hpp"

using namespace parafree;

namespace {

GridSpec analytic_grid() {
    GridSpec g;
    g.n = 2;
    g.L = 6.0;
    g.M = 193;
    g.K = 100;
    return g;
}

const Vec e1{1.0, 0.0, 0.0};

}  // namespace

TEST(Weights, ConstantsAndClosedFormValue) {
    WeissParams p;
    p.kappa = 1.5;
    p.kappa0 = 3.0;
    p.alpha = p.eps = 0.5;
    EXPECT_DOUBLE_EQ(p.a(), 40.0);
    EXPECT_DOUBLE_EQ(p.b(), 1024.0);
    const double r = 1e-4;
    const PhiPsi w = phi_psi(r, 0.0, p);
    EXPECT_NEAR(w.phi / (std::exp(0.4) / std::pow(r, 5.0)), 1.0, 1e-12);
    EXPECT_NEAR(w.psi / ((1.0 - 1024.0 * 0.01) * w.phi), 1.0, 1e-12);
}

TEST(Weights, DerivativesMatchDifferenceQuotients) {
    WeissParams p;
    p.kappa = 1.2;
    p.alpha = 0.7;
    p.eps = 0.4;
    for (double r : {1e-6, 1e-3, 0.05}) {
        for (double frac : {0.0, 0.3, 0.7}) {
            const double rho = frac * r;
            const double hstep = 1e-6 * r;
            const PhiPsi c = phi_psi(r, rho, p);
            const PhiPsi up = phi_psi(r + hstep, rho, p);
            const PhiPsi dn = phi_psi(r - hstep, rho, p);
            EXPECT_NEAR((up.phi - dn.phi) / (2 * hstep) / c.dphi, 1.0, 1e-6);
            EXPECT_NEAR((up.psi - dn.psi) / (2 * hstep) / c.dpsi, 1.0, 1e-6);
        }
    }
}

TEST(Weights, InequalitiesHoldOnSampledAdmissibleTuples) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        WeissParams p;
        p.kappa0 = 3.0;
        p.kappa = 0.01 + (p.kappa0 - 0.02) * U(rng);
        p.alpha = 0.25 + 0.7 * U(rng);
        p.eps = 0.25 + (p.alpha - 0.25) * U(rng);
        const double r0 = p.r0();
        const double r = r0 * std::pow(10.0, -6.0 * U(rng)) * (1.0 - 1e-9);
        const double rho = r * U(rng) / std::sqrt(2.0);
        const WeightInequalities w = weight_inequalities(r, rho, p);
        EXPECT_TRUE(w.holds()) << "kappa=" << p.kappa << " alpha=" << p.alpha << " eps=" << p.eps << " r=" << r;
        ++checked;
    }
    EXPECT_EQ(checked, 1000);
}

TEST(Weights, FirstInequalityFailsFarOutsideTheAdmissibleRange) {
    WeissParams p;
    EXPECT_FALSE(weight_inequalities(0.5, 0.0, p).holds());
    EXPECT_GT(0.5, p.r0());
}

TEST(Weights, RejectsInadmissibleRadii) {
    WeissParams p;
    EXPECT_THROW(phi_psi(0.1, 0.1, p), InadmissibleRadii);
    EXPECT_THROW(phi_psi(0.1, 0.09, p), InadmissibleRadii);
    EXPECT_NO_THROW(phi_psi(0.1, 0.05, p));
}

TEST(Almgren, HomogeneousCalibration) {
    const GridSpec g = analytic_grid();
    const WeissParams p;
    struct Case {
        AnalyticField f;
        double kappa;
    };
    const Case cases[] = {{linear_field(g), 1.0}, {profile_field(g, e1), 1.5}, {quadratic_field(g), 2.0}};
    for (const auto& c : cases)
        for (double r : {0.1, 0.2, 0.4}) {
            const Frequencies f = almgren(c.f, BasePoint{}, r, p, 1.0);
            EXPECT_NEAR(f.N0, c.kappa, 0.01 * c.kappa) << c.f.name() << " r=" << r;
        }
}

TEST(Almgren, DegenerateFieldThrows) {
    const GridSpec g = analytic_grid();
    EXPECT_THROW(almgren(constant_field(g, 0.0), BasePoint{}, 0.2, WeissParams{}, 1.0), DegenerateDenominator);
}

TEST(Almgren, TruncatedVariantsFollowTheirDefinitions) {
    const GridSpec g = analytic_grid();
    WeissParams p;
    const double r = 0.2, F = 3.0;
    const Frequencies f = almgren(linear_field(g), BasePoint{}, r, p, F);
    // Both strip integrals equal r^4 for x1.
    const double extra = F * F * std::exp(-1.0 / r) * std::pow(r, -p.delta) / std::pow(r, 4.0);
    EXPECT_NEAR(f.Ndelta, 1.0 + extra, 1e-3);
    EXPECT_NEAR(f.Ntilde, f.Ndelta / (1.0 - std::sqrt(r)), 1e-12);
    EXPECT_DOUBLE_EQ(f.Nhat, std::min(f.Ntilde, p.kappa0));
    const Frequencies fe = almgren(linear_field(g), BasePoint{}, r, p, F, ConstantsMode::Exact);
    EXPECT_TRUE(std::isnan(fe.Ntilde));
}

TEST(Poon, SliceFrequencies) {
    const GridSpec g = analytic_grid();
    EXPECT_NEAR(poon(constant_field(g, 1.0), BasePoint{}, 0.3, 1.0), 0.0, 1e-12);
    for (double r : {0.2, 0.5}) EXPECT_NEAR(poon(linear_field(g), BasePoint{}, r, 1.0), 0.5, 1e-4);
    EXPECT_NEAR(poon(profile_field(g, e1), BasePoint{}, 0.3, 1.0), 0.75, 5e-3);
}

TEST(Weiss, StandardEnergyCalibration) {
    const GridSpec g = analytic_grid();
    EXPECT_NEAR(weiss_standard(constant_field(g, 1.0), BasePoint{}, 0.5).W0, -12.0, 1e-3);
    EXPECT_NEAR(weiss_standard(linear_field(g), BasePoint{}, 0.5).W0, -1.0, 1e-3);
    for (double r : {0.05, 0.1, 0.2, 0.4}) {
        const StandardWeiss w = weiss_standard(profile_field(g, e1), BasePoint{}, r);
        EXPECT_NEAR(w.W0, 0.0, 2e-3) << r;
        EXPECT_NEAR(w.V0, 0.0, 2e-3) << r;
    }
}

TEST(Weiss, SliceEnergyMatchesRadialDerivativeRelation) {
    const GridSpec g = analytic_grid();
    const auto f = heat_positive_field(g);
    const BasePoint z0{{0.2, 0.0, 0.0}, 0.0};
    for (double r : {0.2, 0.4}) {
        const double dr = 1e-3;
        const double Wp = weiss_standard(f, z0, r + dr).W0;
        const double Wm = weiss_standard(f, z0, r - dr).W0;
        const StandardWeiss w = weiss_standard(f, z0, r);
        const double rhs = 2.5 * w.W0 + 0.5 * r * (Wp - Wm) / (2 * dr);
        EXPECT_NEAR(w.V0, rhs, 1e-3 * std::abs(w.V0));
    }
}

TEST(Weiss, FullEnergyOfProfileDecomposes) {
    const GridSpec g = analytic_grid();
    const auto f = profile_field(g, e1);
    const WeissParams p;
    const double F = 2.0;
    for (double r : {0.1, 0.3}) {
        const StripMoments m = strip_moments(f, BasePoint{}, r, 0.0);
        const double C0 = m.mass.value / std::pow(r, 5.0);
        const double expect =
            std::exp(std::sqrt(r)) * (1.5 * std::sqrt(r) * C0 + F * F * std::exp(-1.0 / r) * std::pow(r, -6.0));
        const double got = weiss(f, BasePoint{}, r, p, F);
        EXPECT_NEAR(got, expect, 2e-3 * std::abs(expect) + 1e-3);
    }
    EXPECT_EQ(weiss(constant_field(g, 0.0), BasePoint{}, 0.2, p, 0.0), 0.0);
}

TEST(Weiss, ExponentialTermRatioDecreasesOnSmallRadii) {
    const GridSpec g = analytic_grid();
    const auto f = profile_field(g, e1);
    const double a = exponential_term_ratio(f, BasePoint{}, 0.2, 1.0, 1.0);
    const double b = exponential_term_ratio(f, BasePoint{}, 0.1, 1.0, 1.0);
    EXPECT_LT(b, a);
    EXPECT_THROW(exponential_term_ratio(constant_field(g, 0.0), BasePoint{}, 0.1, 1.0, 1.0), DegenerateDenominator);
}

TEST(FrequencyLimit, ConstantCurvesRecoverTheirValue) {
    const GridSpec g = analytic_grid();
    const auto radii = radius_ladder(0.4, 0.05);
    const auto prof = frequency_curve(profile_field(g, e1), BasePoint{}, radii, WeissParams{}, 1.0);
    const FrequencyLimit lp = frequency_limit(prof);
    EXPECT_NEAR(lp.kappa, 1.5, 0.02);
    EXPECT_GT(lp.confidence, 0.5);
    const auto quad = frequency_curve(quadratic_field(g), BasePoint{}, radii, WeissParams{}, 1.0);
    EXPECT_NEAR(frequency_limit(quad).kappa, 2.0, 0.02);
}

TEST(FrequencyLimit, RecoversPowerLawLimitAndReportsNoise) {
    FrequencyCurve c;
    for (double r : radius_ladder(0.4, 0.05)) {
        FrequencyRow row;
        row.r = r;
        row.N0 = 1.5 + 0.8 * r;
        c.rows.push_back(row);
    }
    EXPECT_NEAR(frequency_limit(c).kappa, 1.5, 1e-6);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (auto& row : c.rows) row.N0 += noise(rng);
    const FrequencyLimit noisy = frequency_limit(c);
    EXPECT_TRUE(std::isfinite(noisy.kappa));
    EXPECT_LT(noisy.confidence, 0.5);
}

TEST(FrequencyLimit, NeedsEnoughRadii) {
    FrequencyCurve c;
    for (double r : {0.1, 0.12, 0.14, 0.16, 0.18}) c.rows.push_back(FrequencyRow{.r = r, .N0 = 1.5});
    EXPECT_THROW(frequency_limit(c), InsufficientRadii);
    c.rows.resize(3);
    EXPECT_THROW(frequency_limit(c), InsufficientRadii);
}

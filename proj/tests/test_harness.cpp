#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "parafree/harness.hpp"

using namespace parafree;

namespace {

const Vec e1{1.0, 0.0, 0.0};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<double> column(const ExperimentReport& r, const std::string& table, const std::string& col) {
    const Table* t = r.find(table);
    if (!t) throw std::runtime_error("missing table " + table);
    const std::size_t c = t->column(col);
    std::vector<double> out;
    for (const auto& row : t->rows) out.push_back(row[c]);
    return out;
}

}  // namespace

TEST(Harness, CalibrationSuitePasses) {
    const auto reports = calibration_suite(2);
    EXPECT_GE(reports.size(), 12u);
    for (const auto& r : reports) {
        std::string why;
        for (const auto& n : r.notes) why += n + "; ";
        EXPECT_EQ(r.verdict, Verdict::Pass) << r.name << ": " << why;
    }
    EXPECT_TRUE(all_pass(reports));
}

TEST(Harness, ProfileWeissVanishesInPracticalMode) {
    const AnalyticField u = profile_field(calibration_grid(), e1);
    const auto rep = verify_weiss_monotonicity(u, BasePoint{}, WeissParams{}, radius_ladder(0.4, 0.05, 0.5),
                                               ConstantsMode::Practical);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    for (double w0 : column(rep, "weiss", "W0")) EXPECT_NEAR(w0, 0.0, 2e-3);
}

TEST(Harness, ExactConstantsAtGridRadiiAreInconclusive) {
    const AnalyticField u = profile_field(calibration_grid(), e1);
    const auto rep = verify_weiss_monotonicity(u, BasePoint{}, WeissParams{}, {0.1, 0.2, 0.4}, ConstantsMode::Exact);
    EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
    ASSERT_FALSE(rep.notes.empty());
    EXPECT_NE(rep.notes.front().find("r0"), std::string::npos);
}

TEST(Harness, ConstantFieldWeissIncreases) {
    const AnalyticField u = constant_field(calibration_grid(), 1.0);
    const auto rep = verify_weiss_monotonicity(u, BasePoint{}, WeissParams{}, radius_ladder(0.16, 0.02, 0.5),
                                               ConstantsMode::Practical);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    const auto w = column(rep, "weiss", "W");
    for (std::size_t j = 1; j < w.size(); ++j) EXPECT_GT(w[j], w[j - 1]);
}

TEST(Harness, InnerRadiusBoundVanishesForHomogeneousField) {
    WeissParams p;
    p.rho = 0.02;
    const AnalyticField u = profile_field(calibration_grid(), e1);
    EXPECT_NEAR(self_similar_gap(u, BasePoint{}, 1.5, 0.02, 0.1), 0.0, 1e-20);
    const AnalyticField q = quadratic_field(calibration_grid());
    EXPECT_GT(self_similar_gap(q, BasePoint{}, 1.5, 0.02, 0.1), 0.0);
    const auto rep = verify_weiss_monotonicity(u, BasePoint{}, p, {0.04, 0.08, 0.16}, ConstantsMode::Practical);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
}

TEST(Harness, GrowthSlopes) {
    const GridSpec g = calibration_grid();
    const auto radii = radius_ladder(0.4, 0.05, 0.5);
    const auto reg = verify_growth(profile_field(g, e1), BasePoint{}, radii);
    EXPECT_EQ(reg.verdict, Verdict::Pass);
    EXPECT_NEAR(reg.number("slope"), 5.0, 0.05);
    GrowthExpectation ge;
    ge.cls = PointClass::NonRegular;
    ge.kappa_hat = 2.0;
    const auto nonreg = verify_growth(quadratic_field(g), BasePoint{}, radii, ge);
    EXPECT_EQ(nonreg.verdict, Verdict::Pass);
    EXPECT_NEAR(nonreg.number("slope"), 6.0, 0.1);
    ge.cls = PointClass::Undetermined;
    const auto constant = verify_growth(constant_field(g, 1.0), BasePoint{}, radii, ge);
    EXPECT_EQ(constant.verdict, Verdict::Inconclusive);
    EXPECT_NEAR(constant.number("slope"), 2.0, 0.01);
}

TEST(Harness, EpiperimetricDecayOfTheSevenHalvesMode) {
    // Profile plus a multiple of the 7/2 mode: V(t) is proportional to (-t)^2,
    // so every evaluated rung has xi = 1 - e^{-2}.
    GridSpec g;
    g.n = 2;
    g.L = 2.0;
    g.M = 257;
    g.K = 400;
    ProfileData pd;
    pd.mode_amplitude = 0.5;
    const Solution s = solve_cylinder(make_profile_instance(g, pd));
    const auto rep = verify_epiperimetric(s.u, BasePoint{}, -0.5, 6);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    EXPECT_GE(rep.number("evaluated_rungs"), 2.0);
    const auto V = column(rep, "ladder", "V");
    const auto fl = column(rep, "ladder", "floor");
    const auto xi = column(rep, "ladder", "xi");
    int checked = 0;
    for (std::size_t j = 0; j + 1 < xi.size(); ++j)
        if (std::isfinite(xi[j]) && V[j + 1] > 100.0 * fl[j + 1]) {
            EXPECT_NEAR(xi[j], 1.0 - std::exp(-2.0), 0.01) << "rung " << j;
            ++checked;
        }
    EXPECT_GE(checked, 1);
}

TEST(Harness, EpiperimetricSkipsNegativeRungs) {
    const AnalyticField u = constant_field(calibration_grid(), 1.0);
    const auto rep = verify_epiperimetric(u, BasePoint{}, -0.2, 4);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    EXPECT_EQ(rep.number("negative_rungs"), 4.0);
    EXPECT_EQ(rep.number("evaluated_rungs"), 0.0);
}

TEST(Harness, RotationOffTheFreeBoundaryIsInconclusive) {
    const AnalyticField zero = constant_field(calibration_grid(), 0.0);
    const auto rep = verify_rotation(zero, BasePoint{}, RotationOptions{}, HarnessOptions{{}, 1.0, "zero"});
    EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
}

TEST(Harness, BlowupPipelineOnTranslatedProfile) {
    const GridSpec g = calibration_grid();
    const Vec shift{0.1, 0.0, 0.0};
    const Vec e{-1.0, 0.0, 0.0};
    const AnalyticField u = profile_field(g, e, 2.0, shift);
    FreeBoundaryPoint reg;
    reg.z.x = shift;
    reg.cls = PointClass::Regular;
    reg.radius = 0.05;
    FreeBoundaryPoint other = reg;
    other.cls = PointClass::NonRegular;
    const auto rep = verify_blowup_pipeline(u, {reg, other});
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    EXPECT_EQ(rep.number("regular_points"), 1.0);
    const HomogeneousProfile prof = fit_profile(homogeneous_view(u, reg.z, 0.05, 1.5));
    EXPECT_NEAR(prof.e[0], -1.0, 1e-2);
    EXPECT_NEAR(prof.c, 2.0, 1e-2);
}

TEST(Harness, WeightInequalitySuite) {
    const auto rep = verify_weight_inequalities(1000, 7);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    EXPECT_TRUE(rep.find("violations")->rows.empty());
}

TEST(Harness, ReplacementOfASolutionCoincides) {
    GridSpec g;
    g.n = 2;
    g.L = 1.0;
    g.M = 65;
    g.K = 64;
    const Solution s = solve_cylinder(make_profile_instance(g));
    ReplacementOptions ro;
    ro.radii = {0.2, 0.4};
    const auto rep = verify_replacement_estimates(s.u, BasePoint{}, ro);
    EXPECT_EQ(rep.verdict, Verdict::Pass);
    for (double d : column(rep, "replacement", "distance")) EXPECT_LT(d, 1e-10);
}

TEST(Harness, JobsKeepOrderAndTrapErrors) {
    std::vector<Job> jobs;
    for (int i = 0; i < 6; ++i)
        jobs.push_back({"job" + std::to_string(i), [i] {
                            if (i == 3) throw InvalidArgument("boom");
                            ExperimentReport r;
                            r.name = "job" + std::to_string(i);
                            r.verdict = Verdict::Pass;
                            return r;
                        }});
    const auto out = run_jobs(jobs, 3);
    ASSERT_EQ(out.size(), 6u);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(out[i].name, "job" + std::to_string(i));
    EXPECT_EQ(out[3].verdict, Verdict::Fail);
    EXPECT_NE(out[3].notes.front().find("boom"), std::string::npos);
}

TEST(Harness, ReportFilesAreStable) {
    ExperimentReport r;
    r.name = "demo";
    r.instance = "exact32(n=2, bump=0)";
    r.verdict = Verdict::Pass;
    r.wall_time = 1.25;
    r.param("x", 0.1);
    Table& t = r.add_table("tab", {"a", "b"});
    t.add({1.0 / 3.0, std::numeric_limits<double>::quiet_NaN()});
    const auto dir = std::filesystem::temp_directory_path() / "parafree_harness_test";
    std::filesystem::remove_all(dir);
    write_report(dir, r);
    write_summary(dir, {r});
    const std::string csv = slurp(dir / "demo.tab.csv");
    EXPECT_EQ(csv, "a,b\n0.3333333333333333,nan\n");
    const std::string json = slurp(dir / "demo.json");
    EXPECT_EQ(json.find("1.25"), std::string::npos);
    write_report(dir, r);
    EXPECT_EQ(slurp(dir / "demo.json"), json);
    EXPECT_NE(slurp(dir / "summary.csv").find("\"exact32(n=2, bump=0)\""), std::string::npos);
    EXPECT_NEAR(std::strtod(format_number(0.1).c_str(), nullptr), 0.1, 0.0);
    std::filesystem::remove_all(dir);
}

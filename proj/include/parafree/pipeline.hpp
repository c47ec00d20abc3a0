#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "free_boundary.hpp"
#include "harness.hpp"
#include "io.hpp"

namespace parafree {

/// Exit codes of the command-line driver.
enum ExitCode : int { kOk = 0, kFailPresent = 1, kUsage = 2, kRuntime = 3 };

/// Output layout under the run directory.
struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path solution() const { return root / "solution"; }
    std::filesystem::path reports() const { return root / "reports"; }
    std::filesystem::path frequency_curve() const { return root / "frequency_curve.csv"; }
    std::filesystem::path fb_points() const { return root / "fb_points.csv"; }
    std::filesystem::path regular_graph() const { return root / "regular_graph.csv"; }
};

namespace detail {

inline nlohmann::ordered_json solve_summary(const std::filesystem::path& solution_dir) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    const auto side = solution_dir / "solution.json";
    if (!std::filesystem::exists(side)) return out;
    const auto j = nlohmann::ordered_json::parse(read_file(side));
    for (const char* key : {"descriptor", "max_residual", "max_iterations", "pos_tol", "sha256"})
        if (j.contains(key)) out[key] = j[key];
    return out;
}

inline void refresh_manifest(const RunPaths& paths, const RunConfig& c) {
    nlohmann::ordered_json extra;
    extra["solve"] = solve_summary(paths.solution());
    extra["solve"]["tol_psor"] = c.tol_psor;
    extra["seed"] = c.seed;
    write_manifest(paths.root, extra);
}

}  // namespace detail

/// Solves the configured instance and writes the dump and the manifest.
inline Solution cmd_solve(const RunConfig& c, const RunPaths& paths) {
    const Solution s = solve_cylinder(make_instance(c));
    write_dump(paths.solution(), s);
    detail::refresh_manifest(paths, c);
    return s;
}

/// Configured base point, else the free-boundary point of the last slice
/// closest to the axis, else the origin at the final time.
inline BasePoint choose_base_point(const ScalarField& u, const RunConfig& c, double pos_tol) {
    if (c.base) return *c.base;
    const GridSpec& g = u.grid();
    BasePoint z;
    z.t = g.t_end;
    const auto pts = extract_free_boundary(u, pos_tol, {g.K});
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const double d = norm2(p.z.x, g.n);
        if (d < best) {
            best = d;
            z = p.z;
        }
    }
    return z;
}

inline std::vector<std::string> frequency_columns(int n) {
    std::vector<std::string> cols;
    for (int d = 1; d <= n; ++d) cols.push_back("z0_x" + std::to_string(d));
    for (const char* c : {"z0_t", "r", "N0", "Ndelta", "Ntilde", "Nhat", "Poon", "W0", "V0", "W_full_practical",
                          "W_full_exact", "m", "quad_err"})
        cols.emplace_back(c);
    return cols;
}

inline Table frequency_table(const FrequencyCurve& curve, int n) {
    Table t{"frequency_curve", frequency_columns(n), {}};
    for (const auto& row : curve.rows) {
        std::vector<double> v;
        for (int d = 0; d < n; ++d) v.push_back(curve.z0.x[d]);
        for (double x : {curve.z0.t, row.r, row.N0, row.Ndelta, row.Ntilde, row.Nhat, row.poon, row.W0, row.V0,
                         row.W_practical, row.W_exact, row.m, row.quad_err})
            v.push_back(x);
        t.add(v);
    }
    return t;
}

/// frequency_curve.csv at the base point; empty radii give a header-only file.
inline FrequencyCurve cmd_functionals(const LoadedSolution& s, const RunConfig& c, const RunPaths& paths) {
    const GridSpec& g = s.u.grid();
    const BasePoint z = choose_base_point(s.u, c, s.pos_tol);
    const std::vector<double> radii = config_radii(c, g);
    FrequencyCurve curve;
    curve.z0 = z;
    if (!radii.empty()) curve = frequency_curve(s.u, z, radii, c.params);
    write_text(paths.frequency_curve(), table_csv(frequency_table(curve, g.n)));
    detail::refresh_manifest(paths, c);
    return curve;
}

/// Time slices scanned by classify: the last slice and earlier ones `stride` apart.
inline std::vector<int> classify_slices(const RunConfig& c, const GridSpec& g, double r_max) {
    const int stride = c.classify_stride > 0 ? c.classify_stride : std::max(1, g.K / 8);
    std::vector<int> out;
    for (int k = g.K; k >= 0 && static_cast<int>(out.size()) < c.classify_slices; k -= stride)
        if (g.time(k) - r_max * r_max >= g.t_start - 1e-12) out.push_back(k);
    return out;
}

inline std::string points_csv(const std::vector<FreeBoundaryPoint>& pts, int n) {
    std::string s;
    for (int d = 1; d <= n; ++d) s += "x" + std::to_string(d) + ",";
    s += "t,kappa_hat,confidence,class,c";
    for (int d = 1; d <= n; ++d) s += ",e" + std::to_string(d);
    s += ",fit_residual\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : pts) {
        for (int d = 0; d < n; ++d) s += format_number(p.z.x[d]) + ",";
        s += format_number(p.z.t) + "," + format_number(p.kappa_hat) + "," + format_number(p.confidence) + "," +
             to_string(p.cls) + "," + format_number(p.profile ? p.profile->c : nan);
        for (int d = 0; d < n; ++d) s += "," + format_number(p.profile ? p.profile->e[d] : nan);
        s += "," + format_number(p.profile ? p.profile->residual : nan) + "\n";
    }
    return s;
}

/// Extracts and classifies free-boundary points; fb_points.csv, plus
/// regular_graph.csv when at least eight points are Regular.
inline std::vector<FreeBoundaryPoint> cmd_classify(const LoadedSolution& s, const RunConfig& c,
                                                   const RunPaths& paths) {
    const GridSpec& g = s.u.grid();
    ClassifyOptions co;
    co.params = c.params;
    co.radii = config_radii(c, g);
    const double r_max = co.radii.empty() ? 0.4 : *std::max_element(co.radii.begin(), co.radii.end());
    const auto slices = classify_slices(c, g, r_max);
    std::vector<FreeBoundaryPoint> pts = slices.empty() ? std::vector<FreeBoundaryPoint>{}
                                                        : extract_free_boundary(s.u, s.pos_tol, slices);
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < pts.size(); ++i)
        jobs.push_back({"point" + std::to_string(i), [&, i] {
                            pts[i] = classify(s.u, pts[i], co);
                            return ExperimentReport{};
                        }});
    run_jobs(jobs, c.jobs);
    write_text(paths.fb_points(), points_csv(pts, g.n));
    std::size_t regular = 0;
    for (const auto& p : pts) regular += p.cls == PointClass::Regular && p.profile;
    std::filesystem::remove(paths.regular_graph());
    if (regular >= 8) {
        const RegularGraph rg = fit_regular_graph(pts, g.n);
        Table t{"regular_graph", {"s", "t", "g", "grad"}, {}};
        for (const auto& row : rg.rows) t.add({row.s, row.t, row.g, row.grad});
        write_text(paths.regular_graph(), table_csv(t));
    }
    detail::refresh_manifest(paths, c);
    return pts;
}

/// Gauge exponent of the configured instance (0.5 for exact solutions).
inline double config_gauge_exponent(const RunConfig& c) {
    if (c.instance.kind == "varcoef") return c.instance.alpha;
    if (c.instance.kind == "drift") return 1.0 - c.grid.n / c.instance.p;
    return 0.5;
}

struct VerifyResult {
    std::vector<ExperimentReport> reports;
    bool gate_passed = false;
    int exit_code = kOk;
};

/**
 * Calibration suite first; the solved-field experiments run only when every
 * calibration report passes. Reports, summary.csv and the manifest go under
 * the run directory.
 */
inline VerifyResult cmd_verify(const LoadedSolution& s, const RunConfig& c, const RunPaths& paths,
                               std::ostream* log = nullptr) {
    VerifyResult res;
    const GridSpec& g = s.u.grid();
    std::filesystem::remove_all(paths.reports());
    res.reports = calibration_suite(g.n);
    res.gate_passed = all_pass(res.reports);
    if (log) *log << "calibration gate: " << (res.gate_passed ? "passed" : "FAILED") << "\n";
    if (res.gate_passed) {
        const ScalarField& u = s.u;
        const BasePoint z = choose_base_point(u, c, s.pos_tol);
        const std::vector<double> radii = config_radii(c, g);
        HarnessOptions ho;
        ho.instance = s.descriptor;
        ho.fnorm = f_norm(u, z, ho.quad).total();
        FreeBoundaryPoint point;
        point.z = z;
        ClassifyOptions co;
        co.params = c.params;
        co.radii = radii;
        co.fnorm = ho.fnorm;
        point = classify(u, point, co);
        if (log)
            *log << "base point x1=" << format_number(z.x[0]) << " t=" << format_number(z.t) << ": "
                 << to_string(point.cls) << ", kappa_hat " << format_number(point.kappa_hat) << "\n";

        std::vector<Job> jobs;
        for (const auto& name : c.experiments) {
            if (name == "weiss") {
                const ConstantsMode other =
                    c.mode == ConstantsMode::Practical ? ConstantsMode::Exact : ConstantsMode::Practical;
                for (ConstantsMode m : {c.mode, other})
                    jobs.push_back({std::string("weiss_monotonicity_") + to_string(m), [&, m] {
                                        return verify_weiss_monotonicity(u, z, c.params, radii, m, ho);
                                    }});
            } else if (name == "almgren") {
                jobs.push_back({"almgren_monotonicity", [&] { return verify_almgren(u, z, c.params, radii, ho); }});
            } else if (name == "growth") {
                jobs.push_back({"optimal_growth", [&] {
                                    std::vector<double> gr;
                                    for (double r : radii)
                                        if (r >= 8.0 * g.h() * (1.0 - 1e-12)) gr.push_back(r);
                                    GrowthExpectation ge;
                                    ge.cls = point.cls;
                                    ge.kappa_hat = point.kappa_hat;
                                    return verify_growth(u, z, gr, ge, ho);
                                }});
            } else if (name == "epiperimetric") {
                jobs.push_back({"epiperimetric",
                                [&] { return verify_epiperimetric(u, z, c.epi_t_first, c.epi_rungs, ho); }});
            } else if (name == "rotation") {
                jobs.push_back({"rotation", [&] { return verify_rotation(u, z, RotationOptions{}, ho); }});
            } else if (name == "replacement") {
                jobs.push_back({"replacement_estimates", [&] {
                                    ReplacementOptions ro;
                                    ro.alpha = config_gauge_exponent(c);
                                    ro.tol_psor = c.tol_psor;
                                    return verify_replacement_estimates(u, z, ro, ho);
                                }});
            } else if (name == "blowup") {
                jobs.push_back({"blowup_pipeline", [&] { return verify_blowup_pipeline(u, {point}, BlowupOptions{}, ho); }});
            } else {
                throw ConfigError("unknown experiment '" + name + "'");
            }
        }
        for (auto& r : run_jobs(jobs, c.jobs)) {
            if (r.instance.empty()) r.instance = s.descriptor;
            res.reports.push_back(std::move(r));
        }
    }
    for (const auto& r : res.reports) write_report(paths.reports(), r);
    write_summary(paths.reports(), res.reports);
    detail::refresh_manifest(paths, c);
    const bool fail = !res.gate_passed || std::any_of(res.reports.begin(), res.reports.end(), [](const auto& r) {
                          return r.verdict == Verdict::Fail;
                      });
    res.exit_code = fail ? kFailPresent : kOk;
    return res;
}

/// Prints summary.csv as an aligned table; returns kFailPresent if any Fail.
inline int cmd_report(const RunPaths& paths, std::ostream& os) {
    const auto file = paths.reports() / "summary.csv";
    if (!std::filesystem::exists(file)) throw InvalidArgument("no summary at " + file.string() + "; run verify first");
    std::istringstream in(read_file(file));
    std::string line;
    std::getline(in, line);
    int fails = 0, total = 0;
    char buf[512];
    while (std::getline(in, line)) {
        // experiment,"instance",verdict,tolerance
        const auto q1 = line.find(",\"");
        const auto q2 = line.rfind("\",");
        if (q1 == std::string::npos || q2 == std::string::npos || q2 < q1) continue;
        const std::string name = line.substr(0, q1);
        const std::string instance = line.substr(q1 + 2, q2 - q1 - 2);
        const std::string rest = line.substr(q2 + 2);
        const std::string verdict = rest.substr(0, rest.find(','));
        std::snprintf(buf, sizeof buf, "%-44s %-13s %s\n", name.c_str(), verdict.c_str(), instance.c_str());
        os << buf;
        ++total;
        fails += verdict == "Fail";
    }
    os << total << " experiments, " << fails << " failed\n";
    return fails ? kFailPresent : kOk;
}

}  // namespace parafree

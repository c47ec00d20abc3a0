// Command-line driver: solve, functionals, classify, verify, report.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "parafree/pipeline.hpp"

using namespace parafree;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string solution;
    std::string mode;
    std::string radii;
    int jobs = 0;
    long long seed = -1;
};

RunConfig resolve(const Flags& f, bool need_config) {
    RunConfig c;
    if (!f.config.empty()) c = load_config(f.config);
    else if (need_config) throw ConfigError("--config is required");
    if (!f.out.empty()) c.out = f.out;
    if (const char* env = std::getenv("PARAFREE_OUT"); env && *env) c.out = env;
    if (f.jobs > 0) c.jobs = f.jobs;
    if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
    if (!f.mode.empty()) {
        if (f.mode == "practical") c.mode = ConstantsMode::Practical;
        else if (f.mode == "exact") c.mode = ConstantsMode::Exact;
        else throw ConfigError("--mode must be practical or exact");
    }
    if (!f.radii.empty()) {
        c.radii.list.clear();
        std::string s = f.radii;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) {
            char* end = nullptr;
            const double r = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0' || !(r > 0.0)) throw ConfigError("bad radius '" + tok + "' in --radii");
            c.radii.list.push_back(r);
        }
    }
    return c;
}

LoadedSolution load_solution(const Flags& f, const RunPaths& paths) {
    const std::filesystem::path dir = f.solution.empty() ? paths.solution() : std::filesystem::path(f.solution);
    if (!std::filesystem::exists(dir / "solution.json"))
        throw ConfigError("no solution dump in " + dir.string() + "; run solve first");
    return read_dump(dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parabolic thin-obstacle lab"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* sub, bool solution) {
        sub->add_option("--config", f.config, "run configuration (INI)");
        sub->add_option("--out", f.out, "run directory (PARAFREE_OUT overrides)");
        sub->add_option("--jobs", f.jobs, "parallel jobs");
        sub->add_option("--mode", f.mode, "primary Weiss constants: practical or exact");
        sub->add_option("--radii", f.radii, "comma-separated radii");
        sub->add_option("--seed", f.seed, "instance seed");
        if (solution) sub->add_option("--solution", f.solution, "solution dump directory (default <out>/solution)");
    };
    auto* solve = app.add_subcommand("solve", "solve the configured instance and dump the field");
    auto* functionals = app.add_subcommand("functionals", "frequency curve at the base point");
    auto* classify_cmd = app.add_subcommand("classify", "extract and classify free-boundary points");
    auto* verify = app.add_subcommand("verify", "calibration gate, then the configured experiments");
    auto* report = app.add_subcommand("report", "print the verdict summary of a run");
    common(solve, false);
    common(functionals, true);
    common(classify_cmd, true);
    common(verify, true);
    common(report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const RunConfig c = resolve(f, !report->parsed());
        const RunPaths paths{c.out};
        std::filesystem::create_directories(paths.root);
        if (solve->parsed()) {
            const Solution s = cmd_solve(c, paths);
            std::cout << s.descriptor << ": max residual " << format_number(s.max_residual()) << ", max iterations "
                      << s.max_iterations() << "\nwrote " << paths.solution().string() << "\n";
            return kOk;
        }
        if (report->parsed()) return cmd_report(paths, std::cout);
        const LoadedSolution s = load_solution(f, paths);
        if (functionals->parsed()) {
            const auto curve = cmd_functionals(s, c, paths);
            std::cout << curve.rows.size() << " radii; wrote " << paths.frequency_curve().string() << "\n";
            return kOk;
        }
        if (classify_cmd->parsed()) {
            const auto pts = cmd_classify(s, c, paths);
            int regular = 0;
            for (const auto& p : pts) regular += p.cls == PointClass::Regular;
            std::cout << pts.size() << " free-boundary points, " << regular << " Regular; wrote "
                      << paths.fb_points().string() << "\n";
            return kOk;
        }
        const VerifyResult res = cmd_verify(s, c, paths, &std::cout);
        cmd_report(paths, std::cout);
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "parafree: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "parafree: " << e.what() << "\n";
        return kRuntime;
    }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "errors.hpp"
#include "field.hpp"
#include "functionals.hpp"
#include "harness.hpp"
#include "signorini.hpp"

namespace parafree {

struct InstanceSpec {
    /// exact32 | heat-positive | varcoef | drift | custom-table
    std::string kind = "exact32";
    /// Dump directory of a custom-table instance.
    std::string table;
    double alpha = 0.5;
    double amplitude = 0.05;
    /// Drift integrability exponent and magnitude.
    double p = 4.0;
    double magnitude = 0.5;
    double direction_angle = 0.0;
    ProfileData profile;
};

struct RadiiSpec {
    double r_max = 0.4;
    /// 0: the grid's radius floor.
    double r_min = 0.0;
    double ratio = 1.0 / std::sqrt(2.0);
    /// When non-empty, used as is.
    std::vector<double> list;
};

/// Everything one run needs; see README for the file format.
struct RunConfig {
    InstanceSpec instance;
    GridSpec grid{2, 2.0, 161, 400, -1.0, 0.0};
    WeissParams params;
    RadiiSpec radii;
    std::vector<std::string> experiments{"weiss", "almgren", "growth", "epiperimetric",
                                         "rotation", "replacement", "blowup"};
    std::string out = "parafree_out";
    int jobs = 1;
    std::uint64_t seed = 42;
    ConstantsMode mode = ConstantsMode::Practical;
    double omega = 1.5;
    double tol_psor = 1e-10;
    /// Number of time slices (ending at the last one) scanned by classify.
    int classify_slices = 4;
    /// Time step between scanned slices, in grid steps (0: K/8).
    int classify_stride = 0;
    std::optional<BasePoint> base;
    double epi_t_first = -0.1;
    int epi_rungs = 6;
};

inline const std::set<std::string>& known_experiments() {
    static const std::set<std::string> names{"weiss",    "almgren",     "growth", "epiperimetric",
                                             "rotation", "replacement", "blowup"};
    return names;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Line of `key` inside `[section]` (top level when section is empty), 0 if absent.
inline int key_line(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream in(text);
    std::string line, current;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[') {
            current = trim(t.substr(1, t.find(']') - 1));
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) return no;
    }
    return 0;
}

class ConfigReader {
public:
    ConfigReader(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {
        std::istringstream in(text_);
        try {
            boost::property_tree::ini_parser::read_ini(in, tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(source_ + ":" + std::to_string(e.line()) + ": " + e.message());
        }
    }

    /// Rejects sections and keys outside the schema.
    void check_schema(const std::map<std::string, std::set<std::string>>& schema) const {
        for (const auto& [sec, sub] : tree_) {
            const auto it = schema.find(sec);
            if (sub.empty()) {
                throw ConfigError(where("", sec) + "key outside a section: '" + sec + "'");
            }
            if (it == schema.end()) throw ConfigError(section_where(sec) + "unknown section [" + sec + "]");
            for (const auto& [key, val] : sub) {
                if (!it->second.count(key))
                    throw ConfigError(where(sec, key) + "unknown key '" + key + "' in [" + sec + "]");
            }
        }
    }

    std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
        const auto s = tree_.get_child_optional(boost::property_tree::ptree::path_type(sec, '\x1f'));
        if (!s) return std::nullopt;
        const auto v = s->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\x1f'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    void number(const std::string& sec, const std::string& key, double& out) const {
        if (const auto v = raw(sec, key)) out = parse_double(sec, key, *v);
    }
    void integer(const std::string& sec, const std::string& key, int& out) const {
        if (const auto v = raw(sec, key)) {
            const double d = parse_double(sec, key, *v);
            if (d != std::floor(d) || std::abs(d) > 1e9)
                throw ConfigError(where(sec, key) + "'" + key + "' must be an integer");
            out = static_cast<int>(d);
        }
    }
    void text(const std::string& sec, const std::string& key, std::string& out) const {
        if (const auto v = raw(sec, key)) out = *v;
    }
    std::vector<double> list(const std::string& sec, const std::string& key, const std::string& v) const {
        std::vector<double> out;
        std::string s = v;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) out.push_back(parse_double(sec, key, tok));
        return out;
    }

    std::string where(const std::string& sec, const std::string& key) const {
        return source_ + ":" + std::to_string(key_line(text_, sec, key)) + ": ";
    }

private:
    std::string section_where(const std::string& sec) const {
        std::istringstream in(text_);
        std::string line;
        int no = 0;
        while (std::getline(in, line)) {
            ++no;
            const std::string t = trim(line);
            if (!t.empty() && t.front() == '[' && trim(t.substr(1, t.find(']') - 1)) == sec)
                return source_ + ":" + std::to_string(no) + ": ";
        }
        return source_ + ":0: ";
    }

    double parse_double(const std::string& sec, const std::string& key, const std::string& v) const {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || trim(v.substr(used)) != "" || !std::isfinite(d))
            throw ConfigError(where(sec, key) + "'" + key + "' expects a number, got '" + v + "'");
        return d;
    }

    std::string text_;
    std::string source_;
    boost::property_tree::ptree tree_;
};

}  // namespace detail

/**
 * INI-style config: [run], [grid], [instance], [weiss], [radii], [solver],
 * [classify], [base], [epiperimetric]. Unknown sections and keys are errors;
 * every error message starts with source:line.
 */
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    const detail::ConfigReader rd(text, source);
    rd.check_schema({
        {"run", {"experiments", "out", "jobs", "seed", "mode"}},
        {"grid", {"n", "L", "M", "K", "t_start", "t_end"}},
        {"instance",
         {"kind", "alpha", "amplitude", "p", "magnitude", "direction_angle", "bump_amplitude", "bump_center",
          "bump_radius", "mode_amplitude", "table"}},
        {"weiss", {"kappa", "kappa0", "alpha", "eps", "delta", "rho", "a_eff", "b_eff"}},
        {"radii", {"max", "min", "ratio", "list"}},
        {"solver", {"omega", "tol"}},
        {"classify", {"slices", "stride"}},
        {"base", {"x", "t"}},
        {"epiperimetric", {"t_first", "rungs"}},
    });
    RunConfig c;
    if (const auto v = rd.raw("run", "experiments")) {
        c.experiments.clear();
        std::string s = *v;
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream in(s);
        std::string name;
        while (in >> name) {
            if (!known_experiments().count(name))
                throw ConfigError(rd.where("run", "experiments") + "unknown experiment '" + name + "'");
            c.experiments.push_back(name);
        }
    }
    rd.text("run", "out", c.out);
    rd.integer("run", "jobs", c.jobs);
    int seed = static_cast<int>(c.seed);
    rd.integer("run", "seed", seed);
    if (seed < 0) throw ConfigError(rd.where("run", "seed") + "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
    if (const auto v = rd.raw("run", "mode")) {
        if (*v == "practical") c.mode = ConstantsMode::Practical;
        else if (*v == "exact") c.mode = ConstantsMode::Exact;
        else throw ConfigError(rd.where("run", "mode") + "mode must be practical or exact");
    }

    rd.integer("grid", "n", c.grid.n);
    rd.number("grid", "L", c.grid.L);
    rd.integer("grid", "M", c.grid.M);
    rd.integer("grid", "K", c.grid.K);
    rd.number("grid", "t_start", c.grid.t_start);
    rd.number("grid", "t_end", c.grid.t_end);
    try {
        c.grid.validate();
    } catch (const InvalidGrid& e) {
        throw ConfigError(rd.where("grid", "M") + e.what());
    }

    rd.text("instance", "kind", c.instance.kind);
    if (c.instance.kind != "exact32" && c.instance.kind != "heat-positive" && c.instance.kind != "varcoef" &&
        c.instance.kind != "drift" && c.instance.kind != "custom-table")
        throw ConfigError(rd.where("instance", "kind") + "unknown instance kind '" + c.instance.kind + "'");
    rd.text("instance", "table", c.instance.table);
    if (c.instance.kind == "custom-table" && c.instance.table.empty())
        throw ConfigError(rd.where("instance", "kind") + "custom-table needs a table key");
    rd.number("instance", "alpha", c.instance.alpha);
    rd.number("instance", "amplitude", c.instance.amplitude);
    rd.number("instance", "p", c.instance.p);
    rd.number("instance", "magnitude", c.instance.magnitude);
    rd.number("instance", "direction_angle", c.instance.direction_angle);
    rd.number("instance", "bump_amplitude", c.instance.profile.bump_amplitude);
    rd.number("instance", "bump_radius", c.instance.profile.bump_radius);
    rd.number("instance", "mode_amplitude", c.instance.profile.mode_amplitude);
    if (const auto v = rd.raw("instance", "bump_center")) {
        const auto xs = rd.list("instance", "bump_center", *v);
        if (xs.empty() || static_cast<int>(xs.size()) > 3)
            throw ConfigError(rd.where("instance", "bump_center") + "bump_center needs 1 to 3 coordinates");
        c.instance.profile.bump_center = {0.0, 0.0, 0.0};
        for (std::size_t d = 0; d < xs.size(); ++d) c.instance.profile.bump_center[d] = xs[d];
    }
    c.instance.profile.direction = unit_direction(c.grid.n, c.instance.direction_angle);

    rd.number("weiss", "kappa", c.params.kappa);
    rd.number("weiss", "kappa0", c.params.kappa0);
    rd.number("weiss", "alpha", c.params.alpha);
    rd.number("weiss", "eps", c.params.eps);
    rd.number("weiss", "delta", c.params.delta);
    rd.number("weiss", "rho", c.params.rho);
    rd.number("weiss", "a_eff", c.params.a_eff);
    rd.number("weiss", "b_eff", c.params.b_eff);
    try {
        c.params.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(rd.where("weiss", "kappa") + e.what());
    }

    rd.number("radii", "max", c.radii.r_max);
    rd.number("radii", "min", c.radii.r_min);
    rd.number("radii", "ratio", c.radii.ratio);
    if (const auto v = rd.raw("radii", "list")) c.radii.list = rd.list("radii", "list", *v);
    if (!(c.radii.ratio > 0.0 && c.radii.ratio < 1.0))
        throw ConfigError(rd.where("radii", "ratio") + "ratio must lie in (0,1)");

    rd.number("solver", "omega", c.omega);
    rd.number("solver", "tol", c.tol_psor);
    if (!(c.omega > 0.0 && c.omega < 2.0)) throw ConfigError(rd.where("solver", "omega") + "omega must lie in (0,2)");
    rd.integer("classify", "slices", c.classify_slices);
    rd.integer("classify", "stride", c.classify_stride);
    if (c.classify_slices < 1) throw ConfigError(rd.where("classify", "slices") + "slices must be positive");

    if (const auto v = rd.raw("base", "x")) {
        BasePoint b;
        const auto xs = rd.list("base", "x", *v);
        if (static_cast<int>(xs.size()) != c.grid.n)
            throw ConfigError(rd.where("base", "x") + "base point needs n coordinates");
        for (int d = 0; d < c.grid.n; ++d) b.x[d] = xs[d];
        rd.number("base", "t", b.t);
        c.base = b;
    }
    rd.number("epiperimetric", "t_first", c.epi_t_first);
    rd.integer("epiperimetric", "rungs", c.epi_rungs);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path.string() + ":0: cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

inline std::vector<double> config_radii(const RunConfig& c, const GridSpec& g) {
    if (!c.radii.list.empty()) {
        std::vector<double> r = c.radii.list;
        std::sort(r.begin(), r.end());
        return r;
    }
    const double r_min = c.radii.r_min > 0.0 ? c.radii.r_min : radius_floor(g, false);
    return radius_ladder(c.radii.r_max, r_min, c.radii.ratio);
}

inline std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw InvalidArgument("cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const std::filesystem::path& p) {
    const std::string s = read_file(p);
    return sha256_hex(s.data(), s.size());
}

namespace detail {

inline bool little_endian() {
    const std::uint16_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

inline nlohmann::ordered_json grid_json(const GridSpec& g) {
    return {{"n", g.n}, {"L", g.L}, {"M", g.M}, {"K", g.K}, {"t_start", g.t_start}, {"t_end", g.t_end}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    g.n = j.at("n").get<int>();
    g.L = j.at("L").get<double>();
    g.M = j.at("M").get<int>();
    g.K = j.at("K").get<int>();
    g.t_start = j.at("t_start").get<double>();
    g.t_end = j.at("t_end").get<double>();
    g.validate();
    return g;
}

}  // namespace detail

/**
 * Field dump: solution.bin holds the stored values as little-endian float64,
 * time slice by time slice; within a slice x_1 runs fastest and the normal
 * index j = 0..(M-1)/2 (x_n = j h) slowest. solution.json describes it.
 */
inline void write_dump(const std::filesystem::path& dir, const Solution& s) {
    std::filesystem::create_directories(dir);
    const auto& data = s.u.data();
    std::string bytes(data.size() * sizeof(double), '\0');
    if (detail::little_endian()) {
        std::memcpy(bytes.data(), data.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) {
            unsigned char b[8];
            std::memcpy(b, &data[i], 8);
            for (int k = 0; k < 8; ++k) bytes[8 * i + k] = static_cast<char>(b[7 - k]);
        }
    }
    write_text(dir / "solution.bin", bytes);
    const GridSpec& g = s.u.grid();
    nlohmann::ordered_json j;
    j["format"] = "float64-le";
    j["grid"] = detail::grid_json(g);
    j["h"] = g.h();
    j["tau"] = g.tau();
    j["even_symmetric"] = s.u.even();
    j["stored_normal_nodes"] = s.u.layout().normal_extent();
    j["values"] = data.size();
    j["order"] = "k, x_n (j = 0.. from the thin hyperplane), ..., x_1 fastest";
    j["descriptor"] = s.descriptor;
    j["pos_tol"] = s.pos_tol;
    j["max_residual"] = s.max_residual();
    j["max_iterations"] = s.max_iterations();
    j["sha256"] = sha256_hex(bytes.data(), bytes.size());
    write_text(dir / "solution.json", j.dump(2) + "\n");
}

struct LoadedSolution {
    ScalarField u;
    std::string descriptor;
    double pos_tol = 1e-9;
};

inline LoadedSolution read_dump(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "solution.json"));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad solution sidecar: ") + e.what());
    }
    if (j.value("format", "") != "float64-le") throw InvalidArgument("unsupported dump format");
    LoadedSolution out;
    const GridSpec g = detail::grid_from_json(j.at("grid"));
    out.u = ScalarField(g, j.at("even_symmetric").get<bool>());
    out.descriptor = j.value("descriptor", "");
    out.pos_tol = j.value("pos_tol", 1e-9);
    const std::string bytes = read_file(dir / "solution.bin");
    auto& data = out.u.data();
    if (bytes.size() != data.size() * sizeof(double)) throw InvalidArgument("dump size does not match its sidecar");
    if (sha256_hex(bytes.data(), bytes.size()) != j.value("sha256", ""))
        throw InvalidArgument("dump checksum mismatch");
    if (detail::little_endian()) {
        std::memcpy(data.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) {
            unsigned char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bytes[8 * i + 7 - k]);
            std::memcpy(&data[i], b, 8);
        }
    }
    return out;
}

inline SignoriniConfig make_instance(const RunConfig& c) {
    SignoriniConfig cfg;
    const auto& in = c.instance;
    if (in.kind == "exact32") cfg = make_profile_instance(c.grid, in.profile);
    else if (in.kind == "heat-positive") cfg = make_heat_positive_instance(c.grid);
    else if (in.kind == "varcoef")
        cfg = make_variable_coefficient_instance(c.grid, in.alpha, in.amplitude, c.seed, in.profile);
    else if (in.kind == "drift") cfg = make_drift_instance(c.grid, in.p, in.magnitude, c.seed, in.profile);
    else if (in.kind == "custom-table") cfg = make_table_instance(c.grid, read_dump(in.table).u);
    else throw ConfigError("unknown instance kind '" + in.kind + "'");
    cfg.omega = c.omega;
    cfg.tol_psor = c.tol_psor;
    return cfg;
}

/// manifest.json: every regular file in dir (except the manifest) with its sha256.
inline void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& extra = {}) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json" && e.path().filename() != "timings.txt")
            files.push_back(std::filesystem::relative(e.path(), dir));
    std::sort(files.begin(), files.end());
    nlohmann::ordered_json j = extra.is_null() ? nlohmann::ordered_json::object() : extra;
    nlohmann::ordered_json list = nlohmann::ordered_json::object();
    for (const auto& f : files) list[f.generic_string()] = sha256_file(dir / f);
    j["files"] = list;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace parafree

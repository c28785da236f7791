#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fbm_core.hpp"
#include "quadrature.hpp"
#include "silt_mc.hpp"
#include "verify.hpp"

namespace silt {

using json = nlohmann::ordered_json;

// Full description of one command-line run.
struct RunConfig {
    std::string command = "verify";
    // auto | subcritical | supercritical | critical | tightness
    std::string experiment = "auto";
    HurstConfig hurst{0.6, 3};
    MonteCarloConfig mc;
    QuadSpec quad;
    std::vector<double> horizons{0.5, 1.0};
    std::string out_dir = "out";
    unsigned threads = 0;

    int max_chaos_order = 25;

    double tightness_p = 2.5;
    double tightness_T1 = 0.1;
    std::vector<double> tightness_gaps{0.1, 0.2, 0.4, 0.8};

    bool hermite_enabled = true;
    double hermite_eps = 1e-5;
    int hermite_replicates = 4000;
    double hermite_T = 1.0;

    double path_T = 1.0;
    int path_steps = 4;
    int paths = 1;

    void validate() const {
        try {
            hurst.validate();
            quad.validate();
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what());
        }
        mc.validate();
        if (horizons.empty()) throw ConfigError("horizons is empty");
        for (std::size_t i = 0; i < horizons.size(); ++i)
            if (!(horizons[i] > 0.0) || (i > 0 && !(horizons[i] > horizons[i - 1])))
                throw ConfigError("horizons must be positive and strictly increasing");
        if (max_chaos_order < 1) throw ConfigError("max_chaos_order must be >= 1");
        if (!(path_T > 0.0) || path_steps < 1 || paths < 1) throw ConfigError("invalid simulate section");
        if (!(hermite_eps > 0.0) || hermite_replicates < 2 || !(hermite_T > 0.0))
            throw ConfigError("invalid hermite section");
    }
};

namespace detail {

inline std::string transform_name(Transform t) {
    switch (t) {
    case Transform::Rational: return "rational";
    case Transform::Tangent: return "tangent";
    case Transform::None: return "none";
    }
    return "rational";
}

inline Transform parse_transform(const std::string& s) {
    if (s == "rational") return Transform::Rational;
    if (s == "tangent") return Transform::Tangent;
    if (s == "none") return Transform::None;
    throw ConfigError("unknown transform '" + s + "'");
}

inline std::string backend_name(Backend b) {
    switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Cholesky: return "cholesky";
    case Backend::Circulant: return "circulant";
    }
    return "auto";
}

inline Backend parse_backend(const std::string& s) {
    if (s == "auto") return Backend::Auto;
    if (s == "cholesky") return Backend::Cholesky;
    if (s == "circulant") return Backend::Circulant;
    throw ConfigError("unknown backend '" + s + "'");
}

// Reads j[key] into out if present; rejects keys not listed in `known`.
template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

} // namespace detail

inline json to_json(const RunConfig& c, bool include_threads = true) {
    json j;
    j["command"] = c.command;
    j["experiment"] = c.experiment;
    j["H"] = c.hurst.H;
    j["d"] = c.hurst.d;
    j["horizons"] = c.horizons;
    j["out_dir"] = c.out_dir;
    if (include_threads) j["threads"] = c.threads;
    j["monte_carlo"] = {{"replicates", c.mc.replicates},
                        {"base_seed", c.mc.base_seed},
                        {"eps_list", c.mc.eps_list},
                        {"steps_per_unit", c.mc.steps_per_unit},
                        {"coupling", c.mc.coupling},
                        {"backend", detail::backend_name(c.mc.backend)}};
    json q = {{"rel_tol", c.quad.rel_tol},
              {"abs_tol", c.quad.abs_tol},
              {"max_evals", c.quad.max_evals},
              {"truncation_radius", nullptr},
              {"transform", detail::transform_name(c.quad.transform)}};
    if (std::isfinite(c.quad.truncation_radius)) q["truncation_radius"] = c.quad.truncation_radius;
    j["quadrature"] = q;
    j["constants"] = {{"max_chaos_order", c.max_chaos_order}};
    j["tightness"] = {{"p", c.tightness_p}, {"T1", c.tightness_T1}, {"gaps", c.tightness_gaps}};
    j["hermite"] = {{"enabled", c.hermite_enabled},
                    {"eps", c.hermite_eps},
                    {"replicates", c.hermite_replicates},
                    {"T", c.hermite_T}};
    j["simulate"] = {{"T", c.path_T}, {"steps", c.path_steps}, {"paths", c.paths}};
    return j;
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    try {
        detail::reject_unknown(j,
                               {"command", "experiment", "H", "d", "horizons", "out_dir", "threads", "monte_carlo",
                                "quadrature", "constants", "tightness", "hermite", "simulate"},
                               "config");
        detail::read_opt(j, "command", c.command);
        detail::read_opt(j, "experiment", c.experiment);
        detail::read_opt(j, "H", c.hurst.H);
        detail::read_opt(j, "d", c.hurst.d);
        detail::read_opt(j, "horizons", c.horizons);
        detail::read_opt(j, "out_dir", c.out_dir);
        detail::read_opt(j, "threads", c.threads);
        if (auto it = j.find("monte_carlo"); it != j.end()) {
            detail::reject_unknown(*it,
                                   {"replicates", "base_seed", "eps_list", "steps_per_unit", "coupling", "backend"},
                                   "monte_carlo");
            detail::read_opt(*it, "replicates", c.mc.replicates);
            detail::read_opt(*it, "base_seed", c.mc.base_seed);
            detail::read_opt(*it, "eps_list", c.mc.eps_list);
            detail::read_opt(*it, "steps_per_unit", c.mc.steps_per_unit);
            detail::read_opt(*it, "coupling", c.mc.coupling);
            if (it->contains("backend")) c.mc.backend = detail::parse_backend(it->at("backend").get<std::string>());
        }
        if (auto it = j.find("quadrature"); it != j.end()) {
            detail::reject_unknown(*it, {"rel_tol", "abs_tol", "max_evals", "truncation_radius", "transform"},
                                   "quadrature");
            detail::read_opt(*it, "rel_tol", c.quad.rel_tol);
            detail::read_opt(*it, "abs_tol", c.quad.abs_tol);
            detail::read_opt(*it, "max_evals", c.quad.max_evals);
            if (it->contains("truncation_radius")) {
                const json& r = it->at("truncation_radius");
                c.quad.truncation_radius = r.is_null() ? std::numeric_limits<double>::infinity() : r.get<double>();
            }
            if (it->contains("transform"))
                c.quad.transform = detail::parse_transform(it->at("transform").get<std::string>());
        }
        if (auto it = j.find("constants"); it != j.end()) {
            detail::reject_unknown(*it, {"max_chaos_order"}, "constants");
            detail::read_opt(*it, "max_chaos_order", c.max_chaos_order);
        }
        if (auto it = j.find("tightness"); it != j.end()) {
            detail::reject_unknown(*it, {"p", "T1", "gaps"}, "tightness");
            detail::read_opt(*it, "p", c.tightness_p);
            detail::read_opt(*it, "T1", c.tightness_T1);
            detail::read_opt(*it, "gaps", c.tightness_gaps);
        }
        if (auto it = j.find("hermite"); it != j.end()) {
            detail::reject_unknown(*it, {"enabled", "eps", "replicates", "T"}, "hermite");
            detail::read_opt(*it, "enabled", c.hermite_enabled);
            detail::read_opt(*it, "eps", c.hermite_eps);
            detail::read_opt(*it, "replicates", c.hermite_replicates);
            detail::read_opt(*it, "T", c.hermite_T);
        }
        if (auto it = j.find("simulate"); it != j.end()) {
            detail::reject_unknown(*it, {"T", "steps", "paths"}, "simulate");
            detail::read_opt(*it, "T", c.path_T);
            detail::read_opt(*it, "steps", c.path_steps);
            detail::read_opt(*it, "paths", c.paths);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.mc.threads = c.threads;
    c.quad.threads = c.threads == 0 ? 1u : c.threads;
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

inline void save_run_config(const RunConfig& c, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << to_json(c).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + file.string());
}

// ---------------------------------------------------------------------------
// CSV with a one-line JSON metadata header
// ---------------------------------------------------------------------------

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "'");
    return v;
}

struct CsvTable {
    json metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline void write_csv(const std::filesystem::path& file, const CsvTable& t) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << "# " << t.metadata.dump() << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

inline CsvTable read_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError(file.string() + ": missing metadata header");
    try {
        t.metadata = json::parse(line.substr(2));
    } catch (const json::parse_error& e) {
        throw IoError(file.string() + ": bad metadata header: " + e.what());
    }
    if (!std::getline(in, line)) throw IoError(file.string() + ": missing column header");
    t.columns = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (row.size() != t.columns.size()) throw IoError(file.string() + ": ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

// Path file: columns k, t, x1..xd; one row per grid node.
inline CsvTable path_table(const FbmPath& path, const json& metadata) {
    CsvTable t;
    t.metadata = metadata;
    t.metadata["H"] = path.config.H;
    t.metadata["d"] = path.config.d;
    t.metadata["T"] = path.grid.T;
    t.metadata["n"] = path.grid.n;
    t.columns = {"k", "t"};
    for (int j = 0; j < path.d(); ++j) t.columns.push_back("x" + std::to_string(j + 1));
    for (int k = 0; k <= path.grid.n; ++k) {
        std::vector<std::string> row{std::to_string(k), format_double(path.grid.t(k))};
        for (int j = 0; j < path.d(); ++j) row.push_back(format_double(path(k, j)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline FbmPath path_from_table(const CsvTable& t) {
    try {
        HurstConfig cfg{t.metadata.at("H").get<double>(), t.metadata.at("d").get<int>()};
        TimeGrid grid{t.metadata.at("T").get<double>(), t.metadata.at("n").get<int>()};
        if (static_cast<int>(t.rows.size()) != grid.n + 1 || static_cast<int>(t.columns.size()) != cfg.d + 2)
            throw IoError("path table shape does not match its metadata");
        FbmPath p;
        p.grid = grid;
        p.config = cfg;
        p.values.resize(static_cast<std::size_t>(grid.n + 1) * cfg.d);
        for (int k = 0; k <= grid.n; ++k)
            for (int j = 0; j < cfg.d; ++j) p(k, j) = parse_double(t.rows[k][2 + j]);
        return p;
    } catch (const json::exception& e) {
        throw IoError(std::string("path metadata: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Experiment reports
// ---------------------------------------------------------------------------

inline json to_json(const StatReport& r) {
    return {{"n", r.n},
            {"mean", r.mean},
            {"mean_se", r.mean_se},
            {"variance", r.variance},
            {"variance_se", r.variance_se},
            {"skewness", r.skewness},
            {"skewness_se", r.skewness_se},
            {"excess_kurtosis", r.excess_kurtosis},
            {"kurtosis_se", r.kurtosis_se},
            {"anderson_darling", r.ad_statistic},
            {"normality_p", r.normality_p},
            {"covariance", r.covariance},
            {"covariance_se", r.covariance_se}};
}

inline json to_json(const ExperimentResult& r) {
    json j;
    j["experiment"] = r.experiment;
    j["passed"] = r.passed();
    json cfg = json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;
    j["targets"] = json::array();
    for (const auto& t : r.targets)
        j["targets"].push_back(
            {{"name", t.name}, {"value", t.value}, {"error_estimate", t.error_estimate}, {"provenance", t.provenance}});
    j["checks"] = json::array();
    for (const auto& c : r.checks)
        j["checks"].push_back({{"id", c.id},
                               {"description", c.description},
                               {"observed", c.observed},
                               {"target", c.target},
                               {"tolerance", c.tolerance},
                               {"pass", c.pass},
                               {"gating", c.gating},
                               {"detail", c.detail}});
    j["per_eps"] = json::array();
    for (const auto& e : r.per_eps) {
        json x = {{"eps", e.eps}, {"horizons", e.horizons}, {"report", to_json(e.report)}};
        json extra = json::object();
        for (const auto& [k, v] : e.extra) extra[k] = v;
        x["diagnostics"] = extra;
        j["per_eps"].push_back(x);
    }
    j["notes"] = r.notes;
    return j;
}

} // namespace silt

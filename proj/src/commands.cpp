#include "silt/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "silt/constants.hpp"
#include "silt/silt_mc.hpp"
#include "silt/verify.hpp"

namespace silt {

namespace fs = std::filesystem;

namespace {

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

struct ConstantRow {
    std::string name;
    std::string status = "ok";
    double value = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();
    std::string provenance;
};

template <class Fn>
ConstantRow constant_row(std::string name, std::string provenance, bool applicable, Fn&& fn) {
    ConstantRow row{std::move(name), "not-applicable", std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN(), std::move(provenance)};
    if (!applicable) return row;
    try {
        const QuadResult r = fn();
        row.value = r.value;
        row.error = r.error_estimate;
        row.status = r.converged ? "ok" : "unconverged";
        if (!r.note.empty() && !r.converged) row.provenance += " (" + r.note + ")";
    } catch (const Error& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string csv_text(std::string s) {
    for (char& c : s)
        if (c == ',') c = ';';
    return s;
}

} // namespace

json output_metadata(const RunConfig& cfg) {
    json j = to_json(cfg, false);
    j.erase("out_dir");
    return j;
}

int cmd_constants(const RunConfig& cfg, std::ostream& log) {
    const Regime reg = classify_regime(cfg.hurst);
    const bool sub = reg == Regime::Subcritical;
    const bool super = reg == Regime::Supercritical;
    const bool crit = reg == Regime::Critical;
    std::vector<ConstantRow> rows;
    rows.push_back(constant_row("sigma^2", "cubature of F_1 over the octant, 3 regions", sub,
                                [&] { return sigma_squared(cfg.hurst, cfg.quad); }));
    for (int q = 1; q <= cfg.max_chaos_order; ++q)
        rows.push_back(constant_row("sigma_" + std::to_string(q) + "^2", "2 beta_q x cubature of G^(q)", sub,
                                    [&] { return sigma_q_squared(q, cfg.hurst, cfg.quad); }));
    rows.push_back(constant_row("Lambda", "Gauss-Kronrod on the mapped half-line", super,
                                [&] { return lambda_const(cfg.hurst, cfg.quad); }));
    rows.push_back(constant_row("c_H", "closed form H^2(2H-1)/(4H-3)", super, [&] {
        QuadResult r;
        r.value = c_H_const(cfg.hurst.H);
        r.converged = true;
        return r;
    }));
    rows.push_back(constant_row("rho", "prefactor x Gauss-Kronrod on the mapped half-line", crit,
                                [&] { return rho_const(cfg.hurst.d, cfg.quad); }));

    const fs::path dir = prepare_out_dir(cfg);
    CsvTable t;
    t.metadata = output_metadata(cfg);
    t.metadata["regime"] = std::string(regime_name(reg));
    t.columns = {"name", "status", "value", "error_estimate", "provenance"};
    log << "regime " << regime_name(reg) << " (H=" << cfg.hurst.H << ", d=" << cfg.hurst.d << ")\n";
    for (const auto& r : rows) {
        t.rows.push_back({r.name, csv_text(r.status), cell(r.value), cell(r.error), csv_text(r.provenance)});
        log << std::left << std::setw(14) << r.name << std::setw(16) << r.status;
        if (!std::isnan(r.value)) log << std::setprecision(10) << r.value << " +- " << std::setprecision(2) << r.error;
        log << '\n';
    }
    write_csv(dir / "constants.csv", t);
    return static_cast<int>(ExitCode::ok);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    const fs::path dir = prepare_out_dir(cfg);
    const TimeGrid grid{cfg.path_T, cfg.path_steps};
    SamplerOptions opts;
    opts.backend = cfg.mc.backend;
    FbmSampler sampler(grid, cfg.hurst, opts);
    for (int i = 0; i < cfg.paths; ++i) {
        const std::uint64_t seed = replicate_seed(cfg.mc.base_seed, static_cast<std::uint64_t>(i));
        const FbmPath path = sampler.sample(seed);
        json meta = output_metadata(cfg);
        meta["path"] = i;
        meta["seed"] = seed;
        char name[32];
        std::snprintf(name, sizeof name, "path_%04d.csv", i);
        write_csv(dir / name, path_table(path, meta));
    }
    log << "wrote " << cfg.paths << " path file(s) with " << grid.n + 1 << " rows to " << dir.string() << '\n';
    return static_cast<int>(ExitCode::ok);
}

int cmd_estimate(const RunConfig& cfg, std::ostream& log) {
    const fs::path dir = prepare_out_dir(cfg);
    const SiltSample S = run_silt(cfg.hurst, cfg.mc, cfg.horizons);
    bool rescalable = true;
    try {
        (void)rescale_factor(cfg.mc.eps_list.front(), cfg.hurst);
    } catch (const Error&) {
        rescalable = false;
    }
    CsvTable t;
    t.metadata = output_metadata(cfg);
    t.metadata["grid_n"] = S.grid.n;
    t.metadata["notes"] = S.notes;
    t.columns = {"replicate", "eps", "T", "I"};
    if (rescalable) t.columns.push_back("rescaled");
    for (std::size_t e = 0; e < S.eps_list.size(); ++e)
        for (std::size_t h = 0; h < S.T_list.size(); ++h) {
            std::vector<double> resc;
            if (rescalable) resc = rescale(S.values[e][h], S.eps_list[e], cfg.hurst, S.T_list[h]);
            for (std::size_t r = 0; r < S.values[e][h].size(); ++r) {
                std::vector<std::string> row{std::to_string(r), format_double(S.eps_list[e]),
                                             format_double(S.T_list[h]), format_double(S.values[e][h][r])};
                if (rescalable) row.push_back(format_double(resc[r]));
                t.rows.push_back(std::move(row));
            }
        }
    write_csv(dir / "samples.csv", t);
    for (const auto& n : S.notes) log << "note: " << n << '\n';
    log << "wrote " << t.rows.size() << " rows to " << (dir / "samples.csv").string() << '\n';
    return static_cast<int>(ExitCode::ok);
}

ExperimentResult run_experiment(const RunConfig& cfg) {
    std::string kind = cfg.experiment;
    if (kind == "auto") {
        switch (classify_regime(cfg.hurst)) {
        case Regime::Subcritical: kind = "subcritical"; break;
        case Regime::Supercritical: kind = "supercritical"; break;
        case Regime::Critical: kind = "critical"; break;
        default:
            throw RegimeError("no experiment for regime " + std::string(regime_name(classify_regime(cfg.hurst))));
        }
    }
    if (kind == "subcritical") return run_subcritical(cfg.hurst, cfg.mc, cfg.horizons, cfg.quad);
    if (kind == "supercritical") {
        SupercriticalOptions o;
        o.run_hermite = cfg.hermite_enabled;
        o.hermite_eps = cfg.hermite_eps;
        o.hermite_replicates = cfg.hermite_replicates;
        o.hermite_T = cfg.hermite_T;
        return run_supercritical(cfg.hurst, cfg.mc, cfg.horizons, cfg.quad, o);
    }
    if (kind == "critical") return run_critical_log(cfg.hurst, cfg.mc, cfg.horizons, cfg.quad);
    if (kind == "tightness") {
        TightnessOptions o;
        o.gaps = cfg.tightness_gaps;
        return tightness_probe(cfg.hurst, cfg.mc, cfg.tightness_T1, cfg.tightness_p, cfg.quad, o);
    }
    throw ConfigError("unknown experiment '" + kind + "'");
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
    const fs::path dir = prepare_out_dir(cfg);
    const ExperimentResult res = run_experiment(cfg);

    json report = to_json(res);
    report["run_config"] = output_metadata(cfg);
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "report.json").string());
        out << report.dump(2) << '\n';
        if (!out) throw IoError("write failed: " + (dir / "report.json").string());
    }
    CsvTable t;
    t.metadata = output_metadata(cfg);
    t.metadata["experiment"] = res.experiment;
    t.columns = {"replicate", "eps", "T", "rescaled"};
    for (std::size_t e = 0; e < res.samples.size(); ++e) {
        const EpsReport& er = res.per_eps[e];
        for (std::size_t h = 0; h < res.samples[e].size(); ++h)
            for (std::size_t r = 0; r < res.samples[e][h].size(); ++r)
                t.rows.push_back({std::to_string(r), format_double(er.eps), format_double(er.horizons[h]),
                                  format_double(res.samples[e][h][r])});
    }
    write_csv(dir / "samples.csv", t);

    for (const auto& c : res.checks)
        log << (c.pass ? "PASS" : "FAIL") << (c.gating ? "  " : "* ") << c.id << ": " << c.description << " ("
            << c.detail << ")\n";
    for (const auto& n : res.notes) log << "note: " << n << '\n';
    log << res.experiment << ": " << (res.passed() ? "all criteria pass" : "criterion failure")
        << " (* = informational)\n";
    return static_cast<int>(res.passed() ? ExitCode::ok : ExitCode::criterion);
}

int cmd_report(const RunConfig& cfg, std::ostream& log) {
    const fs::path file = fs::path(cfg.out_dir) / "report.json";
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    json j;
    try {
        j = json::parse(in);
        log << "experiment " << j.at("experiment").get<std::string>() << '\n';
        for (const auto& t : j.at("targets"))
            log << "  target " << t.at("name").get<std::string>() << " = " << t.at("value").get<double>() << '\n';
        for (const auto& e : j.at("per_eps")) {
            const json& r = e.at("report");
            log << "  eps " << e.at("eps").get<double>() << ": n=" << r.at("n").get<std::size_t>()
                << " var=" << r.at("variance").get<double>() << " skew=" << r.at("skewness").get<double>()
                << " kurt=" << r.at("excess_kurtosis").get<double>() << " p=" << r.at("normality_p").get<double>()
                << '\n';
        }
        for (const auto& c : j.at("checks"))
            log << "  " << (c.at("pass").get<bool>() ? "PASS" : "FAIL") << ' ' << c.at("id").get<std::string>() << '\n';
        const bool passed = j.at("passed").get<bool>();
        log << (passed ? "passed" : "failed") << '\n';
        return static_cast<int>(passed ? ExitCode::ok : ExitCode::criterion);
    } catch (const json::exception& e) {
        throw IoError(file.string() + ": " + e.what());
    }
}

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& log) {
    if (command == "constants") return cmd_constants(cfg, log);
    if (command == "simulate") return cmd_simulate(cfg, log);
    if (command == "estimate") return cmd_estimate(cfg, log);
    if (command == "verify") return cmd_verify(cfg, log);
    if (command == "report") return cmd_report(cfg, log);
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace silt

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dataflow/csv.hpp"
#include "dataflow/errors.hpp"
#include "dataflow/front.hpp"
#include "dataflow/macro_solver.hpp"
#include "dataflow/micro.hpp"
#include "dataflow/qoi.hpp"

namespace dataflow {

enum class InitKind { ConstantFront, VFront, SmoothFront, SmoothBump, TwoFront, Table };
enum class AlphaKind { Constant, SineDip }; ///< SineDip: alpha * (1 - 0.4 sin^2(pi x))

struct ControlSpec {
    bool enabled = false;
    double alpha_bar = 0.5;
    double zeta_max = 1.01875;
    std::vector<double> qoi_z = {0.5, 0.75};
};

struct ScenarioConfig {
    std::string name;
    ModelParams params;
    double alpha = 0.1;
    AlphaKind alpha_kind = AlphaKind::Constant;
    int nx = 200, nz = 200;
    InitKind init = InitKind::ConstantFront;
    double zeta0 = 0.2;                               ///< constant-front height
    double z0 = 0.2;                                  ///< V-front tip height
    double r1 = 0.2, r2 = 0.4, zeta1 = 0.2, zeta2 = 0.4; ///< two-front data
    std::string table_path;
    std::optional<double> rho_b; ///< inflow density; defaults depend on the init kind
    double t_final = 2.0;
    std::vector<double> output_times; ///< empty = just t_final
    std::string outdir;
    bool micro_enabled = false;
    int i_max = 0, k_max = 0; ///< 0 = match nx, nz
    ControlSpec control;

    bool front_type() const {
        return init == InitKind::ConstantFront || init == InitKind::VFront ||
               init == InitKind::SmoothFront || init == InitKind::TwoFront;
    }

    double rho_b_value() const {
        if (rho_b) return *rho_b;
        if (init == InitKind::TwoFront) return r1;
        return front_type() ? params.r : 0.0;
    }

    double front_plateau() const { return init == InitKind::TwoFront ? r2 : params.r; }

    int micro_i() const { return i_max > 0 ? i_max : nx; }
    int micro_k() const { return k_max > 0 ? k_max : nz; }

    /// zeta0(x) of the configured front initial condition.
    double initial_front(double x) const {
        switch (init) {
        case InitKind::ConstantFront: return zeta0;
        case InitKind::VFront: return (1.0 - 2.0 * z0) * std::abs(x - 0.5) + z0;
        case InitKind::SmoothFront: return 0.25 * std::cos(2.0 * M_PI * x) + 0.3;
        default: throw ConfigError("initial_front: not a single-front initial condition");
        }
    }

    void validate() const {
        if (name.empty()) throw ConfigError("scenario: missing name");
        params.validate();
        if (front_type()) {
            if (init == InitKind::TwoFront) {
                if (!(r1 > 0.0 && r1 < params.rho_star && r2 > 0.0 && r2 < params.rho_star))
                    throw ConfigError("scenario: two-front plateaus must lie in (0, rho_star)");
                if (r1 == r2) throw ConfigError("scenario: two-front requires r1 != r2");
                if (!(zeta1 > 0.0 && zeta1 < zeta2))
                    throw ConfigError("scenario: two-front requires 0 < zeta1 < zeta2");
            } else {
                params.validate_front();
            }
        }
        if (!(alpha >= 0.0)) throw ConfigError("scenario: alpha must be >= 0");
        if (nx < 3 || nz < 3) throw ConfigError("scenario: nx and nz must be >= 3");
        if (!(t_final >= 0.0)) throw ConfigError("scenario: t_final must be >= 0");
        for (double t : output_times)
            if (t < 0.0 || t > t_final)
                throw ConfigError("scenario: output times must lie in [0, t_final]");
        if (init == InitKind::Table && table_path.empty())
            throw ConfigError("scenario: table init requires a table path");
        if (micro_enabled) {
            if (static_cast<double>(micro_k()) / micro_i() != params.eta)
                throw ConfigError("scenario: micro toggle requires eta * i_max == k_max");
        }
        if (control.enabled) {
            if (init != InitKind::VFront)
                throw ConfigError("scenario: the control study uses the V-front initial condition");
            if (!(control.alpha_bar > 0.0)) throw ConfigError("scenario: alpha_bar must be > 0");
            for (double z : control.qoi_z)
                if (!(z > 0.0 && z < 1.0)) throw ConfigError("scenario: qoi z must lie in (0,1)");
        }
    }

    /// Continuous rate profile alpha(x); the solver samples it at cell centers.
    std::function<double(double)> alpha_fn() const {
        const double scale = alpha;
        if (alpha_kind == AlphaKind::SineDip)
            return [scale](double x) {
                const double s = std::sin(M_PI * x);
                return scale * (1.0 - 0.4 * s * s);
            };
        return [scale](double) { return scale; };
    }

    RateField make_alpha() const { return RateField::sample(alpha_fn(), nx); }

    std::function<double(double, double)> rho0() const;
};

namespace detail {
inline double heaviside(double y) { return y >= 0.0 ? 1.0 : 0.0; }

inline std::function<double(double, double)> table_interpolant(const GridCsv& tab) {
    auto vals = std::make_shared<std::vector<double>>(tab.R);
    const int nx = tab.nx, nz = tab.nz;
    return [vals, nx, nz](double x, double z) {
        const double gx = x * nx - 0.5;
        const double gz = z * nz - 0.5;
        const int i0 = static_cast<int>(std::floor(gx));
        const int j0 = static_cast<int>(std::floor(gz));
        const double fx = gx - i0;
        const double fz = std::clamp(gz - j0, 0.0, 1.0);
        const int ia = ((i0 % nx) + nx) % nx;
        const int ib = (ia + 1) % nx;
        const int ja = std::clamp(j0, 0, nz - 1);
        const int jb = std::clamp(j0 + 1, 0, nz - 1);
        auto v = [&](int i, int j) { return (*vals)[static_cast<std::size_t>(i) * nz + j]; };
        return (1.0 - fx) * ((1.0 - fz) * v(ia, ja) + fz * v(ia, jb)) +
               fx * ((1.0 - fz) * v(ib, ja) + fz * v(ib, jb));
    };
}
} // namespace detail

inline std::function<double(double, double)> ScenarioConfig::rho0() const {
    switch (init) {
    case InitKind::ConstantFront:
    case InitKind::VFront:
    case InitKind::SmoothFront: {
        const double r = params.r;
        const ScenarioConfig self = *this;
        return [self, r](double x, double z) {
            return r * detail::heaviside(self.initial_front(x) - z);
        };
    }
    case InitKind::SmoothBump:
        return [](double x, double z) {
            (void)x;
            if (z > 0.5) return 0.0;
            const double s = std::sin(2.0 * M_PI * z);
            const double s2 = s * s;
            return 1.5 * s2 * s2 * s2;
        };
    case InitKind::TwoFront: {
        const double a = r1, b = r2, za = zeta1, zb = zeta2;
        return [a, b, za, zb](double, double z) {
            const double h1 = detail::heaviside(za - z);
            return a * h1 + b * (detail::heaviside(zb - z) - h1);
        };
    }
    case InitKind::Table: return detail::table_interpolant(read_grid_csv(table_path));
    }
    throw ConfigError("rho0: unknown init kind");
}

// ---------------------------------------------------------------------------
// Config file parsing: flat "key = value" lines grouped under [sections].
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_number_list(const std::string& raw, const std::string& where) {
    std::string s = raw;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back([&] {
        try {
            return parse_double(tok);
        } catch (const ConfigError&) {
            throw ConfigError(where + ": not a number: '" + tok + "'");
        }
    }());
    return out;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError(where + ": expected a boolean, got '" + v + "'");
}

} // namespace detail

/// Parses and validates a scenario configuration file. Unknown sections or
/// keys are rejected with the offending line number.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path.string());
    ScenarioConfig cfg;
    cfg.output_times.clear();

    std::string section = "scenario";
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::string s = detail::trim(line);
        if (const auto hash = s.find('#'); hash != std::string::npos) s = detail::trim(s.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section != "scenario" && section != "model" && section != "grid" &&
                section != "initial" && section != "time" && section != "output" &&
                section != "micro" && section != "control")
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (key.empty() || val.empty()) throw ConfigError(where + ": empty key or value");

        auto num = [&] {
            try {
                return parse_double(val);
            } catch (const ConfigError&) {
                throw ConfigError(where + ": not a number: '" + val + "'");
            }
        };
        auto unknown = [&]() -> ConfigError {
            return ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
        };

        if (section == "scenario") {
            if (key == "name") cfg.name = val;
            else throw unknown();
        } else if (section == "model") {
            if (key == "rho_star") cfg.params.rho_star = num();
            else if (key == "eta") cfg.params.eta = num();
            else if (key == "r") cfg.params.r = num();
            else if (key == "alpha") cfg.alpha = num();
            else if (key == "alpha_kind") {
                if (val == "constant") cfg.alpha_kind = AlphaKind::Constant;
                else if (val == "sine_dip") cfg.alpha_kind = AlphaKind::SineDip;
                else throw ConfigError(where + ": unknown alpha_kind '" + val + "'");
            } else throw unknown();
        } else if (section == "grid") {
            if (key == "nx") cfg.nx = static_cast<int>(num());
            else if (key == "nz") cfg.nz = static_cast<int>(num());
            else throw unknown();
        } else if (section == "initial") {
            if (key == "kind") {
                if (val == "constant_front") cfg.init = InitKind::ConstantFront;
                else if (val == "v_front") cfg.init = InitKind::VFront;
                else if (val == "smooth_front") cfg.init = InitKind::SmoothFront;
                else if (val == "smooth_bump") cfg.init = InitKind::SmoothBump;
                else if (val == "two_front") cfg.init = InitKind::TwoFront;
                else if (val == "table") cfg.init = InitKind::Table;
                else throw ConfigError(where + ": unknown initial kind '" + val + "'");
            } else if (key == "zeta0") cfg.zeta0 = num();
            else if (key == "z0") cfg.z0 = num();
            else if (key == "r1") cfg.r1 = num();
            else if (key == "r2") cfg.r2 = num();
            else if (key == "zeta1") cfg.zeta1 = num();
            else if (key == "zeta2") cfg.zeta2 = num();
            else if (key == "table") cfg.table_path = val;
            else if (key == "rho_b") cfg.rho_b = num();
            else throw unknown();
        } else if (section == "time") {
            if (key == "t_final") cfg.t_final = num();
            else if (key == "outputs") cfg.output_times = detail::parse_number_list(val, where);
            else throw unknown();
        } else if (section == "output") {
            if (key == "dir") cfg.outdir = val;
            else throw unknown();
        } else if (section == "micro") {
            if (key == "enabled") cfg.micro_enabled = detail::parse_bool(val, where);
            else if (key == "i_max") cfg.i_max = static_cast<int>(num());
            else if (key == "k_max") cfg.k_max = static_cast<int>(num());
            else throw unknown();
        } else { // control
            if (key == "enabled") cfg.control.enabled = detail::parse_bool(val, where);
            else if (key == "alpha_bar") cfg.control.alpha_bar = num();
            else if (key == "zeta_max") cfg.control.zeta_max = num();
            else if (key == "qoi_z") cfg.control.qoi_z = detail::parse_number_list(val, where);
            else throw unknown();
        }
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::pair<std::string, std::string>> list_presets() {
    return {
        {"example1", "micro vs macro validation on a smooth bump with a varying rate"},
        {"example2", "front with constant profile"},
        {"example3", "V-shaped front with small eta"},
        {"example4", "smooth front with small eta"},
        {"example5", "V-shaped front with large eta (stalled processors)"},
        {"control_study", "constant vs priority rate policy with quantities of interest"},
    };
}

inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    if (name == "example1") {
        c.params.rho_star = 1.0;
        c.params.eta = 1.0;
        c.alpha = 1.0;
        c.alpha_kind = AlphaKind::SineDip;
        c.init = InitKind::SmoothBump;
        c.t_final = 0.5;
        c.output_times = {0.0, 0.5};
        c.micro_enabled = true;
    } else if (name == "example2") {
        c.params.eta = 0.5;
        c.init = InitKind::ConstantFront;
        c.zeta0 = 0.2;
        c.output_times = {0.0, 1.0, 2.0};
    } else if (name == "example3") {
        c.params.eta = 1.0 / 1.1;
        c.init = InitKind::VFront;
        c.z0 = 0.2;
        c.output_times = {0.0, 1.0, 2.0};
    } else if (name == "example4") {
        c.params.eta = 1.0 / (M_PI / 2.0 + 1.0);
        c.init = InitKind::SmoothFront;
        c.output_times = {0.0, 1.0, 2.0};
    } else if (name == "example5") {
        c.params.eta = 10.0;
        c.init = InitKind::VFront;
        c.z0 = 0.2;
        c.output_times = {0.0, 0.25, 1.0, 2.0};
    } else if (name == "control_study") {
        c.params.eta = 10.0;
        c.init = InitKind::VFront;
        c.z0 = 0.1;
        c.t_final = 1.0;
        c.output_times = {0.0, 1.0};
        c.control.enabled = true;
        c.control.alpha_bar = 0.5;
        c.control.zeta_max = 1.01875;
        c.control.qoi_z = {0.5, 0.75};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitNumericalFailure = 3,
    kExitAssumptionViolation = 4,
};

struct ScenarioResult {
    int exit_code = kExitOk;
    std::string message;
    std::filesystem::path outdir;
    double front_linf = std::numeric_limits<double>::quiet_NaN();
    double front_l1 = std::numeric_limits<double>::quiet_NaN();
    double micro_l1_rel = std::numeric_limits<double>::quiet_NaN();
    double max_audit_defect_rel = 0.0;
    bool assumption_violated = false;
};

namespace detail {

enum class AnalyticKind { None, Constant, VShape, Stalled, Evolver };

inline AnalyticKind analytic_kind(const ScenarioConfig& cfg) {
    if (cfg.alpha_kind != AlphaKind::Constant || cfg.control.enabled) return AnalyticKind::None;
    switch (cfg.init) {
    case InitKind::ConstantFront: return AnalyticKind::Constant;
    case InitKind::VFront:
        return cfg.params.eta * (1.0 - 2.0 * cfg.z0) < 1.0 ? AnalyticKind::VShape
                                                           : AnalyticKind::Stalled;
    case InitKind::SmoothFront: return AnalyticKind::Evolver;
    default: return AnalyticKind::None;
    }
}

/// Reference front at time t on the simulation x-grid. The smooth-front case
/// has no closed form; it is evolved on a 9x refined grid (odd factor so the
/// fine centers contain the coarse ones) and sampled down.
inline FrontProfile analytic_front(const ScenarioConfig& cfg, double t) {
    const AnalyticKind kind = analytic_kind(cfg);
    const int nx = cfg.nx;
    switch (kind) {
    case AnalyticKind::Constant:
        return FrontProfile::sample(
            [&](double) { return cfg.zeta0 + (cfg.alpha / cfg.params.rho_star) * t; }, nx, t);
    case AnalyticKind::VShape:
        return FrontProfile::sample(
            [&](double x) { return front_vshape_solution(x, t, cfg.z0, cfg.alpha, cfg.params); },
            nx, t);
    case AnalyticKind::Stalled:
        return FrontProfile::sample(
            [&](double x) { return front_stalled_solution(x, t, cfg.z0, cfg.alpha, cfg.params); },
            nx, t);
    case AnalyticKind::Evolver: {
        const int refine = 9;
        const int fine_n = refine * nx;
        FrontProfile fine0 =
            FrontProfile::sample([&](double x) { return cfg.initial_front(x); }, fine_n);
        FrontProfile fine = front_evolve(fine0, RateField::constant(cfg.alpha, fine_n),
                                         cfg.params, t);
        FrontProfile out;
        out.t = t;
        out.zeta.resize(static_cast<std::size_t>(nx));
        for (int i = 0; i < nx; ++i)
            out.zeta[static_cast<std::size_t>(i)] =
                fine.zeta[static_cast<std::size_t>(refine * i + (refine - 1) / 2)];
        return out;
    }
    case AnalyticKind::None: break;
    }
    throw ConfigError("analytic_front: no reference solution for this scenario");
}

inline std::pair<double, double> front_errors(const FrontProfile& num, const FrontProfile& ref) {
    double linf = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < num.zeta.size(); ++i) {
        const double e = std::abs(num.zeta[i] - ref.zeta[i]);
        linf = std::max(linf, e);
        l1 += e;
    }
    return {linf, l1 / static_cast<double>(num.zeta.size())};
}

inline void write_steps_csv(const std::filesystem::path& path,
                            const std::vector<StepLedger>& ledgers) {
    std::ofstream os = open_for_write(path);
    os << "step,t,dt,mass_before,mass_after,inflow,outflow,boundary_delta,defect,min_R,max_R\n";
    for (std::size_t n = 0; n < ledgers.size(); ++n) {
        const StepLedger& l = ledgers[n];
        os << n << ',' << format_double(l.t_before) << ',' << format_double(l.dt) << ','
           << format_double(l.mass_before) << ',' << format_double(l.mass_after) << ','
           << format_double(l.inflow) << ',' << format_double(l.outflow) << ','
           << format_double(l.boundary_delta) << ',' << format_double(l.defect()) << ','
           << format_double(l.min_R) << ',' << format_double(l.max_R) << '\n';
    }
}

inline double ledger_defect_rel(const std::vector<StepLedger>& ledgers) {
    double rel = 0.0;
    for (const StepLedger& l : ledgers) {
        const double scale = std::max({std::abs(l.mass_after), std::abs(l.mass_before), 1e-300});
        rel = std::max(rel, std::abs(l.defect()) / scale);
    }
    return rel;
}

inline void write_micro_csv(const std::filesystem::path& path, const MicroState& micro) {
    std::ofstream os = open_for_write(path);
    os << "i_max,k_max,t,q_star\n";
    os << micro.processors() << ',' << micro.stages() << ',' << format_double(micro.t) << ','
       << format_double(micro.q_star()) << '\n';
    os << "x,z,rho\n";
    const std::vector<double> rho = micro_density(micro);
    for (int i = 0; i < micro.processors(); ++i)
        for (int k = 0; k < micro.stages(); ++k)
            os << format_double((i + 0.5) / micro.processors()) << ','
               << format_double((k + 0.5) / micro.stages()) << ','
               << format_double(rho[micro.idx(i, k)]) << '\n';
}

} // namespace detail

inline std::filesystem::path resolve_outdir(const ScenarioConfig& cfg) {
    std::filesystem::path root = ".";
    if (const char* env = std::getenv("DATAFLOW_OUT_ROOT"); env && *env) root = env;
    return root / (cfg.outdir.empty() ? cfg.name + "_out" : cfg.outdir);
}

/// Runs one scenario end to end and writes its artifact files: density and
/// front CSVs per output time, the analytic front when a reference applies,
/// the error-norm summary, the per-step ledger (exact dt sequence and mass
/// accounting), and run metadata. Configuration problems throw ConfigError;
/// numerical failures are reported through the exit code.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, std::ostream& log) {
    cfg.validate();
    ScenarioResult res;
    res.outdir = resolve_outdir(cfg);
    std::filesystem::create_directories(res.outdir);

    const Grid g(cfg.nx, cfg.nz);
    const ModelParams& p = cfg.params;
    auto rho0 = cfg.rho0();
    FieldState st0 = init_state(rho0, g);

    std::vector<double> outputs = cfg.output_times;
    if (outputs.empty()) outputs.push_back(cfg.t_final);
    std::sort(outputs.begin(), outputs.end());

    std::vector<std::pair<std::string, std::string>> meta;
    meta.emplace_back("name", cfg.name);
    meta.emplace_back("nx", std::to_string(cfg.nx));
    meta.emplace_back("nz", std::to_string(cfg.nz));
    meta.emplace_back("rho_star", format_double(p.rho_star));
    meta.emplace_back("eta", format_double(p.eta));
    meta.emplace_back("r", format_double(p.r));
    meta.emplace_back("alpha", format_double(cfg.alpha));
    meta.emplace_back("rho_b", format_double(cfg.rho_b_value()));
    meta.emplace_back("t_final", format_double(cfg.t_final));

    try {
        if (cfg.control.enabled) {
            FrontProfile zeta0 =
                FrontProfile::sample([&](double x) { return cfg.initial_front(x); }, cfg.nx);
            PolicySpec constant{PolicySpec::Kind::Constant, cfg.control.alpha_bar, 0.0, {}};
            PolicySpec priority{PolicySpec::Kind::Priority, cfg.control.alpha_bar,
                                cfg.control.zeta_max, zeta0};
            const std::vector<std::pair<std::string, PolicySpec>> policies = {
                {"constant", constant}, {"priority", priority}};
            auto runs = policy_compare(st0, g, p, policies, cfg.control.qoi_z, outputs,
                                       cfg.rho_b_value());

            std::ofstream qoi = open_for_write(res.outdir / "qoi.csv");
            qoi << "t,policy,z,omega1,omega2,omega3\n";
            for (const PolicyRun& pr : runs) {
                for (const auto& s : pr.series)
                    for (std::size_t n = 0; n < s.t.size(); ++n)
                        qoi << format_double(s.t[n]) << ',' << pr.name << ',' << format_double(s.z)
                            << ',' << format_double(s.omega1[n]) << ','
                            << format_double(s.omega2[n]) << ',' << format_double(s.omega3[n])
                            << '\n';
                for (const FieldState& snap : pr.result.snapshots) {
                    const std::string label = format_double(snap.t);
                    write_grid_csv(res.outdir / ("density_" + pr.name + "_t" + label + ".csv"), g,
                                   snap, p);
                    write_front_csv(res.outdir / ("front_" + pr.name + "_t" + label + ".csv"),
                                    extract_front(snap, cfg.front_plateau(), g));
                }
                detail::write_steps_csv(res.outdir / ("steps_" + pr.name + ".csv"),
                                        pr.result.ledgers);
                res.max_audit_defect_rel =
                    std::max(res.max_audit_defect_rel, detail::ledger_defect_rel(pr.result.ledgers));
                res.assumption_violated |= pr.result.assumption_violated;
            }
            log << "control study '" << cfg.name << "': wrote qoi.csv for "
                << runs.size() << " policies\n";
        } else {
            RunOptions opt;
            opt.output_times = outputs;
            opt.rho_b = cfg.rho_b_value();
            RunResult rr = run(st0, g, p, cfg.make_alpha(), opt);
            res.assumption_violated = rr.assumption_violated;
            res.max_audit_defect_rel = detail::ledger_defect_rel(rr.ledgers);

            const bool has_analytic =
                detail::analytic_kind(cfg) != detail::AnalyticKind::None;
            for (const FieldState& snap : rr.snapshots) {
                const std::string label = format_double(snap.t);
                write_grid_csv(res.outdir / ("density_t" + label + ".csv"), g, snap, p);
                if (cfg.front_type()) {
                    const FrontProfile num = extract_front(snap, cfg.front_plateau(), g);
                    write_front_csv(res.outdir / ("front_t" + label + ".csv"), num);
                    if (has_analytic) {
                        const FrontProfile ref = detail::analytic_front(cfg, snap.t);
                        write_front_csv(res.outdir / ("analytic_front_t" + label + ".csv"), ref);
                        if (snap.t == outputs.back()) {
                            const auto [linf, l1] = detail::front_errors(num, ref);
                            res.front_linf = linf;
                            res.front_l1 = l1;
                        }
                    }
                }
            }
            detail::write_steps_csv(res.outdir / "steps.csv", rr.ledgers);

            if (cfg.micro_enabled) {
                MicroState micro =
                    micro_from_macro(rho0, cfg.alpha_fn(), p, cfg.micro_i(), cfg.micro_k());
                for (double t : outputs) {
                    micro_run(micro, t);
                    detail::write_micro_csv(
                        res.outdir / ("micro_density_t" + format_double(t) + ".csv"), micro);
                }
                if (cfg.micro_i() == cfg.nx && cfg.micro_k() == cfg.nz) {
                    const std::vector<double> mrho = micro_density(micro);
                    const FieldState& last = rr.snapshots.back();
                    KahanSum diff, norm;
                    for (std::size_t c = 0; c < mrho.size(); ++c) {
                        diff.add(std::abs(last.R[c] - mrho[c]));
                        norm.add(std::abs(last.R[c]));
                    }
                    res.micro_l1_rel = norm.value() > 0.0 ? diff.value() / norm.value() : 0.0;
                    meta.emplace_back("micro_l1_rel", format_double(res.micro_l1_rel));
                }
            }
            log << "scenario '" << cfg.name << "': " << rr.ledgers.size() << " steps, "
                << rr.snapshots.size() << " snapshots\n";
        }
    } catch (const DivergenceError& e) {
        res.exit_code = kExitNumericalFailure;
        res.message = e.what();
        meta.emplace_back("error", e.what());
        write_kv_csv(res.outdir / "meta.csv", meta);
        log << "scenario '" << cfg.name << "' failed: " << e.what() << '\n';
        return res;
    }

    std::vector<std::pair<std::string, std::string>> errs;
    if (std::isfinite(res.front_linf)) {
        errs.emplace_back("front_linf", format_double(res.front_linf));
        errs.emplace_back("front_l1", format_double(res.front_l1));
        errs.emplace_back("front_linf_over_dz", format_double(res.front_linf * cfg.nz));
    }
    if (std::isfinite(res.micro_l1_rel))
        errs.emplace_back("micro_l1_rel", format_double(res.micro_l1_rel));
    errs.emplace_back("max_audit_defect_rel", format_double(res.max_audit_defect_rel));
    write_kv_csv(res.outdir / "error_summary.csv", errs);

    meta.emplace_back("assumption_violated", res.assumption_violated ? "1" : "0");
    write_kv_csv(res.outdir / "meta.csv", meta);

    if (res.assumption_violated) {
        res.exit_code = kExitAssumptionViolation;
        res.message = "data reached the top of the domain (z = 1); results are unreliable there";
        log << "scenario '" << cfg.name << "': " << res.message << '\n';
    }
    return res;
}

} // namespace dataflow

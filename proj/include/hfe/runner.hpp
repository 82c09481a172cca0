#pragma once

// Batch front end: JSON config in, trajectory CSV + JSON report out.
// Exit codes: 0 success, 1 config error, 2 numerical failure, 3 hypothesis
// check falsified under --strict.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfe/monotone.hpp"
#include "hfe/problems.hpp"

namespace hfe::run {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what) {}
};

enum class Mode { Solve, VerifyPair, CheckHypotheses, ConvergenceStudy };

inline Mode parse_mode(const std::string& s) {
    if (s == "solve") return Mode::Solve;
    if (s == "verify-pair") return Mode::VerifyPair;
    if (s == "check-hypotheses") return Mode::CheckHypotheses;
    if (s == "convergence-study") return Mode::ConvergenceStudy;
    throw ConfigError("mode", "unknown mode '" + s + "'");
}

struct RunConfig {
    std::string problem;  // scalar | heat1d | custom
    double mu = 0.5, nu = 0.5, T = 1.0;
    int grid_nodes = 512;
    double grading = 0.0;

    ScalarLinearScenario scalar;
    Heat1DScenario heat;
    // custom problem: dense matrix, linear nonlinearity f + alpha y - beta z,
    // constant-vector jumps
    Matrix custom_A;
    bool custom_symmetric = false;
    Vector custom_x0, custom_f;
    double custom_alpha = 0.0, custom_beta = 0.0;
    std::vector<std::pair<double, Vector>> custom_impulses;

    MonotoneConfig monotone;
    OperatorBounds bounds;
    bool m_star_given = false;
    double bound_scale = 2.0;
    int sample_budget = 200;
    std::vector<int> study_grids = {512, 1024, 2048, 4096};

    json resolved;  // the full configuration as applied, for the report
};

namespace detail_run {

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

inline void require_range(const std::string& field, double v, double lo, double hi, bool open_lo,
                          bool open_hi) {
    const bool ok_lo = open_lo ? v > lo : v >= lo;
    const bool ok_hi = open_hi ? v < hi : v <= hi;
    if (!ok_lo || !ok_hi) {
        std::ostringstream os;
        os << "value " << v << " must lie in " << (open_lo ? "(" : "[") << lo << "," << hi
           << (open_hi ? ")" : "]");
        throw ConfigError(field, os.str());
    }
}

inline std::string format17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail_run

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    cfg.problem = detail_run::field<std::string>(j, "problem", "scalar");
    if (cfg.problem != "scalar" && cfg.problem != "heat1d" && cfg.problem != "custom") {
        throw ConfigError("problem", "must be one of scalar|heat1d|custom");
    }
    cfg.mu = detail_run::field<double>(j, "mu", 0.5);
    cfg.nu = detail_run::field<double>(j, "nu", 0.5);
    cfg.T = detail_run::field<double>(j, "T", 1.0);
    detail_run::require_range("mu", cfg.mu, 0.0, 1.0, true, true);
    detail_run::require_range("nu", cfg.nu, 0.0, 1.0, false, false);
    if (!(cfg.T > 0.0)) throw ConfigError("T", "horizon must be positive");

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        cfg.grid_nodes = detail_run::field<int>(g, "nodes_per_subinterval", cfg.grid_nodes);
        cfg.grading = detail_run::field<double>(g, "grading", cfg.grading);
    }
    if (cfg.grid_nodes < 2) throw ConfigError("grid.nodes_per_subinterval", "must be >= 2");

    const auto order = FractionalOrder::of(cfg.mu, cfg.nu);
    if (cfg.problem == "scalar") {
        const json s = j.value("scalar", json::object());
        cfg.scalar.a = detail_run::field<double>(s, "a", 0.0);
        cfg.scalar.c = detail_run::field<double>(s, "c", 0.0);
        cfg.scalar.x0 = detail_run::field<double>(s, "x0", 1.0);
        cfg.scalar.order = order;
        cfg.scalar.T = cfg.T;
        for (const json& imp : j.value("impulses", json::array())) {
            cfg.scalar.impulses.emplace_back(detail_run::field<double>(imp, "t", -1.0),
                                             detail_run::field<double>(imp, "jump", 0.0));
        }
    } else if (cfg.problem == "heat1d") {
        const json h = j.value("heat1d", json::object());
        cfg.heat.n_interior = detail_run::field<int>(h, "n_interior", 16);
        cfg.heat.length = detail_run::field<double>(h, "length", 1.0);
        cfg.heat.forcing = detail_run::field<double>(h, "forcing", 1.0);
        cfg.heat.reaction_y = detail_run::field<double>(h, "reaction_y", 0.0);
        cfg.heat.reaction_z = detail_run::field<double>(h, "reaction_z", 0.0);
        cfg.heat.x0_scale = detail_run::field<double>(h, "x0_scale", 0.0);
        cfg.heat.order = order;
        cfg.heat.T = cfg.T;
        for (const json& imp : j.value("impulses", json::array())) {
            cfg.heat.impulses.push_back({detail_run::field<double>(imp, "t", -1.0),
                                         detail_run::field<double>(imp, "kappa", 0.0),
                                         detail_run::field<double>(imp, "offset", 0.0)});
        }
    } else {
        const json c = j.value("custom", json::object());
        if (!c.contains("matrix")) throw ConfigError("custom.matrix", "required for custom problems");
        const auto rows = c.at("matrix").get<std::vector<std::vector<double>>>();
        const int n = static_cast<int>(rows.size());
        if (n < 1) throw ConfigError("custom.matrix", "must be nonempty");
        cfg.custom_A.resize(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows[i].size()) != n) throw ConfigError("custom.matrix", "must be square");
            for (int k = 0; k < n; ++k) cfg.custom_A(i, k) = rows[i][k];
        }
        cfg.custom_symmetric = detail_run::field<bool>(c, "symmetric", false);
        const auto x0v = detail_run::field<std::vector<double>>(c, "x0", std::vector<double>(n, 0.0));
        const auto fv = detail_run::field<std::vector<double>>(c, "forcing", std::vector<double>(n, 0.0));
        if (static_cast<int>(x0v.size()) != n) throw ConfigError("custom.x0", "dimension mismatch");
        if (static_cast<int>(fv.size()) != n) throw ConfigError("custom.forcing", "dimension mismatch");
        cfg.custom_x0 = Eigen::Map<const Vector>(x0v.data(), n);
        cfg.custom_f = Eigen::Map<const Vector>(fv.data(), n);
        cfg.custom_alpha = detail_run::field<double>(c, "reaction_y", 0.0);
        cfg.custom_beta = detail_run::field<double>(c, "reaction_z", 0.0);
        for (const json& imp : j.value("impulses", json::array())) {
            const double t = detail_run::field<double>(imp, "t", -1.0);
            Vector jump;
            if (imp.contains("jump") && imp.at("jump").is_array()) {
                const auto v = imp.at("jump").get<std::vector<double>>();
                if (static_cast<int>(v.size()) != n) throw ConfigError("impulses.jump", "dimension mismatch");
                jump = Eigen::Map<const Vector>(v.data(), n);
            } else {
                jump = Vector::Constant(n, detail_run::field<double>(imp, "jump", 0.0));
            }
            cfg.custom_impulses.emplace_back(t, std::move(jump));
        }
    }

    const json m = j.value("monotone", json::object());
    cfg.monotone.C = detail_run::field<double>(m, "C", 0.0);
    cfg.monotone.L = detail_run::field<double>(m, "L", 0.0);
    cfg.monotone.L1 = detail_run::field<double>(m, "L1", 0.0);
    cfg.monotone.M_k = detail_run::field<std::vector<double>>(m, "M_k", {});
    cfg.monotone.tol = detail_run::field<double>(m, "tol", 1e-8);
    cfg.monotone.max_iter = detail_run::field<int>(m, "max_iter", 200);
    cfg.monotone.order_tol = detail_run::field<double>(m, "order_tol", -1.0);
    if (m.contains("C_star")) cfg.monotone.C_star = m.at("C_star").get<double>();
    if (m.contains("L_star")) cfg.monotone.L_star = m.at("L_star").get<double>();
    if (!(cfg.monotone.tol > 0.0)) throw ConfigError("monotone.tol", "must be positive");
    if (cfg.monotone.max_iter < 1) throw ConfigError("monotone.max_iter", "must be >= 1");
    if (cfg.monotone.C < 0.0) throw ConfigError("monotone.C", "must be nonnegative");

    const json b = j.value("bounds", json::object());
    cfg.bounds.M_star = detail_run::field<double>(b, "M_star", 0.0);
    cfg.bounds.N_tilde = detail_run::field<double>(b, "N_tilde", 1.0);
    cfg.m_star_given = cfg.bounds.M_star > 0.0;

    cfg.bound_scale = detail_run::field<double>(j.value("pair", json::object()), "bound_scale", 2.0);
    if (!(cfg.bound_scale > 0.0)) throw ConfigError("pair.bound_scale", "must be positive");
    cfg.sample_budget =
        detail_run::field<int>(j.value("hypotheses", json::object()), "sample_budget", 200);
    cfg.study_grids = detail_run::field<std::vector<int>>(j.value("study", json::object()), "grids",
                                                          cfg.study_grids);

    // resolved configuration embedded into every report
    cfg.resolved = j;
    cfg.resolved["problem"] = cfg.problem;
    cfg.resolved["mu"] = cfg.mu;
    cfg.resolved["nu"] = cfg.nu;
    cfg.resolved["T"] = cfg.T;
    cfg.resolved["grid"] = {{"nodes_per_subinterval", cfg.grid_nodes}, {"grading", cfg.grading}};
    cfg.resolved["monotone"] = {{"C", cfg.monotone.C},       {"L", cfg.monotone.L},
                                {"L1", cfg.monotone.L1},     {"M_k", cfg.monotone.M_k},
                                {"tol", cfg.monotone.tol},   {"max_iter", cfg.monotone.max_iter},
                                {"order_tol", cfg.monotone.order_tol}};
    if (cfg.monotone.C_star) cfg.resolved["monotone"]["C_star"] = *cfg.monotone.C_star;
    if (cfg.monotone.L_star) cfg.resolved["monotone"]["L_star"] = *cfg.monotone.L_star;
    cfg.resolved["bounds"] = {{"M_star", cfg.bounds.M_star}, {"N_tilde", cfg.bounds.N_tilde}};
    cfg.resolved["pair"] = {{"bound_scale", cfg.bound_scale}};
    cfg.resolved["hypotheses"] = {{"sample_budget", cfg.sample_budget}};
    cfg.resolved["study"] = {{"grids", cfg.study_grids}};
    return cfg;
}

inline EvolutionProblem build_problem(const RunConfig& cfg) {
    if (cfg.problem == "scalar") return to_problem(cfg.scalar);
    if (cfg.problem == "heat1d") return build_heat1d(cfg.heat);
    Generator gen = Generator::dense(cfg.custom_A, cfg.custom_symmetric);
    const Vector f = cfg.custom_f;
    const double alpha = cfg.custom_alpha, beta = cfg.custom_beta;
    std::vector<Impulse> imps;
    for (const auto& [t, jump] : cfg.custom_impulses) {
        const Vector j = jump;
        imps.push_back({t, [j](const Vector&, const Vector&) { return j; }});
    }
    EvolutionProblem prob{std::move(gen),
                          FractionalOrder::of(cfg.mu, cfg.nu),
                          cfg.T,
                          cfg.custom_x0,
                          [f, alpha, beta](double, const Vector& y, const Vector& z) {
                              return Vector(f + alpha * y - beta * z);
                          },
                          std::move(imps)};
    prob.validate();
    return prob;
}

namespace detail_run {

inline std::string trajectory_csv(const PCTrajectory& y, const PCTrajectory& z) {
    const TimeGrid& g = y.grid();
    const int dim = y.dim();
    std::ostringstream os;
    os << "t,k,weight";
    for (int c = 0; c < dim; ++c) os << ",ymin_" << c;
    for (int c = 0; c < dim; ++c) os << ",zmax_" << c;
    os << "\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = (i == 0) ? (y.lambda() == 1.0 ? 1.0 : 0.0) : g.weight(i, y.lambda());
        os << format17(g.node(i)) << "," << g.subinterval(i) << "," << format17(w);
        for (int c = 0; c < dim; ++c) os << "," << format17(y.value(i)(c));
        for (int c = 0; c < dim; ++c) os << "," << format17(z.value(i)(c));
        os << "\n";
    }
    return os.str();
}

inline json vector_json(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json order_check_json(const OrderCheck& c) {
    return {{"ok", c.ok},
            {"worst", c.worst},
            {"t", c.where_t},
            {"component", c.component},
            {"at_record", c.at_record}};
}

inline json mc_json(const MonteCarloCheck& c) {
    return {{"samples", c.samples},
            {"failures", c.failures},
            {"worst_margin", c.worst_margin},
            {"worst_t", c.worst_time},
            {"pass", c.pass}};
}

}  // namespace detail_run

/// Executes one mode. Files are written atomically into out_dir; the returned
/// code is the process exit status.
inline int run(const RunConfig& cfg, Mode mode, const std::string& out_dir, bool strict,
               std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    json report;
    report["config"] = cfg.resolved;
    report["config"]["seed"] = seed;
    report["config"]["strict"] = strict;

    EvolutionProblem prob = build_problem(cfg);
    const double lambda = prob.order.lambda();
    report["lambda"] = lambda;

    OperatorBounds bounds = cfg.bounds;
    if (!cfg.m_star_given) bounds.M_star = estimate_m_star(prob.gen, cfg.monotone.C, prob.T);
    report["m_star"] = bounds.M_star;
    report["m_star_estimated"] = !cfg.m_star_given;
    report["eta"] = condensing_eta(cfg.monotone, prob.order, prob.T, bounds.M_star);
    for (const auto& w : validate_config(cfg.monotone, prob)) report["warnings"].push_back(w);

    // deterministic work counters (wall-clock times would break byte-identical
    // reports; see the determinism contract)
    json timings;
    timings["grid_nodes"] = 0;
    timings["apply_g_calls"] = 0;
    timings["iterations"] = 0;

    int exit_code = 0;
    if (mode == Mode::ConvergenceStudy) {
        if (cfg.problem != "scalar") {
            throw ConfigError("problem", "convergence-study requires the scalar problem (oracle)");
        }
        std::ostringstream csv;
        csv << "nodes,weighted_error,ratio\n";
        json table = json::array();
        double prev = 0.0;
        for (std::size_t gi = 0; gi < cfg.study_grids.size(); ++gi) {
            const int n = cfg.study_grids[gi];
            auto grid = make_grid(prob, n, cfg.grading);
            GOperator G(prob, cfg.monotone, grid);
            QuasiPair pair = default_quasi_pair(G, cfg.bound_scale);
            if (!pair.verification.ok) throw std::runtime_error("convergence-study: quasi pair failed verification");
            ExtremalSolution sol = iterate_extremal(G, pair.y0, pair.z0);
            double err = 0.0;
            for (std::size_t i = 1; i < grid->size(); ++i) {
                const double w = grid->weight(i, lambda);
                err = std::max(err, w * std::fabs(sol.y_min.value(i)(0) -
                                                  scalar_oracle_left(cfg.scalar, grid->node(i))));
            }
            const double ratio = (gi == 0) ? 0.0 : prev / err;
            csv << n << "," << detail_run::format17(err) << "," << detail_run::format17(ratio) << "\n";
            table.push_back({{"nodes", n}, {"weighted_error", err}, {"ratio", ratio}});
            prev = err;
            timings["grid_nodes"] = static_cast<int>(grid->size());
            timings["apply_g_calls"] = timings["apply_g_calls"].get<int>() +
                                       2 * sol.report.iterations + 2;
            timings["iterations"] = sol.report.iterations;
        }
        report["study"] = table;
        report["iterations"] = timings["iterations"];
        report["converged"] = true;
        report["unique"] = true;
        report["residual"] = nullptr;
        report["violations"] = nullptr;
        detail_run::atomic_write(fs::path(out_dir) / "study.csv", csv.str());
    } else {
        auto grid = make_grid(prob, cfg.grid_nodes, cfg.grading);
        timings["grid_nodes"] = static_cast<int>(grid->size());
        GOperator G(prob, cfg.monotone, grid);
        QuasiPair pair = default_quasi_pair(G, cfg.bound_scale);
        timings["apply_g_calls"] = 2;
        report["pair"] = {{"bound_scale", cfg.bound_scale},
                          {"ok", pair.verification.ok},
                          {"lower", detail_run::order_check_json(pair.verification.lower)},
                          {"upper", detail_run::order_check_json(pair.verification.upper)}};

        if (mode == Mode::VerifyPair) {
            report["converged"] = nullptr;
            report["unique"] = nullptr;
            report["residual"] = nullptr;
            report["violations"] = nullptr;
            report["iterations"] = 0;
            if (!pair.verification.ok && strict) exit_code = 3;
        } else if (mode == Mode::CheckHypotheses) {
            HypothesisReport hyp = check_hypotheses(prob, cfg.monotone, bounds, pair.y0, pair.z0,
                                                    cfg.sample_budget, seed);
            report["eta"] = hyp.eta;
            report["hypotheses"] = {
                {"lambda", hyp.lambda},
                {"eta", hyp.eta},
                {"eta_below_one", hyp.eta < 1.0},
                {"partition_n", hyp.partition_n},
                {"sum_Mk", hyp.sum_Mk},
                {"a2star_rhs_literal_gamma_mu_minus_1", hyp.a2star_rhs_literal},
                {"a2star_rhs_repaired_gamma_mu_plus_1", hyp.a2star_rhs_repaired},
                {"a2star_ok_literal", hyp.a2star_ok_literal},
                {"a2star_ok_repaired", hyp.a2star_ok_repaired},
                {"a1", detail_run::mc_json(hyp.a1)},
                {"a2", detail_run::mc_json(hyp.a2)},
                {"a5_checked", hyp.a5_checked},
                {"a5", detail_run::mc_json(hyp.a5)},
                {"a5_implied_L1", hyp.a5_implied_L1},
                {"all_pass", hyp.all_pass}};
            for (const auto& w : hyp.warnings) report["hypotheses"]["warnings"].push_back(w);
            report["converged"] = nullptr;
            report["unique"] = nullptr;
            report["residual"] = nullptr;
            report["violations"] = nullptr;
            report["iterations"] = 0;
            if (strict && !hyp.all_pass) exit_code = 3;
        } else {  // Solve
            if (!pair.verification.ok) {
                throw std::runtime_error("solve: default quasi pair failed verification (worst lower " +
                                         std::to_string(pair.verification.lower.worst) +
                                         ", worst upper " +
                                         std::to_string(pair.verification.upper.worst) + ")");
            }
            ExtremalSolution sol = iterate_extremal(G, pair.y0, pair.z0);
            timings["apply_g_calls"] = 2 + 2 * sol.report.iterations + 2;
            timings["iterations"] = sol.report.iterations;
            const double res_y = G.residual(sol.y_min);
            const double res_z = G.residual(sol.z_max);
            report["iterations"] = sol.report.iterations;
            report["converged"] = sol.report.converged;
            report["diverged"] = sol.report.diverged;
            report["unique"] = sol.report.unique_within_tol;
            report["eta"] = sol.report.eta;
            report["m_star"] = sol.report.m_star;
            report["residual"] = {{"y_min", res_y}, {"z_max", res_z}};
            double worst = 0.0;
            json hist = json::array();
            for (const auto& st : sol.report.history) {
                worst = std::min(worst, st.worst_violation);
                hist.push_back({{"dy", st.dy}, {"dz", st.dz}, {"gap", st.gap},
                                {"worst_violation", st.worst_violation}});
            }
            report["violations"] = {{"worst", worst}, {"order_tol", sol.report.order_tol_used}};
            report["history"] = hist;
            json jumps = json::array();
            for (std::size_t k = 0; k < grid->impulse_count(); ++k) {
                jumps.push_back({{"t", grid->impulse_time(k)},
                                 {"left_weighted", detail_run::vector_json(sol.y_min.jump_left(k))},
                                 {"right_weighted", detail_run::vector_json(sol.y_min.jump_right(k))},
                                 {"weighted_jump", detail_run::vector_json(sol.y_min.weighted_jump(k))}});
            }
            report["jumps"] = jumps;
            detail_run::atomic_write(fs::path(out_dir) / "trajectory.csv",
                                     detail_run::trajectory_csv(sol.y_min, sol.z_max));
            if (sol.report.diverged) exit_code = 2;
        }
    }

    report["timings"] = timings;
    detail_run::atomic_write(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    return exit_code;
}

inline int run_file(const std::string& config_path, const std::string& mode_str,
                    const std::string& out_dir, bool strict, std::uint64_t seed,
                    int grid_override, std::string* error_out = nullptr) {
    try {
        std::ifstream is(config_path);
        if (!is) throw ConfigError("config", "cannot open '" + config_path + "'");
        json j;
        try {
            j = json::parse(is);
        } catch (const std::exception& e) {
            throw ConfigError("config", std::string("JSON parse failure: ") + e.what());
        }
        std::string mode = mode_str;
        if (mode.empty()) mode = detail_run::field<std::string>(j, "mode", "solve");
        RunConfig cfg = parse_config(j);
        if (grid_override > 0) {
            cfg.grid_nodes = grid_override;
            cfg.resolved["grid"]["nodes_per_subinterval"] = grid_override;
        }
        return run(cfg, parse_mode(mode), out_dir, strict, seed);
    } catch (const ConfigError& e) {
        if (error_out) *error_out = e.what();
        return 1;
    } catch (const std::invalid_argument& e) {
        if (error_out) *error_out = e.what();
        return 1;
    } catch (const std::domain_error& e) {
        if (error_out) *error_out = e.what();
        return 1;
    } catch (const std::exception& e) {
        if (error_out) *error_out = e.what();
        return 2;
    }
}

}  // namespace hfe::run

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "hfe/monotone.hpp"
#include "hfe/problems.hpp"
#include "support/oracles.hpp"

using namespace hfe;
using Catch::Approx;

namespace {

ScalarLinearScenario scalar_scenario(double a, double c, double x0,
                                     std::vector<std::pair<double, double>> imps = {},
                                     double mu = 0.5, double nu = 0.5, double T = 1.0) {
    ScalarLinearScenario sc;
    sc.a = a;
    sc.c = c;
    sc.x0 = x0;
    sc.impulses = std::move(imps);
    sc.order = FractionalOrder::of(mu, nu);
    sc.T = T;
    return sc;
}

}  // namespace

TEST_CASE("apply_G: A = 0, g = 0, zero coupling gives t^{lambda-1}/Gamma(lambda)") {
    ScalarLinearScenario sc = scalar_scenario(0.0, 0.0, 1.0);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 256);
    GOperator G(prob, cfg, grid);
    // G does not depend on its arguments here
    PCTrajectory any = G.new_trajectory();
    for (std::size_t i = 1; i < grid->size(); ++i) any.value(i) = Vector::Constant(1, std::sin(7.0 * i));
    const PCTrajectory out = G.apply(any, any);
    const double lam = prob.order.lambda();
    for (std::size_t i = 1; i < grid->size(); i += 17) {
        const double t = grid->node(i);
        CHECK(out.value(i)(0) == Approx(std::pow(t, lam - 1.0) / gamma_fn(lam)).margin(1e-6));
    }
    CHECK(out.start_record()(0) == Approx(1.0 / gamma_fn(lam)).epsilon(1e-14));
}

TEST_CASE("apply_G: scalar linear closed form") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.0, 0.8);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 256);
    GOperator G(prob, cfg, grid);
    PCTrajectory zero = G.new_trajectory();
    const PCTrajectory out = G.apply(zero, zero);
    const double lam = prob.order.lambda();
    for (std::size_t i = 1; i < grid->size(); i += 13) {
        const double t = grid->node(i);
        const double expect =
            0.8 * std::pow(t, lam - 1.0) * mittag_leffler(0.5, lam, -std::pow(t, 0.5));
        const double w = std::pow(t, 1.0 - lam);
        CHECK(w * out.value(i)(0) == Approx(w * expect).margin(2e-6));
    }
}

TEST_CASE("apply_G: a constant impulse adds the propagated jump branch") {
    const double J = 0.4, t1 = 0.35;
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.0, 0.8, {{t1, J}});
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 192);
    GOperator G(prob, cfg, grid);
    PCTrajectory zero = G.new_trajectory();
    const PCTrajectory out = G.apply(zero, zero);
    const double lam = prob.order.lambda();
    for (std::size_t i = 1; i < grid->size(); i += 11) {
        const double t = grid->node(i);
        double expect = 0.8 * std::pow(t, lam - 1.0) * mittag_leffler(0.5, lam, -std::pow(t, 0.5));
        if (t > t1) {
            expect += J * std::pow(t - t1, lam - 1.0) *
                      mittag_leffler(0.5, lam, -std::pow(t - t1, 0.5));
        }
        const double w = grid->weight(i, lam);
        CAPTURE(t);
        CHECK(w * out.value(i)(0) == Approx(w * expect).margin(5e-6));
    }
    // the weighted jump record equals phi/Gamma(lambda)
    CHECK(out.weighted_jump(0)(0) == Approx(J / gamma_fn(lam)).epsilon(1e-14));
}

TEST_CASE("apply_G: error paths") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.0, 1.0);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 64);
    GOperator G(prob, cfg, grid);
    // grid mismatch
    auto other = make_grid(prob, 32);
    PCTrajectory wrong(other, prob.order.lambda(), 1);
    CHECK_THROWS_AS(G.apply(wrong, wrong), std::invalid_argument);
    // non-finite g output is reported with the offending node
    EvolutionProblem bad = to_problem(sc);
    bad.g = [](double t, const Vector&, const Vector&) {
        return Vector::Constant(1, t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0);
    };
    GOperator Gbad(bad, cfg, grid);
    PCTrajectory zero = Gbad.new_trajectory();
    try {
        Gbad.apply(zero, zero);
        FAIL("expected a non-finite integrand error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("non-finite integrand") != std::string::npos);
    }
}

TEST_CASE("order_leq: witnesses") {
    ScalarLinearScenario sc = scalar_scenario(0.0, 0.0, 1.0);
    EvolutionProblem prob = to_problem(sc);
    auto grid = make_grid(prob, 64);
    PCTrajectory u(grid, prob.order.lambda(), 1);
    for (std::size_t i = 1; i < grid->size(); ++i) u.value(i) = Vector::Constant(1, std::cos(3.0 * i));
    PCTrajectory v = u;
    auto eq = order_leq(u, v, 1e-12);
    CHECK(eq.ok);
    CHECK(eq.worst == 0.0);
    PCTrajectory w = u;
    for (std::size_t i = 1; i < grid->size(); ++i) w.value(i) = Vector(u.value(i) + Vector::Constant(1, 0.3));
    CHECK(order_leq(u, w, 1e-12).ok);
    // a single perturbed node is located
    PCTrajectory p = w;
    p.value(17)(0) = u.value(17)(0) - 0.05;
    auto bad = order_leq(u, p, 1e-12);
    CHECK_FALSE(bad.ok);
    CHECK(bad.where_t == grid->node(17));
    CHECK(bad.component == 0);
    CHECK(bad.worst < 0.0);
}

TEST_CASE("iterate_extremal: the oracle trajectory is a fixed point") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.5, 1.0);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    cfg.tol = 1e-3;
    auto grid = make_grid(prob, 256);
    GOperator G(prob, cfg, grid);
    PCTrajectory x = scalar_oracle_trajectory(sc, grid);
    auto sol = iterate_extremal(G, x, x);
    CHECK(sol.report.iterations == 1);
    CHECK(sol.report.converged);
    CHECK(sol.report.history.back().gap == 0.0);  // identical coupled arguments stay identical
    CHECK(sol.report.unique_within_tol);
}

TEST_CASE("iterate_extremal: initial ordering violation is rejected") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.0, 1.0);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 64);
    GOperator G(prob, cfg, grid);
    PCTrajectory y0 = G.new_trajectory(), z0 = G.new_trajectory();
    for (std::size_t i = 1; i < grid->size(); ++i) y0.value(i) = Vector::Constant(1, 1.0);
    CHECK_THROWS_AS(iterate_extremal(G, y0, z0), std::invalid_argument);
}

TEST_CASE("iterate_extremal: heat1d sandwich converges and matches a finer fixed point") {
    Heat1DScenario hs;
    hs.n_interior = 6;
    hs.order = FractionalOrder::of(0.5, 0.5);
    hs.T = 1.0;
    hs.forcing = 1.0;
    hs.reaction_y = -0.4;  // g = f - 0.4 y, no z dependence
    hs.reaction_z = 0.0;
    hs.x0_scale = 0.3;
    EvolutionProblem prob = build_heat1d(hs);
    MonotoneConfig cfg;
    cfg.C = 0.4;
    cfg.tol = 1e-7;
    const int n_coarse = 96;
    auto grid = make_grid(prob, n_coarse);
    GOperator G(prob, cfg, grid);
    QuasiPair pair = default_quasi_pair(G, 3.0);
    REQUIRE(pair.verification.ok);
    auto sol = iterate_extremal(G, pair.y0, pair.z0);
    CHECK(sol.report.converged);
    CHECK(sol.report.unique_within_tol);
    for (const auto& st : sol.report.history) {
        CHECK(st.worst_violation >= -sol.report.order_tol_used);
    }
    // independent fixed-point solve of the same integral equation on a doubled
    // grid (its nodes contain the coarse ones)
    auto fine = make_grid(prob, 2 * n_coarse);
    GOperator Gf(prob, cfg, fine);
    PCTrajectory x = Gf.new_trajectory();
    for (int p = 0; p < 40; ++p) x = Gf.apply(x, x);
    double worst = 0.0;
    for (std::size_t i = 1; i < grid->size(); ++i) {
        const std::size_t fi = 2 * i;
        REQUIRE(fine->node(fi) == Approx(grid->node(i)).epsilon(1e-14));
        const double w = grid->weight(i, prob.order.lambda());
        worst = std::max(worst,
                         w * (sol.y_min.value(i) - x.value(fi)).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 5e-3);
}

TEST_CASE("iterate_extremal: violated A(1) surfaces ordering violations") {
    // g increasing in its z argument with L = 0 breaks the mixed monotonicity
    Heat1DScenario hs;
    hs.n_interior = 4;
    hs.order = FractionalOrder::of(0.5, 0.5);
    hs.forcing = 0.5;
    hs.reaction_y = 0.0;
    hs.reaction_z = 0.0;
    hs.x0_scale = 0.2;
    EvolutionProblem prob = build_heat1d(hs);
    prob.g = [](double, const Vector&, const Vector& z) { return Vector(Vector::Constant(4, 0.5) + 2.0 * z); };
    MonotoneConfig cfg;
    cfg.L = 0.0;
    cfg.tol = 1e-10;
    cfg.max_iter = 25;
    auto grid = make_grid(prob, 48);
    GOperator G(prob, cfg, grid);
    PCTrajectory y0 = G.new_trajectory();
    QuasiPair pair = default_quasi_pair(G, 3.0);
    auto sol = iterate_extremal(G, pair.y0, pair.z0);
    double worst = 0.0;
    for (const auto& st : sol.report.history) worst = std::min(worst, st.worst_violation);
    CHECK(worst < -sol.report.order_tol_used);
}

TEST_CASE("iterate_extremal: divergence is detected and reported") {
    ScalarLinearScenario sc = scalar_scenario(0.0, 0.5, 0.2);
    EvolutionProblem prob = to_problem(sc);
    prob.g = [](double, const Vector&, const Vector& z) {
        return Vector(Vector::Constant(1, 0.5) + 8.0 * z);  // strongly amplifying, A(1) broken
    };
    MonotoneConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iter = 60;
    auto grid = make_grid(prob, 48);
    GOperator G(prob, cfg, grid);
    QuasiPair pair = default_quasi_pair(G, 2.0);
    auto sol = iterate_extremal(G, pair.y0, pair.z0);
    CHECK_FALSE(sol.report.converged);
    CHECK(sol.report.diverged);
}

TEST_CASE("verify_quasi_pair: default pair, exact solution, and a swapped pair") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.3, 0.5);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    auto grid = make_grid(prob, 128);
    GOperator G(prob, cfg, grid);

    QuasiPair pair = default_quasi_pair(G, 3.0);
    CHECK(pair.verification.ok);

    PCTrajectory x = scalar_oracle_trajectory(sc, grid);
    auto rep = verify_quasi_pair(G, x, x, 1e-3);
    CHECK(rep.ok);
    CHECK(std::fabs(rep.lower.worst) < 1e-3);
    CHECK(std::fabs(rep.upper.worst) < 1e-3);

    auto swapped = verify_quasi_pair(G, pair.z0, pair.y0, 1e-9);
    CHECK_FALSE(swapped.ok);
    CHECK((swapped.lower.worst < 0.0 || swapped.upper.worst < 0.0));
}

TEST_CASE("residual_fixed_point: oracle, nonsolution, converged iterate") {
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.5, 1.0);
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    cfg.tol = 1e-7;
    auto grid = make_grid(prob, 512);
    GOperator G(prob, cfg, grid);

    PCTrajectory x = scalar_oracle_trajectory(sc, grid);
    CHECK(G.residual(x) <= 1e-4);

    PCTrajectory zero = G.new_trajectory();
    const double lam = prob.order.lambda();
    const double res0 = weighted_norm(G.apply(zero, zero) - zero);
    CHECK(res0 > 0.5 / gamma_fn(lam));  // a nonsolution has an M-scale residual

    QuasiPair pair = default_quasi_pair(G, 3.0);
    REQUIRE(pair.verification.ok);
    auto sol = iterate_extremal(G, pair.y0, pair.z0);
    REQUIRE(sol.report.converged);
    CHECK(G.residual(sol.y_min) <= 10.0 * cfg.tol);
}

TEST_CASE("mixed monotonicity of G on ordered quadruples") {
    ScalarLinearScenario sc = scalar_scenario(0.8, 0.4, 0.5);
    EvolutionProblem prob = to_problem(sc);
    prob.g = [](double, const Vector& y, const Vector& z) {
        return Vector(Vector::Constant(1, 0.4) - 0.3 * (y - Vector::Constant(1, 0.1)) - 0.2 * z);
    };
    MonotoneConfig cfg;
    cfg.C = 0.3;
    cfg.L = 0.2;
    auto grid = make_grid(prob, 96);
    GOperator G(prob, cfg, grid);
    QuasiPair pair = default_quasi_pair(G, 2.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto between = [&](double lo, double hi) {
        double a = unif(rng), b = unif(rng);
        if (a > b) std::swap(a, b);
        return std::pair<double, double>{lo + a * (hi - lo), lo + b * (hi - lo)};
    };
    const double order_tol = resolve_order_tol(cfg, pair.y0, pair.z0);
    for (int rep = 0; rep < 20; ++rep) {
        PCTrajectory y1 = G.new_trajectory(), y2 = G.new_trajectory();
        PCTrajectory z1 = G.new_trajectory(), z2 = G.new_trajectory();
        for (std::size_t i = 1; i < grid->size(); ++i) {
            const double lo = pair.y0.value(i)(0), hi = pair.z0.value(i)(0);
            auto [ya, yb] = between(lo, hi);
            auto [za, zb] = between(lo, hi);
            y1.value(i) = Vector::Constant(1, ya);
            y2.value(i) = Vector::Constant(1, yb);
            z2.value(i) = Vector::Constant(1, za);
            z1.value(i) = Vector::Constant(1, zb);
        }
        const auto chk = order_leq(G.apply(y1, z1), G.apply(y2, z2), order_tol);
        CAPTURE(rep, chk.worst, chk.where_t);
        CHECK(chk.ok);
    }
}

TEST_CASE("impulse jump record equals the S*-propagated jump") {
    const double J = 0.5, t1 = 0.4;
    ScalarLinearScenario sc = scalar_scenario(1.0, 0.0, 1.0, {{t1, J}});
    EvolutionProblem prob = to_problem(sc);
    MonotoneConfig cfg;
    cfg.tol = 1e-6;
    auto grid = make_grid(prob, 128);
    GOperator G(prob, cfg, grid);
    QuasiPair pair = default_quasi_pair(G, 3.0);
    REQUIRE(pair.verification.ok);
    auto sol = iterate_extremal(G, pair.y0, pair.z0);
    // S*-propagated jump: lim d^{1-lambda} S*(d) J through the quadrature path
    const double lam = prob.order.lambda();
    const double d = 1e-18;
    std::complex<double> f;
    G.propagator().sigma_factors(d, &f);
    const double propagated = std::pow(d, 1.0 - lam) * f.real() * J;
    CHECK(std::fabs(sol.y_min.weighted_jump(0)(0) - propagated) <= 1e-8);
}

TEST_CASE("perturbation equivalence: C > 0 reproduces the C = 0 solution") {
    ScalarLinearScenario sc = scalar_scenario(0.8, 0.5, 1.0);
    EvolutionProblem prob = to_problem(sc);
    auto grid = make_grid(prob, 256);
    auto solve_with = [&](double C) {
        MonotoneConfig cfg;
        cfg.C = C;
        cfg.tol = 1e-9;
        GOperator G(prob, cfg, grid);
        QuasiPair pair = default_quasi_pair(G, 3.0);
        REQUIRE(pair.verification.ok);
        auto sol = iterate_extremal(G, pair.y0, pair.z0);
        REQUIRE(sol.report.converged);
        return sol.y_min;
    };
    const PCTrajectory base = solve_with(0.0);
    const PCTrajectory shifted = solve_with(0.7);
    CHECK(weighted_norm(shifted - base) < 2e-4);
}

TEST_CASE("check_hypotheses: lambda, eta arithmetic, A(2*) variants") {
    Heat1DScenario hs;
    hs.n_interior = 4;
    hs.order = FractionalOrder::of(0.5, 0.5);
    hs.forcing = 1.0;
    hs.reaction_y = -0.5;
    hs.reaction_z = 0.1;
    hs.x0_scale = 0.2;
    EvolutionProblem prob = build_heat1d(hs);
    MonotoneConfig cfg;
    cfg.C = 0.2;
    cfg.L = 0.1;
    cfg.L1 = 0.1;
    auto grid = make_grid(prob, 48);
    GOperator G(prob, cfg, grid);
    QuasiPair pair = default_quasi_pair(G, 3.0);

    OperatorBounds bounds{1.0, 1.0};
    auto rep = check_hypotheses(prob, cfg, bounds, pair.y0, pair.z0, 150, 7);
    CHECK(rep.lambda == Approx(0.75).epsilon(1e-15));
    // eta = 4 * ( (2*0.1 + 0.2)/Gamma(1.5) ) = 1.6/Gamma(1.5), hand evaluated
    CHECK(rep.eta == Approx(oracles::kEta_example).margin(1e-12));
    CHECK(rep.eta == Approx(1.6 / gamma_fn(1.5)).margin(1e-14));
    // eta >= 1 without impulse constants: refinement reaches a per-piece eta < 1
    CHECK(rep.partition_n > 0);
    // A(2*) right-hand sides: the literal Gamma(mu-1) reading flips the sign
    CHECK(rep.a2star_rhs_literal < 0.0);
    CHECK_THROWS_AS(check_hypotheses(prob, cfg, bounds, pair.y0, pair.z0, 50, 7),
                    std::invalid_argument);
}

TEST_CASE("check_hypotheses: A(1) passes with adequate C and is falsified otherwise") {
    Heat1DScenario hs;
    hs.n_interior = 4;
    hs.order = FractionalOrder::of(0.5, 0.5);
    hs.forcing = 1.0;
    hs.reaction_y = -0.5;  // needs C >= 0.5
    hs.reaction_z = 0.1;   // needs L >= 0 and beta >= 0
    hs.x0_scale = 0.2;
    EvolutionProblem prob = build_heat1d(hs);
    auto grid = make_grid(prob, 48);
    MonotoneConfig good;
    good.C = 0.5;
    good.L = 0.1;
    GOperator G(prob, good, grid);
    QuasiPair pair = default_quasi_pair(G, 3.0);
    OperatorBounds bounds{1.0, 1.0};

    auto ok = check_hypotheses(prob, good, bounds, pair.y0, pair.z0, 200, 11);
    CHECK(ok.a1.pass);
    CHECK(ok.a2.pass);

    MonotoneConfig weak = good;
    weak.C = 0.2;  // slope exceeds the configured C
    auto bad = check_hypotheses(prob, weak, bounds, pair.y0, pair.z0, 200, 11);
    CHECK_FALSE(bad.a1.pass);
    CHECK(bad.a1.failures > 0);
    CHECK(bad.a1.worst_margin < 0.0);

    // A(5) with adequate constants, and the implied L1 of the corollary
    MonotoneConfig a5 = good;
    a5.C_star = 0.0;  // g(y2)-g(y1) = -0.5(y2-y1) <= 0
    a5.L_star = 0.1;
    auto rep5 = check_hypotheses(prob, a5, bounds, pair.y0, pair.z0, 200, 11);
    CHECK(rep5.a5_checked);
    CHECK(rep5.a5.pass);
    CHECK(rep5.a5_implied_L1 ==
          Approx(1.0 * (0.0 + 0.5 + 0.1 + 0.1) + 0.5 + 0.1).epsilon(1e-14));
}

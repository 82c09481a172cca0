#pragma once

// Scenario library: scalar linear problems with Mittag-Leffler closed forms
// (the main oracle family), the 1-D heat example via a finite-difference
// Laplacian, and the default quasi-solution pair.

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hfe/monotone.hpp"
#include "hfe/operators.hpp"
#include "hfe/specfun.hpp"

namespace hfe {

/// D^{mu,nu} x + a x = c with constant jumps J_k in the weighted initial data
/// at times t_k; closed form through the Mittag-Leffler function.
struct ScalarLinearScenario {
    double a = 0.0;
    double c = 0.0;
    double x0 = 1.0;
    std::vector<std::pair<double, double>> impulses;  // (t_k, J_k)
    FractionalOrder order{0.5, 0.5};
    double T = 1.0;
};

/// x(t) = t^{lambda-1} E_{mu,lambda}(-a t^mu) x0
///        + sum_{t_k < t} (t-t_k)^{lambda-1} E_{mu,lambda}(-a (t-t_k)^mu) J_k
///        + c t^mu E_{mu,mu+1}(-a t^mu)
inline double scalar_oracle(const ScalarLinearScenario& sc, double t, SeriesControl ctl = {}) {
    if (!(t > 0.0) || t > sc.T) throw std::domain_error("scalar_oracle: t must lie in (0,T]");
    const double mu = sc.order.mu;
    const double lam = sc.order.lambda();
    for (const auto& [tk, jk] : sc.impulses) {
        (void)jk;
        if (t == tk) throw std::domain_error("scalar_oracle: evaluation at an impulse time (two-sided limit)");
    }
    double x = std::pow(t, lam - 1.0) * mittag_leffler(mu, lam, -sc.a * std::pow(t, mu), ctl) * sc.x0;
    for (const auto& [tk, jk] : sc.impulses) {
        if (tk < t) {
            const double d = t - tk;
            x += std::pow(d, lam - 1.0) * mittag_leffler(mu, lam, -sc.a * std::pow(d, mu), ctl) * jk;
        }
    }
    if (sc.c != 0.0) {
        x += sc.c * std::pow(t, mu) * mittag_leffler(mu, mu + 1.0, -sc.a * std::pow(t, mu), ctl);
    }
    return x;
}

inline EvolutionProblem to_problem(const ScalarLinearScenario& sc) {
    Matrix A(1, 1);
    A(0, 0) = sc.a;
    std::vector<Impulse> imps;
    for (const auto& [tk, jk] : sc.impulses) {
        const double jump = jk;
        imps.push_back({tk, [jump](const Vector&, const Vector&) {
                            return Vector::Constant(1, jump);
                        }});
    }
    const double c = sc.c;
    EvolutionProblem prob{Generator::dense(A, true), sc.order, sc.T, Vector::Constant(1, sc.x0),
                          [c](double, const Vector&, const Vector&) { return Vector::Constant(1, c); },
                          std::move(imps)};
    prob.validate();
    return prob;
}

/// Left-limit value (impulse times evaluate the incoming branch).
inline double scalar_oracle_left(const ScalarLinearScenario& sc, double t, SeriesControl ctl = {}) {
    ScalarLinearScenario trimmed = sc;
    trimmed.impulses.clear();
    for (const auto& im : sc.impulses) {
        if (im.first < t) trimmed.impulses.push_back(im);
    }
    return scalar_oracle(trimmed, t, ctl);
}

/// Oracle trajectory on a grid (records filled with the analytic limits).
inline PCTrajectory scalar_oracle_trajectory(const ScalarLinearScenario& sc,
                                             std::shared_ptr<const TimeGrid> grid,
                                             SeriesControl ctl = {}) {
    const double lam = sc.order.lambda();
    PCTrajectory x(std::move(grid), lam, 1);
    const TimeGrid& g = x.grid();
    for (std::size_t i = 1; i < g.size(); ++i) {
        x.value(i) = Vector::Constant(1, scalar_oracle_left(sc, g.node(i), ctl));
    }
    x.start_record() = Vector::Constant(1, sc.x0 / gamma_fn(lam));
    for (std::size_t k = 0; k < g.impulse_count(); ++k) {
        double rec = sc.impulses[k].second / gamma_fn(lam);
        if (lam == 1.0) rec += x.value(g.impulse_node(k))(0);
        x.jump_right(k) = Vector::Constant(1, rec);
    }
    return x;
}

/// Impulsive fractional heat equation on (0, length) with Dirichlet walls:
/// the generator is the second-difference matrix (1/h^2) tridiag(-1, 2, -1),
/// g(t,y,z) = f + alpha y - beta z acting componentwise, and the impulses are
/// saturating: phi_k(y,z) = kappa_k y/(1+|y|) + offset_k (nondecreasing in y,
/// independent of z).
struct Heat1DScenario {
    int n_interior = 16;
    double length = 1.0;
    FractionalOrder order{0.5, 0.5};
    double T = 1.0;
    double forcing = 1.0;     // f
    double reaction_y = 0.0;  // alpha (A(1) needs alpha >= -C)
    double reaction_z = 0.0;  // beta >= 0
    double x0_scale = 0.0;    // x0 = scale * ones, scale >= 0
    struct ImpulseSpec {
        double time;
        double kappa = 0.0;
        double offset = 0.0;
    };
    std::vector<ImpulseSpec> impulses;
};

inline Matrix laplacian_matrix(int n_interior, double length) {
    const double h = length / (n_interior + 1);
    Matrix A = Matrix::Zero(n_interior, n_interior);
    const double s = 1.0 / (h * h);
    for (int i = 0; i < n_interior; ++i) {
        A(i, i) = 2.0 * s;
        if (i > 0) A(i, i - 1) = -s;
        if (i + 1 < n_interior) A(i, i + 1) = -s;
    }
    return A;
}

inline EvolutionProblem build_heat1d(const Heat1DScenario& sc) {
    if (sc.n_interior < 3) throw std::invalid_argument("build_heat1d: need n_interior >= 3");
    if (!(sc.length > 0.0)) throw std::invalid_argument("build_heat1d: length must be positive");
    if (sc.x0_scale < 0.0) throw std::invalid_argument("build_heat1d: x0 must be nonnegative");
    if (sc.reaction_z < 0.0) throw std::invalid_argument("build_heat1d: beta must be nonnegative");
    const int n = sc.n_interior;
    const double f = sc.forcing, alpha = sc.reaction_y, beta = sc.reaction_z;
    std::vector<Impulse> imps;
    for (const auto& spec : sc.impulses) {
        if (spec.kappa < 0.0) throw std::invalid_argument("build_heat1d: impulse kappa must be nonnegative");
        const double kappa = spec.kappa, offset = spec.offset;
        imps.push_back({spec.time, [kappa, offset, n](const Vector& y, const Vector&) {
                            Vector out(n);
                            for (int i = 0; i < n; ++i) {
                                out(i) = kappa * y(i) / (1.0 + std::fabs(y(i))) + offset;
                            }
                            return out;
                        }});
    }
    EvolutionProblem prob{Generator::dense(laplacian_matrix(n, sc.length), true),
                          sc.order,
                          sc.T,
                          Vector::Constant(n, sc.x0_scale),
                          [f, alpha, beta, n](double, const Vector& y, const Vector& z) {
                              return Vector(Vector::Constant(n, f) + alpha * y - beta * z);
                          },
                          std::move(imps)};
    prob.validate();
    return prob;
}

struct QuasiPair {
    PCTrajectory y0;
    PCTrajectory z0;
    QuasiPairReport verification;
};

/// Default candidate pair: y0 = 0 and z0 = bound_scale (t-t_k)^{lambda-1} * ones,
/// verified through the mild-form inequalities. A failed verification is
/// returned as data.
inline QuasiPair default_quasi_pair(const GOperator& G, double bound_scale) {
    if (!(bound_scale > 0.0)) throw std::invalid_argument("default_quasi_pair: bound_scale must be positive");
    const double lam = G.problem().order.lambda();
    PCTrajectory y0 = G.new_trajectory();
    PCTrajectory z0 = G.new_trajectory();
    const TimeGrid& g = G.grid();
    const int dim = G.problem().gen.dim();
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double d = g.node(i) - g.subinterval_left(g.subinterval(i));
        z0.value(i) = Vector::Constant(dim, bound_scale * std::pow(d, lam - 1.0));
    }
    z0.start_record() = Vector::Constant(dim, bound_scale);
    for (std::size_t k = 0; k < g.impulse_count(); ++k) {
        Vector rec = Vector::Constant(dim, bound_scale);
        if (lam == 1.0) rec += z0.value(g.impulse_node(k));
        z0.jump_right(k) = rec;
    }
    QuasiPair pair{std::move(y0), std::move(z0), {}};
    pair.verification = verify_quasi_pair(G, pair.y0, pair.z0);
    return pair;
}

inline QuasiPair default_quasi_pair(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                                    std::shared_ptr<const TimeGrid> grid, double bound_scale,
                                    GOperatorOptions opt = {}) {
    GOperator G(prob, cfg, std::move(grid), opt);
    return default_quasi_pair(G, bound_scale);
}

}  // namespace hfe

#pragma once

// The operator G of the perturbed mild-solution formulation, the mixed
// monotone iteration to the coupled extremal solutions, ordering checks in
// PC_{1-lambda}, and numerical hypothesis checkers.
//
// G(y,z)(t) = S*(t) x0 + sum_{t_k < t} S*(t-t_k) phi_k(y(t_k), z(t_k))
//             + int_0^t (t-s)^{mu-1} P*(t-s) [ g(s,y,z) + (C+L) y - L z ] ds
//
// Sign convention: C >= 0 and L >= 0 are canonical and the integrand is taken
// literally as g + (C+L)y - Lz. The source condition "L <= 0" is surfaced as
// a validation warning, not an error.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfe/grid.hpp"
#include "hfe/operators.hpp"
#include "hfe/propagator.hpp"
#include "hfe/quadrature.hpp"

namespace hfe {

struct MonotoneConfig {
    double C = 0.0;
    double L = 0.0;
    double L1 = 0.0;
    std::vector<double> M_k;  // per-impulse constants of A(2*); empty = all zero
    double tol = 1e-8;
    int max_iter = 200;
    double order_tol = -1.0;  // < 0: auto, 1e-9 * (1 + weighted scale of the pair)
    std::optional<double> C_star;  // A(5) constants when known
    std::optional<double> L_star;
};

struct Impulse {
    double time;
    std::function<Vector(const Vector&, const Vector&)> phi;
};

struct EvolutionProblem {
    Generator gen;
    FractionalOrder order;
    double T;
    Vector x0;  // weighted initial datum, I^{1-lambda} x(0+)
    std::function<Vector(double, const Vector&, const Vector&)> g;
    std::vector<Impulse> impulses;

    std::vector<double> impulse_times() const {
        std::vector<double> ts;
        ts.reserve(impulses.size());
        for (const auto& im : impulses) ts.push_back(im.time);
        return ts;
    }

    void validate() const {
        if (!(T > 0.0)) throw std::invalid_argument("EvolutionProblem: horizon must be positive");
        if (x0.size() != gen.dim()) throw std::invalid_argument("EvolutionProblem: x0 dimension mismatch");
        if (!g) throw std::invalid_argument("EvolutionProblem: nonlinearity g not set");
        double prev = 0.0;
        for (const auto& im : impulses) {
            if (!(im.time > prev) || !(im.time < T)) {
                throw std::invalid_argument("EvolutionProblem: impulse times must be strictly increasing in (0,T)");
            }
            if (!im.phi) throw std::invalid_argument("EvolutionProblem: impulse function not set");
            prev = im.time;
        }
    }
};

inline std::vector<std::string> validate_config(const MonotoneConfig& cfg,
                                                const EvolutionProblem& prob) {
    if (!(cfg.C >= 0.0)) throw std::invalid_argument("MonotoneConfig: C must be nonnegative");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("MonotoneConfig: tol must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("MonotoneConfig: max_iter must be >= 1");
    if (!cfg.M_k.empty() && cfg.M_k.size() != prob.impulses.size()) {
        throw std::invalid_argument("MonotoneConfig: M_k length must equal the impulse count");
    }
    std::vector<std::string> warnings;
    if (cfg.L < 0.0) {
        warnings.push_back(
            "L < 0 configured; the iteration uses the integrand g + (C+L)y - Lz literally, "
            "which is mixed monotone only for L >= 0");
    } else if (cfg.L > 0.0) {
        warnings.push_back(
            "source condition A(1) states L <= 0 but the operator integrand and the uniqueness "
            "factor (C+2L) require L >= 0; the L >= 0 convention is used");
    }
    if (!(cfg.L1 >= 0.0)) {
        warnings.push_back("L1 < 0 configured; treated as the stated typo for L1 >= 0 in A(3)");
    }
    return warnings;
}

/// Default graded grid for a problem: `nodes` per impulse subinterval, graded
/// with exponent max(2, 1/lambda) toward each restart time.
inline std::shared_ptr<const TimeGrid> make_grid(const EvolutionProblem& prob, int nodes = 512,
                                                 double grading = 0.0) {
    prob.validate();
    const double q = grading > 0.0 ? grading : std::max(2.0, 1.0 / prob.order.lambda());
    return std::make_shared<const TimeGrid>(
        TimeGrid::graded(prob.T, prob.impulse_times(), nodes, q));
}

/// Result of a componentwise ordering check in the weighted metric.
struct OrderCheck {
    bool ok = true;
    double worst = 0.0;  // most negative weighted entry of v - u (0 if none)
    double where_t = 0.0;
    int component = -1;
    bool at_record = false;
};

/// u <= v + order_tol, componentwise at every node and limit record, compared
/// in weighted values (raw differences just after an impulse scale like
/// (t-t_k)^{lambda-1} and would turn quadrature noise into false violations).
inline OrderCheck order_leq(const PCTrajectory& u, const PCTrajectory& v, double order_tol) {
    if (!u.compatible(v)) throw std::invalid_argument("order_leq: grid mismatch");
    const TimeGrid& g = u.grid();
    OrderCheck res;
    auto consider = [&](const Vector& du, double t, bool record) {
        for (int c = 0; c < du.size(); ++c) {
            if (du(c) < res.worst) {
                res.worst = du(c);
                res.where_t = t;
                res.component = c;
                res.at_record = record;
            }
        }
    };
    consider(v.start_record() - u.start_record(), 0.0, true);
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double w = g.weight(i, u.lambda());
        consider(w * (v.value(i) - u.value(i)), g.node(i), false);
    }
    for (std::size_t k = 0; k < g.impulse_count(); ++k) {
        consider(v.jump_right(k) - u.jump_right(k), g.impulse_time(k), true);
    }
    res.ok = res.worst >= -order_tol;
    return res;
}

struct GOperatorOptions {
    PropagatorOptions propagator;
    std::size_t max_table_bytes = 600ull << 20;  // above this, cell factors are recomputed per apply
    bool auto_helper = true;                     // helper_nodes = max(2048, 2 * grid nodes)
};

/// The operator G on a fixed grid, with the propagator factor tables built
/// once at construction.
class GOperator {
  public:
    GOperator(const EvolutionProblem& prob, const MonotoneConfig& cfg,
              std::shared_ptr<const TimeGrid> grid, GOperatorOptions opt = {})
        : prob_(&prob), cfg_(cfg), grid_(std::move(grid)) {
        prob.validate();
        validate_config(cfg, prob);
        if (!grid_) throw std::invalid_argument("GOperator: null grid");
        if (grid_->impulse_count() != prob.impulses.size()) {
            throw std::invalid_argument("GOperator: grid impulse layout does not match the problem");
        }
        for (std::size_t k = 0; k < prob.impulses.size(); ++k) {
            if (grid_->impulse_time(k) != prob.impulses[k].time) {
                throw std::invalid_argument("GOperator: grid impulse times do not match the problem");
            }
        }
        PropagatorOptions popt = opt.propagator;
        if (opt.auto_helper) {
            popt.helper_nodes = std::max<int>(popt.helper_nodes,
                                              2 * static_cast<int>(grid_->size()));
        }
        prop_ = std::make_unique<Propagator>(prob.gen, cfg.C, prob.order, prob.T, popt);
        dim_ = prop_->dim();
        lambda_ = prob.order.lambda();
        build_sigma_tables();
        const std::size_t n = grid_->size();
        const std::size_t cells = n * (n - 1) / 2;
        const std::size_t bytes = cells * (2 * sizeof(double) +
                                           static_cast<std::size_t>(dim_) * sizeof(std::complex<double>));
        cache_cells_ = bytes <= opt.max_table_bytes;
        if (cache_cells_) build_cell_tables();
    }

    const Propagator& propagator() const { return *prop_; }
    const TimeGrid& grid() const { return *grid_; }
    std::shared_ptr<const TimeGrid> grid_ptr() const { return grid_; }
    const EvolutionProblem& problem() const { return *prob_; }
    const MonotoneConfig& config() const { return cfg_; }

    PCTrajectory new_trajectory() const { return PCTrajectory(grid_, lambda_, dim_); }

    /// G(y, z) on the shared grid.
    PCTrajectory apply(const PCTrajectory& y, const PCTrajectory& z) const {
        check_compatible(y);
        check_compatible(z);
        const TimeGrid& g = *grid_;
        const std::size_t n = g.size();
        const double CL = cfg_.C + cfg_.L;

        // integrand samples in channel space; node 0 is never used (the first
        // cell of each subinterval integrates constant data from the right)
        std::vector<std::complex<double>> hc(n * dim_, 0.0);
        bool h_all_zero = true;
        for (std::size_t i = 1; i < n; ++i) {
            Vector hi = prob_->g(g.node(i), y.value(i), z.value(i));
            if (hi.size() != dim_) throw std::runtime_error("GOperator: g returned a wrong dimension");
            hi += CL * y.value(i) - cfg_.L * z.value(i);
            if (!hi.allFinite()) {
                std::ostringstream os;
                os << "GOperator: non-finite integrand at node t=" << g.node(i);
                throw std::runtime_error(os.str());
            }
            if (h_all_zero && hi.cwiseAbs().maxCoeff() > 0.0) h_all_zero = false;
            ComplexVector hcv = prop_->to_channels(hi);
            for (int p = 0; p < dim_; ++p) hc[i * dim_ + p] = hcv(p);
        }

        // impulse values propagated from the left node values
        std::vector<ComplexVector> phic(prob_->impulses.size());
        std::vector<Vector> phi_raw(prob_->impulses.size());
        for (std::size_t k = 0; k < prob_->impulses.size(); ++k) {
            const std::size_t ik = g.impulse_node(k);
            Vector ph = prob_->impulses[k].phi(y.value(ik), z.value(ik));
            if (ph.size() != dim_ || !ph.allFinite()) {
                std::ostringstream os;
                os << "GOperator: bad impulse value at t=" << g.impulse_time(k);
                throw std::runtime_error(os.str());
            }
            phi_raw[k] = ph;
            phic[k] = prop_->to_channels(ph);
        }

        PCTrajectory out(grid_, lambda_, dim_);
        ComplexVector acc(dim_);
        std::vector<std::complex<double>> fresh(dim_);
        for (std::size_t i = 1; i < n; ++i) {
            for (int p = 0; p < dim_; ++p) acc(p) = sx0_[i * dim_ + p];
            const std::size_t sub = g.subinterval(i);
            for (std::size_t k = 0; k < sub; ++k) {
                const std::complex<double>* sig = &imp_sigma_[k][i * dim_];
                for (int p = 0; p < dim_; ++p) acc(p) += sig[p] * phic[k](p);
            }
            if (!h_all_zero) accumulate_convolution(i, hc, acc, fresh);
            out.value(i) = prop_->from_channels(acc);
            if (!out.value(i).allFinite()) {
                std::ostringstream os;
                os << "GOperator: non-finite state at node t=" << g.node(i);
                throw std::runtime_error(os.str());
            }
        }

        // weighted limit records
        const double inv_gl = 1.0 / gamma_fn(lambda_);
        out.start_record() = inv_gl * prob_->x0;
        for (std::size_t k = 0; k < prob_->impulses.size(); ++k) {
            Vector rec = inv_gl * phi_raw[k];
            if (lambda_ == 1.0) rec += out.value(g.impulse_node(k));
            out.jump_right(k) = rec;
        }
        return out;
    }

    /// Weighted norm of G(x,x) - x, the mild-solution figure of merit.
    double residual(const PCTrajectory& x) const { return weighted_norm(apply(x, x) - x); }

  private:
    void check_compatible(const PCTrajectory& x) const {
        if (x.dim() != dim_ || !x.grid_ptr() || !x.grid_ptr()->same_layout(*grid_)) {
            throw std::invalid_argument("GOperator: trajectory grid mismatch");
        }
    }

    void build_sigma_tables() {
        const TimeGrid& g = *grid_;
        const std::size_t n = g.size();
        std::vector<std::complex<double>> f(dim_);
        sx0_.assign(n * dim_, 0.0);
        ComplexVector x0c = prop_->to_channels(prob_->x0);
        for (std::size_t i = 1; i < n; ++i) {
            prop_->sigma_factors(g.node(i), f.data());
            for (int p = 0; p < dim_; ++p) sx0_[i * dim_ + p] = f[p] * x0c(p);
        }
        imp_sigma_.assign(prob_->impulses.size(), {});
        for (std::size_t k = 0; k < prob_->impulses.size(); ++k) {
            imp_sigma_[k].assign(n * dim_, 0.0);
            const double tk = g.impulse_time(k);
            for (std::size_t i = g.impulse_node(k) + 1; i < n; ++i) {
                prop_->sigma_factors(g.node(i) - tk, f.data());
                for (int p = 0; p < dim_; ++p) imp_sigma_[k][i * dim_ + p] = f[p];
            }
        }
    }

    // Cell moments for the convolution at output node i over cell [t_j, t_{j+1}]:
    // contribution_p = chi_p(tau_mid) * (a * h_j + b * h_{j+1}), where cells
    // opening a subinterval use constant data from the right (a=0, b=M0); the
    // incoming branch just after an impulse carries the (s-t_k)^{lambda-1}
    // blow-up, which the graded mesh absorbs.
    struct CellAB {
        double a, b;
    };

    CellAB cell_ab(std::size_t i, std::size_t j) const {
        const TimeGrid& g = *grid_;
        const double t = g.node(i);
        const double s0 = g.node(j), s1 = g.node(j + 1);
        const auto m = detail::kernel_moments(prob_->order.mu, t, s0, s1);
        if (g.subinterval(j + 1) != g.subinterval(j) || j == 0) {
            return {0.0, m.M0};  // first cell of a subinterval: constant data
        }
        const double slope_w = m.M1 / (s1 - s0);
        return {m.M0 - slope_w, slope_w};
    }

    void build_cell_tables() {
        const TimeGrid& g = *grid_;
        const std::size_t n = g.size();
        cell_ab_.resize(n * (n - 1) / 2);
        cell_f_.resize(cell_ab_.size() * dim_);
        const double mu = prob_->order.mu;
        std::size_t cell = 0;
        for (std::size_t i = 1; i < n; ++i) {
            const double t = g.node(i);
            for (std::size_t j = 0; j + 1 <= i; ++j, ++cell) {
                cell_ab_[cell] = cell_ab(i, j);
                const double tau = t - 0.5 * (g.node(j) + g.node(j + 1));
                const double v = std::pow(tau, mu);
                for (int p = 0; p < dim_; ++p) cell_f_[cell * dim_ + p] = prop_->chi(p, v);
            }
        }
    }

    void accumulate_convolution(std::size_t i, const std::vector<std::complex<double>>& hc,
                                ComplexVector& acc, std::vector<std::complex<double>>& fresh) const {
        const TimeGrid& g = *grid_;
        const double mu = prob_->order.mu;
        if (cache_cells_) {
            std::size_t cell = (i - 1) * i / 2;
            for (std::size_t j = 0; j + 1 <= i; ++j, ++cell) {
                const CellAB ab = cell_ab_[cell];
                const std::complex<double>* f = &cell_f_[cell * dim_];
                const std::complex<double>* h0 = &hc[j * dim_];
                const std::complex<double>* h1 = &hc[(j + 1) * dim_];
                for (int p = 0; p < dim_; ++p) {
                    acc(p) += f[p] * (ab.a * h0[p] + ab.b * h1[p]);
                }
            }
        } else {
            const double t = g.node(i);
            for (std::size_t j = 0; j + 1 <= i; ++j) {
                const CellAB ab = cell_ab(i, j);
                const double tau = t - 0.5 * (g.node(j) + g.node(j + 1));
                const double v = std::pow(tau, mu);
                for (int p = 0; p < dim_; ++p) fresh[p] = prop_->chi(p, v);
                const std::complex<double>* h0 = &hc[j * dim_];
                const std::complex<double>* h1 = &hc[(j + 1) * dim_];
                for (int p = 0; p < dim_; ++p) {
                    acc(p) += fresh[p] * (ab.a * h0[p] + ab.b * h1[p]);
                }
            }
        }
    }

    const EvolutionProblem* prob_;
    MonotoneConfig cfg_;
    std::shared_ptr<const TimeGrid> grid_;
    std::unique_ptr<Propagator> prop_;
    int dim_ = 0;
    double lambda_ = 1.0;

    std::vector<std::complex<double>> sx0_;                  // [i][p] S*(t_i) x0 channel values
    std::vector<std::vector<std::complex<double>>> imp_sigma_;  // [k][i][p] sigma factors at lag t_i - t_k
    bool cache_cells_ = true;
    std::vector<CellAB> cell_ab_;
    std::vector<std::complex<double>> cell_f_;
};

/// One-shot evaluation of G(y,z) (tests and small sweeps; the iteration uses
/// a shared GOperator).
inline PCTrajectory apply_G(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                            const PCTrajectory& y, const PCTrajectory& z,
                            GOperatorOptions opt = {}) {
    GOperator G(prob, cfg, y.grid_ptr(), opt);
    return G.apply(y, z);
}

inline double residual_fixed_point(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                                   const PCTrajectory& x, GOperatorOptions opt = {}) {
    GOperator G(prob, cfg, x.grid_ptr(), opt);
    return G.residual(x);
}

inline double resolve_order_tol(const MonotoneConfig& cfg, const PCTrajectory& y0,
                                const PCTrajectory& z0) {
    if (cfg.order_tol >= 0.0) return cfg.order_tol;
    return 1e-9 * (1.0 + std::max(weighted_norm(y0), weighted_norm(z0)));
}

/// Condensing bound  eta = 4 M* ( sum M_i T^{lambda-1}/Gamma(lambda)
///                              + (2 L1 + C) T^mu / Gamma(mu+1) ).
inline double condensing_eta(const MonotoneConfig& cfg, const FractionalOrder& order, double T,
                             double m_star) {
    double sum_mk = 0.0;
    for (double m : cfg.M_k) sum_mk += m;
    const double lam = order.lambda();
    return 4.0 * m_star *
           (sum_mk * std::pow(T, lam - 1.0) / gamma_fn(lam) +
            (2.0 * cfg.L1 + cfg.C) * std::pow(T, order.mu) / gamma_fn(order.mu + 1.0));
}

struct IterationReport {
    struct Step {
        double dy;    // ||y_p - y_{p-1}|| weighted
        double dz;    // ||z_p - z_{p-1}|| weighted
        double gap;   // ||z_p - y_p|| weighted
        double worst_violation;  // most negative weighted sandwich entry (0 = clean)
    };
    int iterations = 0;
    std::vector<Step> history;
    double eta = 0.0;
    double m_star = 0.0;
    bool converged = false;
    bool diverged = false;
    bool unique_within_tol = false;
    double order_tol_used = 0.0;
};

struct ExtremalSolution {
    PCTrajectory y_min;
    PCTrajectory z_max;
    IterationReport report;
};

/// Mixed monotone iteration y_p = G(y_{p-1}, z_{p-1}), z_p = G(z_{p-1}, y_{p-1})
/// from an ordered pair y0 <= z0. Sandwich violations are recorded, not fatal;
/// five consecutive iterations of gap growth abort with diverged = true.
inline ExtremalSolution iterate_extremal(const GOperator& G, PCTrajectory y0, PCTrajectory z0) {
    const MonotoneConfig& cfg = G.config();
    IterationReport rep;
    rep.order_tol_used = resolve_order_tol(cfg, y0, z0);
    {
        const OrderCheck init = order_leq(y0, z0, rep.order_tol_used);
        if (!init.ok) {
            std::ostringstream os;
            os << "iterate_extremal: initial pair is not ordered (worst weighted entry "
               << init.worst << " at t=" << init.where_t << ")";
            throw std::invalid_argument(os.str());
        }
    }
    rep.m_star = estimate_m_star(G.problem().gen, cfg.C, G.problem().T);
    rep.eta = condensing_eta(cfg, G.problem().order, G.problem().T, rep.m_star);

    PCTrajectory y = std::move(y0), z = std::move(z0);
    double prev_gap = std::numeric_limits<double>::infinity();
    int growth_run = 0;
    for (int p = 1; p <= cfg.max_iter; ++p) {
        PCTrajectory y_next = G.apply(y, z);
        PCTrajectory z_next = G.apply(z, y);
        IterationReport::Step st{};
        st.dy = weighted_norm(y_next - y);
        st.dz = weighted_norm(z_next - z);
        st.gap = weighted_norm(z_next - y_next);
        double worst = 0.0;
        worst = std::min(worst, order_leq(y, y_next, rep.order_tol_used).worst);
        worst = std::min(worst, order_leq(y_next, z_next, rep.order_tol_used).worst);
        worst = std::min(worst, order_leq(z_next, z, rep.order_tol_used).worst);
        st.worst_violation = worst;
        rep.history.push_back(st);
        rep.iterations = p;
        y = std::move(y_next);
        z = std::move(z_next);
        if (st.dy <= cfg.tol && st.dz <= cfg.tol) {
            rep.converged = true;
            break;
        }
        growth_run = (st.gap > prev_gap) ? growth_run + 1 : 0;
        prev_gap = st.gap;
        if (growth_run >= 5) {
            rep.diverged = true;
            break;
        }
    }
    if (!rep.history.empty()) {
        rep.unique_within_tol = rep.converged && rep.history.back().gap <= cfg.tol;
    }
    return {std::move(y), std::move(z), std::move(rep)};
}

inline ExtremalSolution iterate_extremal(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                                         const PCTrajectory& y0, const PCTrajectory& z0,
                                         GOperatorOptions opt = {}) {
    GOperator G(prob, cfg, y0.grid_ptr(), opt);
    return iterate_extremal(G, y0, z0);
}

struct QuasiPairReport {
    bool ok = false;
    OrderCheck lower;  // of 0 <= G(y0,z0) - y0
    OrderCheck upper;  // of 0 <= z0 - G(z0,y0)
};

/// Checks the coupled lower/upper L-quasi solution property in the mild form
/// actually used by the iteration:  y0 <= G(y0,z0)  and  G(z0,y0) <= z0.
inline QuasiPairReport verify_quasi_pair(const GOperator& G, const PCTrajectory& y0,
                                         const PCTrajectory& z0, double order_tol = -1.0) {
    const double tol = order_tol >= 0.0 ? order_tol : resolve_order_tol(G.config(), y0, z0);
    QuasiPairReport rep;
    rep.lower = order_leq(y0, G.apply(y0, z0), tol);
    rep.upper = order_leq(G.apply(z0, y0), z0, tol);
    rep.ok = rep.lower.ok && rep.upper.ok;
    return rep;
}

inline QuasiPairReport verify_quasi_pair(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                                         const PCTrajectory& y0, const PCTrajectory& z0,
                                         GOperatorOptions opt = {}) {
    GOperator G(prob, cfg, y0.grid_ptr(), opt);
    return verify_quasi_pair(G, y0, z0);
}

struct MonteCarloCheck {
    int samples = 0;
    int failures = 0;
    double worst_margin = 0.0;  // most negative margin seen (>= 0 means clean)
    double worst_time = 0.0;
    bool pass = true;
};

struct HypothesisReport {
    double lambda = 0.0;
    double m_star = 0.0;
    double eta = 0.0;
    /// Smallest uniform partition count driving the per-piece eta below 1;
    /// 0 when eta < 1 already, -1 when refinement cannot achieve it.
    int partition_n = 0;
    double sum_Mk = 0.0;
    double a2star_rhs_literal = 0.0;   // Gamma(mu-1) denominator, as printed
    double a2star_rhs_repaired = 0.0;  // Gamma(mu+1) denominator
    bool a2star_ok_literal = false;
    bool a2star_ok_repaired = false;
    MonteCarloCheck a1, a2, a5;
    bool a5_checked = false;
    double a5_implied_L1 = 0.0;
    std::vector<std::string> warnings;
    std::uint64_t seed = 0;
    bool all_pass = true;
};

/// Monte-Carlo falsification of A(1)/A(2) (and A(5) when its constants are
/// configured) on ordered quadruples sampled inside [y0, z0], plus the eta
/// arithmetic and both readings of the A(2*) inequality.
inline HypothesisReport check_hypotheses(const EvolutionProblem& prob, const MonotoneConfig& cfg,
                                         const OperatorBounds& bounds, const PCTrajectory& y0,
                                         const PCTrajectory& z0, int sample_budget,
                                         std::uint64_t seed) {
    prob.validate();
    if (sample_budget < 100) throw std::invalid_argument("check_hypotheses: sample budget must be >= 100");
    if (!y0.compatible(z0)) throw std::invalid_argument("check_hypotheses: pair grid mismatch");
    HypothesisReport rep;
    rep.warnings = validate_config(cfg, prob);
    rep.seed = seed;
    rep.lambda = prob.order.lambda();
    rep.m_star = bounds.M_star;
    rep.eta = condensing_eta(cfg, prob.order, prob.T, bounds.M_star);

    const double mu = prob.order.mu;
    const double lam = rep.lambda;
    for (double m : cfg.M_k) rep.sum_Mk += m;
    const double head = gamma_fn(lam) * gamma_fn(mu + 1.0) -
                        4.0 * bounds.M_star * (2.0 * cfg.L1 + cfg.C) * std::pow(prob.T, mu);
    const double tpow = std::pow(prob.T, lam - 1.0);
    rep.a2star_rhs_literal = head / (4.0 * bounds.M_star * tpow * gamma_fn(mu - 1.0));
    rep.a2star_rhs_repaired = head / (4.0 * bounds.M_star * tpow * gamma_fn(mu + 1.0));
    rep.a2star_ok_literal = rep.sum_Mk <= rep.a2star_rhs_literal;
    rep.a2star_ok_repaired = rep.sum_Mk <= rep.a2star_rhs_repaired;

    if (rep.eta < 1.0) {
        rep.partition_n = 0;
    } else {
        double max_mk = 0.0;
        for (double m : cfg.M_k) max_mk = std::max(max_mk, m);
        rep.partition_n = -1;
        for (int n = 2; n <= 1000000; ++n) {
            const double piece = prob.T / n;
            const double eta_n = 4.0 * bounds.M_star *
                                 (max_mk * std::pow(piece, lam - 1.0) / gamma_fn(lam) +
                                  (2.0 * cfg.L1 + cfg.C) * std::pow(piece, mu) / gamma_fn(mu + 1.0));
            if (eta_n < 1.0) {
                rep.partition_n = n;
                break;
            }
        }
        if (rep.partition_n < 0) {
            rep.warnings.push_back(
                "eta >= 1 and the impulse term grows under refinement (lambda < 1): no uniform "
                "partition drives the per-piece eta below 1");
        }
    }

    const double slack = resolve_order_tol(cfg, y0, z0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const TimeGrid& g = y0.grid();
    const int dim = y0.dim();
    std::uniform_int_distribution<std::size_t> node_pick(1, g.size() - 1);

    auto sample_between = [&](const Vector& lo, const Vector& hi, Vector& a, Vector& b) {
        a.resize(dim);
        b.resize(dim);
        for (int c = 0; c < dim; ++c) {
            double u1 = unif(rng), u2 = unif(rng);
            if (u1 > u2) std::swap(u1, u2);
            a(c) = lo(c) + u1 * (hi(c) - lo(c));
            b(c) = lo(c) + u2 * (hi(c) - lo(c));
        }
    };

    auto record = [&](MonteCarloCheck& chk, double margin, double t) {
        ++chk.samples;
        if (margin < chk.worst_margin) {
            chk.worst_margin = margin;
            chk.worst_time = t;
        }
        if (margin < -slack) {
            ++chk.failures;
            chk.pass = false;
        }
    };

    rep.a5_checked = cfg.C_star.has_value() && cfg.L_star.has_value();
    if (rep.a5_checked) {
        rep.a5_implied_L1 = bounds.N_tilde * (*cfg.C_star + cfg.C + *cfg.L_star + cfg.L) +
                            cfg.C + cfg.L;
    }

    Vector ylo, yhi, zlo, zhi;
    for (int s = 0; s < sample_budget; ++s) {
        const std::size_t i = node_pick(rng);
        const double t = g.node(i);
        const Vector& lo = y0.value(i);
        const Vector& hi = z0.value(i);
        sample_between(lo, hi, ylo, yhi);
        sample_between(lo, hi, zlo, zhi);
        const Vector g1 = prob.g(t, ylo, zhi);  // g(t, y1, z1) with z1 = zhi
        const Vector g2 = prob.g(t, yhi, zlo);  // g(t, y2, z2) with z2 = zlo
        // A(1): g(t,y2,z2) - g(t,y1,z1) >= -C (y2-y1) - L (z1-z2)
        const Vector a1_margin = g2 - g1 + cfg.C * (yhi - ylo) + cfg.L * (zhi - zlo);
        record(rep.a1, a1_margin.minCoeff(), t);
        if (rep.a5_checked) {
            const Vector a5_margin =
                *cfg.C_star * (yhi - ylo) + *cfg.L_star * (zhi - zlo) - (g2 - g1);
            record(rep.a5, a5_margin.minCoeff(), t);
        }
        if (!prob.impulses.empty()) {
            const std::size_t k = s % prob.impulses.size();
            const std::size_t ik = g.impulse_node(k);
            sample_between(y0.value(ik), z0.value(ik), ylo, yhi);
            sample_between(y0.value(ik), z0.value(ik), zlo, zhi);
            const Vector p1 = prob.impulses[k].phi(ylo, zhi);
            const Vector p2 = prob.impulses[k].phi(yhi, zlo);
            record(rep.a2, (p2 - p1).minCoeff(), g.impulse_time(k));
        }
    }
    rep.all_pass = rep.a1.pass && rep.a2.pass && (!rep.a5_checked || rep.a5.pass);
    return rep;
}

}  // namespace hfe

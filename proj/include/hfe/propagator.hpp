#pragma once

// Subordinated operator families built from the shifted semigroup
// R(t) = e^{-Ct} Q(t):
//
//   P*(t) = int_0^inf mu theta xi_mu(theta) R(t^mu theta) dtheta
//   K*(t) = t^{mu-1} P*(t)
//   S*(t) = I^{nu(1-mu)} K*(t)
//
// For a diagonalizable generator everything is diagonal in the eigenbasis of
// A + CI: per eigenvalue d the scalar factor of P* is
//   chi(t) = sum_q c_q exp(-d t^mu theta_q),   c_q = w_q mu theta_q xi_mu(theta_q),
// which subordinates the scalar semigroup through the fixed density rule.
// chi is tabulated once (geometric grid in t^mu, cubic interpolation) and the
// S* factor is obtained by product integration of s^{mu-1} chi(s) against the
// exact incomplete-Beta moments of the (lag-s)^{alpha-1} s^{mu-1} kernel on a
// graded helper grid.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hfe/grid.hpp"
#include "hfe/operators.hpp"
#include "hfe/quadrature.hpp"
#include "hfe/specfun.hpp"

namespace hfe {

struct PropagatorOptions {
    int density_node_count = 400;
    int psi_table_size = 4000;
    int helper_nodes = 2048;
    double helper_grading = 0.0;  // 0 -> max(2, 2/mu)
};

class Propagator {
  public:
    Propagator(const Generator& gen, double C, FractionalOrder order, double T,
               PropagatorOptions opt = {})
        : order_(order), C_(C), T_(T), dim_(gen.dim()), opt_(opt) {
        if (!(C >= 0.0)) throw std::domain_error("Propagator: C must be nonnegative");
        if (!(T > 0.0)) throw std::domain_error("Propagator: horizon must be positive");
        if (!gen.diagonalizable()) {
            std::ostringstream os;
            os << "Propagator: generator is not diagonalizable (residual "
               << gen.spectral_residual() << "); subordinated families unavailable";
            throw std::invalid_argument(os.str());
        }
        V_ = gen.eigenvectors();
        Vinv_ = gen.eigenvectors_inverse();
        d_.resize(dim_);
        real_spectrum_ = true;
        for (int p = 0; p < dim_; ++p) {
            d_[p] = gen.eigenvalues()(p) + C;
            if (std::fabs(d_[p].imag()) > 1e-13 * (1.0 + std::abs(d_[p]))) real_spectrum_ = false;
        }

        rule_ = density_nodes(order_.mu, opt_.density_node_count);
        // internal series budget sized for mu -> 1 where the density series
        // converges slowly
        const SeriesControl density_ctl{4000, 1e-19};
        coeff_.resize(rule_.size());
        mass_ = 0.0;
        moments_.assign(5, 0.0);
        for (std::size_t q = 0; q < rule_.size(); ++q) {
            const double th = rule_[q].theta;
            coeff_[q] = rule_[q].weight * order_.mu * th * mainardi_density(order_.mu, th, density_ctl);
            mass_ += coeff_[q];
            double tp = 1.0;
            for (int k = 0; k < 5; ++k) {
                moments_[k] += coeff_[q] * tp;
                tp *= th;
            }
        }

        build_chi_tables();
        if (order_.integral_order() > 0.0) build_helper_grid();
    }

    int dim() const { return dim_; }
    double horizon() const { return T_; }
    const FractionalOrder& order() const { return order_; }
    double shift() const { return C_; }
    const std::vector<DensityNode>& rule() const { return rule_; }
    /// sum_q c_q, the quadrature value of P*(0) (exact value 1/Gamma(mu)).
    double density_mass() const { return mass_; }
    /// Weighted small-lag limit of S*:  lim Delta^{1-lambda} S*(Delta) = jump_gain * I.
    double jump_gain() const { return mass_ * gamma_fn(order_.mu) / gamma_fn(order_.lambda()); }

    ComplexVector to_channels(const Vector& x) const {
        return Vinv_ * x.cast<std::complex<double>>();
    }
    Vector from_channels(const ComplexVector& xc) const { return (V_ * xc).real(); }

    /// Per-channel factors of P*(t).
    void p_factors(double t, std::complex<double>* out) const {
        if (!(t >= 0.0)) throw std::domain_error("Propagator: negative time");
        const double v = std::pow(t, order_.mu);
        for (int p = 0; p < dim_; ++p) out[p] = chi(p, v);
    }

    /// Per-channel factors of K*(t) = t^{mu-1} P*(t); t > 0.
    void k_factors(double t, std::complex<double>* out) const {
        if (!(t > 0.0)) throw std::domain_error("Propagator: K* needs t > 0 (kernel singularity)");
        p_factors(t, out);
        const double w = std::pow(t, order_.mu - 1.0);
        for (int p = 0; p < dim_; ++p) out[p] *= w;
    }

    /// Per-channel factors of S*(lag); lag > 0.
    void sigma_factors(double lag, std::complex<double>* out) const {
        const double alpha = order_.integral_order();
        if (alpha == 0.0) {
            k_factors(lag, out);  // S_{mu,0} = K_mu, bit for bit
            return;
        }
        if (!(lag > 0.0)) throw std::domain_error("Propagator: S* needs t > 0");
        if (lag > T_ * (1.0 + 1e-12)) throw std::domain_error("Propagator: lag beyond horizon");
        const double mu = order_.mu;

        for (int p = 0; p < dim_; ++p) out[p] = 0.0;

        // locate last full helper cell below lag
        const auto& h = helper_;
        std::size_t r_end = 0;  // cells [h_r, h_{r+1}] with h_{r+1} <= lag
        {
            auto it = std::upper_bound(h.begin(), h.end(), lag);
            r_end = static_cast<std::size_t>(it - h.begin());
            if (r_end > 0) --r_end;  // h[r_end] <= lag < h[r_end+1]
        }

        const double gl_limit = 0.9 * lag;
        for (std::size_t r = 0; r + 1 <= r_end; ++r) {
            const double s1 = h[r], s2 = h[r + 1];
            if (r >= kNearZeroCells && s2 <= gl_limit) {
                // smooth region: 4-point Gauss against the full kernel
                const std::size_t base = 4 * r;
                double f[4];
                for (int g = 0; g < 4; ++g) {
                    f[g] = gl_sw_[base + g] * std::pow(lag - gl_s_[base + g], alpha - 1.0);
                }
                for (int p = 0; p < dim_; ++p) {
                    const std::complex<double>* cg = &chi_gl_[p * gl_s_.size()];
                    out[p] += f[0] * cg[base] + f[1] * cg[base + 1] + f[2] * cg[base + 2] +
                              f[3] * cg[base + 3];
                }
            } else {
                beta_cell(lag, s1, s2, &chi_h_[r * dim_], &chi_h_[(r + 1) * dim_], out);
            }
        }
        // partial final cell [h_{r_end}, lag]
        const double s1 = (r_end == 0) ? 0.0 : h[r_end];
        if (lag > s1) {
            chi_scratch_.resize(dim_);
            const double v = std::pow(lag, mu);
            for (int p = 0; p < dim_; ++p) chi_scratch_[p] = chi(p, v);
            beta_cell(lag, s1, lag, &chi_h_[r_end * dim_], chi_scratch_.data(), out);
        }
        const double inv_gamma_alpha = 1.0 / gamma_fn(alpha);
        for (int p = 0; p < dim_; ++p) out[p] *= inv_gamma_alpha;
    }

    Vector apply_p(double t, const Vector& x) const { return apply_diag(x, [&](std::complex<double>* f) { p_factors(t, f); }); }
    Vector apply_k(double t, const Vector& x) const { return apply_diag(x, [&](std::complex<double>* f) { k_factors(t, f); }); }
    Vector apply_s(double t, const Vector& x) const { return apply_diag(x, [&](std::complex<double>* f) { sigma_factors(t, f); }); }

    /// Scalar subordination factor chi(v) = sum_q c_q exp(-d v theta_q) at v = t^mu.
    std::complex<double> chi(int p, double v) const {
        const std::complex<double> d = d_[p];
        if (v <= 0.0) return mass_;
        if (real_spectrum_) {
            const double w = d.real() * v;
            if (w <= 0.0) return chi_direct(d, v);
            if (w < w_min_) return taylor(d, v);
            if (w > w_max_) return chi_direct(d, v);
            return lookup(shared_table_, w_min_, w_log_step_, w);
        }
        if (v < v_min_) return taylor(d, v);
        return lookup_complex(p, v);
    }

  private:
    static constexpr std::size_t kNearZeroCells = 16;

    template <typename FillFactors>
    Vector apply_diag(const Vector& x, FillFactors&& fill) const {
        if (x.size() != dim_) throw std::invalid_argument("Propagator: dimension mismatch");
        std::vector<std::complex<double>> f(dim_);
        fill(f.data());
        ComplexVector xc = to_channels(x);
        for (int p = 0; p < dim_; ++p) xc(p) *= f[p];
        Vector y = from_channels(xc);
        detail::check_finite_state(y, "Propagator");
        return y;
    }

    std::complex<double> chi_direct(std::complex<double> d, double v) const {
        std::complex<double> s = 0.0;
        for (std::size_t q = 0; q < rule_.size(); ++q) {
            s += coeff_[q] * std::exp(-d * (v * rule_[q].theta));
        }
        return s;
    }

    std::complex<double> taylor(std::complex<double> d, double v) const {
        const std::complex<double> u = d * v;
        return moments_[0] - u * moments_[1] + 0.5 * u * u * moments_[2] -
               u * u * u * moments_[3] / 6.0;
    }

    static std::complex<double> lookup(const std::vector<std::complex<double>>& tab, double x_min,
                                       double log_step, double x) {
        // cubic Lagrange on the uniform-in-log grid
        const double idx = std::log(x / x_min) / log_step;
        std::ptrdiff_t j = static_cast<std::ptrdiff_t>(std::floor(idx));
        j = std::clamp<std::ptrdiff_t>(j, 1, static_cast<std::ptrdiff_t>(tab.size()) - 3);
        const double u = idx - static_cast<double>(j);
        const double um1 = u + 1.0, up1 = u - 1.0, up2 = u - 2.0;
        const double c0 = -u * up1 * up2 / 6.0;
        const double c1 = um1 * up1 * up2 / 2.0;
        const double c2 = -um1 * u * up2 / 2.0;
        const double c3 = um1 * u * up1 / 6.0;
        return c0 * tab[j - 1] + c1 * tab[j] + c2 * tab[j + 1] + c3 * tab[j + 2];
    }

    std::complex<double> lookup_complex(int p, double v) const {
        return lookup(channel_tables_[p], v_min_, v_log_step_, v);
    }

    void build_chi_tables() {
        const int n = std::max(opt_.psi_table_size, 16);
        const double v_max = std::pow(T_, order_.mu);
        if (real_spectrum_) {
            double d_max = 0.0;
            for (const auto& d : d_) d_max = std::max(d_max, d.real());
            if (d_max <= 0.0) return;  // chi is constant or growing; direct paths cover it
            w_max_ = d_max * v_max;
            w_min_ = w_max_ * 1e-9;
            w_log_step_ = std::log(w_max_ / w_min_) / (n - 1);
            shared_table_.resize(n);
            for (int j = 0; j < n; ++j) {
                const double w = w_min_ * std::exp(j * w_log_step_);
                shared_table_[j] = chi_direct(1.0, w);  // chi depends on d v only
            }
        } else {
            v_min_ = v_max * 1e-9;
            v_log_step_ = std::log(v_max / v_min_) / (n - 1);
            channel_tables_.assign(dim_, {});
            for (int p = 0; p < dim_; ++p) {
                channel_tables_[p].resize(n);
                for (int j = 0; j < n; ++j) {
                    const double v = v_min_ * std::exp(j * v_log_step_);
                    channel_tables_[p][j] = chi_direct(d_[p], v);
                }
            }
        }
    }

    void build_helper_grid() {
        const double mu = order_.mu;
        const double q = opt_.helper_grading > 0.0 ? opt_.helper_grading : std::max(2.0, 2.0 / mu);
        const std::size_t n = static_cast<std::size_t>(std::max(opt_.helper_nodes, 64));
        helper_.resize(n + 1);
        helper_[0] = 0.0;
        for (std::size_t r = 1; r <= n; ++r) {
            helper_[r] = T_ * std::pow(static_cast<double>(r) / n, q);
        }
        // chi at the helper nodes (r = 0 holds the exact limit)
        chi_h_.assign((n + 1) * dim_, 0.0);
        for (int p = 0; p < dim_; ++p) chi_h_[p] = mass_;
        for (std::size_t r = 1; r <= n; ++r) {
            const double v = std::pow(helper_[r], mu);
            for (int p = 0; p < dim_; ++p) chi_h_[r * dim_ + p] = chi(p, v);
        }
        // per-cell 4-point Gauss data: abscissas, premultiplied weights
        // w_g * half * s_g^{mu-1}, and linearly interpolated chi at the
        // abscissas
        static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                     0.3399810435848563, 0.8611363115940526};
        static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                     0.6521451548625461, 0.3478548451374538};
        gl_s_.assign(4 * n, 0.0);
        gl_sw_.assign(4 * n, 0.0);
        chi_gl_.assign(static_cast<std::size_t>(dim_) * 4 * n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double a = helper_[r], b = helper_[r + 1];
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int g = 0; g < 4; ++g) {
                const double s = mid + half * gx[g];
                const double c2 = (s - a) / (b - a);
                gl_s_[4 * r + g] = s;
                gl_sw_[4 * r + g] = gw[g] * half * std::pow(s, mu - 1.0);
                for (int p = 0; p < dim_; ++p) {
                    chi_gl_[p * (4 * n) + 4 * r + g] =
                        (1.0 - c2) * chi_h_[r * dim_ + p] + c2 * chi_h_[(r + 1) * dim_ + p];
                }
            }
        }
    }

    /// Exact-moment cell: int_{s1}^{s2} (lag-s)^{alpha-1} s^{mu-1} lin(chi) ds
    /// accumulated into out (per channel), via incomplete-Beta differences.
    void beta_cell(double lag, double s1, double s2, const std::complex<double>* chi1,
                   const std::complex<double>* chi2, std::complex<double>* out) const {
        const double mu = order_.mu;
        const double alpha = order_.integral_order();
        const double x1 = s1 / lag, x2 = std::min(s2 / lag, 1.0);
        const double b0 = detail::beta_diff(mu, alpha, x1, x2);
        const double b1 = detail::beta_diff(mu + 1.0, alpha, x1, x2);
        const double J0 = std::pow(lag, alpha + mu - 1.0) * b0;
        const double J1 = std::pow(lag, alpha + mu) * b1 - s1 * J0;
        const double inv_ds = 1.0 / (s2 - s1);
        for (int p = 0; p < dim_; ++p) {
            out[p] += chi1[p] * J0 + (chi2[p] - chi1[p]) * (inv_ds * J1);
        }
    }

    FractionalOrder order_;
    double C_;
    double T_;
    int dim_;
    PropagatorOptions opt_;
    bool real_spectrum_ = true;

    ComplexMatrix V_, Vinv_;
    std::vector<std::complex<double>> d_;

    std::vector<DensityNode> rule_;
    std::vector<double> coeff_;
    std::vector<double> moments_;  // sum c_q theta^k, k = 0..4
    double mass_ = 0.0;

    // shared table chi(w), w = d v, for real spectra
    std::vector<std::complex<double>> shared_table_;
    double w_min_ = 0.0, w_max_ = 0.0, w_log_step_ = 1.0;
    // per-channel tables chi_p(v) for complex spectra
    std::vector<std::vector<std::complex<double>>> channel_tables_;
    double v_min_ = 0.0, v_log_step_ = 1.0;

    // helper grid for the fractional integral defining S*
    std::vector<double> helper_;
    std::vector<std::complex<double>> chi_h_;     // [r][p]
    std::vector<double> gl_s_, gl_sw_;            // [4r+g]
    std::vector<std::complex<double>> chi_gl_;    // [p][4r+g]
    mutable std::vector<std::complex<double>> chi_scratch_;
};

/// P*_mu(t) x by direct subordination of the (possibly shifted) semigroup;
/// works for any generator, including non-diagonalizable ones.
inline Vector p_mu_apply(const Generator& gen, double C, const FractionalOrder& order, double t,
                         const Vector& x, int nodes = 400) {
    if (!(t > 0.0)) throw std::domain_error("p_mu_apply: t must be positive");
    const SeriesControl density_ctl{4000, 1e-19};
    const auto rule = density_nodes(order.mu, nodes);
    Vector acc = Vector::Zero(gen.dim());
    const double v = std::pow(t, order.mu);
    for (const auto& nd : rule) {
        const double c = nd.weight * order.mu * nd.theta * mainardi_density(order.mu, nd.theta, density_ctl);
        acc += c * perturbed_semigroup_apply(gen, C, v * nd.theta, x);
    }
    detail::check_finite_state(acc, "p_mu_apply");
    return acc;
}

/// K*_mu(t) x = t^{mu-1} P*_mu(t) x; the kernel is singular at t = 0.
inline Vector k_mu_apply(const Generator& gen, double C, const FractionalOrder& order, double t,
                         const Vector& x, int nodes = 400) {
    if (!(t > 0.0)) throw std::domain_error("k_mu_apply: t must be positive (kernel singularity)");
    return std::pow(t, order.mu - 1.0) * p_mu_apply(gen, C, order, t, x, nodes);
}

/// S*_{mu,nu}(t) x = (I^{nu(1-mu)} K*_mu)(t) x. Requires a diagonalizable
/// generator (the fractional integral runs over the spectral channels).
inline Vector s_munu_apply(const Generator& gen, double C, const FractionalOrder& order, double t,
                           const Vector& x, PropagatorOptions opt = {}) {
    if (!(t > 0.0)) throw std::domain_error("s_munu_apply: t must be positive");
    Propagator prop(gen, C, order, t, opt);
    return prop.apply_s(t, x);
}

/// Convolution  int_0^{t} (t-s)^{mu-1} P*_mu(t-s) h(s) ds  at grid node t_idx,
/// with h piecewise linear on the nodes and P* frozen at the kernel midpoint
/// of each cell.
inline Vector volterra_convolve(const Propagator& prop, const TimeGrid& grid,
                                const std::vector<Vector>& h, std::size_t t_idx) {
    if (t_idx >= grid.size()) throw std::out_of_range("volterra_convolve: node index out of range");
    if (h.size() <= t_idx) throw std::invalid_argument("volterra_convolve: samples must cover nodes <= t_eval");
    const int dim = prop.dim();
    if (t_idx == 0) return Vector::Zero(dim);
    const double mu = prop.order().mu;
    const double t = grid.node(t_idx);
    ComplexVector acc = ComplexVector::Zero(dim);
    std::vector<std::complex<double>> f(dim);
    for (std::size_t j = 0; j + 1 <= t_idx; ++j) {
        const double s0 = grid.node(j), s1 = grid.node(j + 1);
        const auto m = detail::kernel_moments(mu, t, s0, s1);
        prop.p_factors(t - 0.5 * (s0 + s1), f.data());
        const double slope_w = m.M1 / (s1 - s0);
        ComplexVector cell = (m.M0 - slope_w) * prop.to_channels(h[j]) +
                             slope_w * prop.to_channels(h[j + 1]);
        for (int p = 0; p < dim; ++p) acc(p) += f[p] * cell(p);
    }
    Vector y = prop.from_channels(acc);
    detail::check_finite_state(y, "volterra_convolve");
    return y;
}

/// Same, constructing the propagator on the fly.
inline Vector volterra_convolve(const Generator& gen, double C, const FractionalOrder& order,
                                const TimeGrid& grid, const std::vector<Vector>& h,
                                std::size_t t_idx, PropagatorOptions opt = {}) {
    Propagator prop(gen, C, order, grid.horizon(), opt);
    return volterra_convolve(prop, grid, h, t_idx);
}

/// One bound check of Remark "the above two operators are positive ... " /
/// Lemma on operator bounds: ||S*(t)|| <= M* t^{lambda-1}/Gamma(lambda) and
/// ||P*(t)|| <= M*/Gamma(mu), in the induced max-row-sum norm.
struct BoundCheck {
    double t;
    double s_norm, s_bound, s_margin;
    double p_norm, p_bound, p_margin;
    bool pass;
};

struct BoundsReport {
    std::vector<BoundCheck> checks;
    bool all_pass = true;
};

inline BoundsReport verify_operator_bounds(const Generator& gen, double C,
                                           const FractionalOrder& order,
                                           const OperatorBounds& bounds,
                                           const std::vector<double>& t_grid,
                                           PropagatorOptions opt = {}) {
    if (t_grid.empty()) throw std::invalid_argument("verify_operator_bounds: empty t grid");
    double t_max = 0.0;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw std::domain_error("verify_operator_bounds: t grid must be positive");
        t_max = std::max(t_max, t);
    }
    Propagator prop(gen, C, order, t_max, opt);
    const double lam = order.lambda();
    BoundsReport report;
    for (double t : t_grid) {
        BoundCheck c{};
        c.t = t;
        c.s_norm = operator_inf_norm(gen.dim(), [&](const Vector& v) { return prop.apply_s(t, v); });
        c.p_norm = operator_inf_norm(gen.dim(), [&](const Vector& v) { return prop.apply_p(t, v); });
        c.s_bound = bounds.M_star * std::pow(t, lam - 1.0) / gamma_fn(lam);
        c.p_bound = bounds.M_star / gamma_fn(order.mu);
        c.s_margin = c.s_bound - c.s_norm;
        c.p_margin = c.p_bound - c.p_norm;
        const double slack_s = 1e-7 * (1.0 + c.s_bound);
        const double slack_p = 1e-7 * (1.0 + c.p_bound);
        c.pass = c.s_margin >= -slack_s && c.p_margin >= -slack_p;
        report.all_pass = report.all_pass && c.pass;
        report.checks.push_back(c);
    }
    return report;
}

}  // namespace hfe

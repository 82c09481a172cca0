#pragma once

// Scalar special functions: gamma, two-parameter Mittag-Leffler, the
// Mainardi (M-Wright) probability density xi_mu, and a fixed quadrature
// rule for subordination integrals over (0,inf).

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hfe {

/// Truncation control for series evaluations.
struct SeriesControl {
    int max_terms = 400;
    double abs_tol = 1e-15;
};

inline double gamma_fn(double x) {
    if (std::isnan(x)) throw std::domain_error("gamma_fn: NaN argument");
    if (x <= 0.0 && x == std::floor(x)) {
        std::ostringstream os;
        os << "gamma_fn: pole at nonpositive integer x=" << x;
        throw std::domain_error(os.str());
    }
    return std::tgamma(x);
}

namespace detail {

inline constexpr long double kPiL = std::numbers::pi_v<long double>;

// 1/Gamma(x), zero at the poles. Used by the Mittag-Leffler asymptotics
// where Gamma(b - a k) walks through nonpositive integers.
inline long double reciprocal_gamma(long double x) {
    if (x <= 0.0L) {
        const long double r = std::fabs(x - std::round(x));
        if (r < 1e-12L) return 0.0L;
    }
    return 1.0L / std::tgamma(x);
}

// Asymptotic expansion of E_{a,b}(z) for large |z|, real z, 0 < a <= 1.
// For z -> -inf:  E ~ -sum_{k>=1} z^{-k}/Gamma(b-ak).
// For z -> +inf:  the exponentially large term (1/a) z^{(1-b)/a} e^{z^{1/a}}
// is added on top of the algebraic part.
inline double mittag_leffler_asymptotic(double a, double b, double z) {
    const long double zi = 1.0L / static_cast<long double>(z);
    long double sum = 0.0L;
    long double zp = zi;
    long double smallest = 1e300L;
    for (int k = 1; k <= 60; ++k) {
        const long double term = zp * reciprocal_gamma(static_cast<long double>(b) -
                                                       static_cast<long double>(a) * k);
        const long double mag = std::fabs(term);
        if (mag > smallest && k > 3) break;  // optimal truncation
        if (mag < smallest && mag > 0.0L) smallest = mag;
        sum += term;
        zp *= zi;
    }
    long double value = -sum;
    if (z > 0.0) {
        const long double lz = std::log(static_cast<long double>(z));
        const long double expo = std::exp(lz / a);
        value += std::exp(expo + lz * (1.0L - b) / a) / a;
    }
    return static_cast<double>(value);
}

}  // namespace detail

/// Two-parameter Mittag-Leffler function E_{a,b}(z) = sum z^n / Gamma(an+b),
/// real argument, a in (0,2], b > 0.
///
/// Plain series below |z| = 15; for a <= 1 and larger |z| the standard
/// asymptotic expansion takes over (the series loses all digits by
/// cancellation there). For a in (1,2] the series stays well conditioned
/// and is used throughout.
inline double mittag_leffler(double a, double b, double z, SeriesControl ctl = {}) {
    if (!(a > 0.0) || a > 2.0) throw std::domain_error("mittag_leffler: a must lie in (0,2]");
    if (!(b > 0.0)) throw std::domain_error("mittag_leffler: b must be positive");
    if (ctl.max_terms < 1) throw std::domain_error("mittag_leffler: max_terms < 1");
    if (z == 0.0) return 1.0 / gamma_fn(b);

    if (std::fabs(z) > 15.0 && a <= 1.0) return detail::mittag_leffler_asymptotic(a, b, z);

    const long double la = a, lb = b;
    const long double lnz = std::log(std::fabs(static_cast<long double>(z)));
    const bool neg = z < 0.0;
    long double sum = 1.0L / std::tgamma(lb);
    long double prev_mag = std::fabs(sum);
    bool decreasing = false;
    for (int n = 1; n <= ctl.max_terms; ++n) {
        const long double mag = std::exp(n * lnz - std::lgamma(la * n + lb));
        const long double term = (neg && (n & 1)) ? -mag : mag;
        sum += term;
        if (mag < prev_mag) decreasing = true;
        if (decreasing && mag < static_cast<long double>(ctl.abs_tol)) {
            return static_cast<double>(sum);
        }
        prev_mag = mag;
    }
    std::ostringstream os;
    os << "mittag_leffler: series not converged within " << ctl.max_terms
       << " terms for (a,b,z)=(" << a << "," << b << "," << z << ")";
    throw std::runtime_error(os.str());
}

namespace detail {

/// Decay scale of the Mainardi density: xi_mu(theta) ~ exp(-W) with
/// W = (1-mu) mu^{mu/(1-mu)} theta^{1/(1-mu)}.
inline double mainardi_decay_exponent(double mu, double theta) {
    const double B = (1.0 - mu) * std::pow(mu, mu / (1.0 - mu));
    return B * std::pow(theta, 1.0 / (1.0 - mu));
}

/// Leading-order saddle point value, valid once the decay exponent is large.
inline double mainardi_asymptotic(double mu, double theta) {
    const double W = mainardi_decay_exponent(mu, theta);
    const double pref = std::pow(mu, (2.0 * mu - 1.0) / (2.0 * (1.0 - mu))) /
                        std::sqrt(2.0 * std::numbers::pi * (1.0 - mu));
    return pref * std::pow(theta, (mu - 0.5) / (1.0 - mu)) * std::exp(-W);
}

// Series switch point: below this decay exponent the alternating series is
// evaluated in long double (peak-term cancellation stays ~9 digits below
// the result); beyond it the saddle-point form is both safer and accurate
// to ~0.5% of an already negligible value.
constexpr double kMainardiSeriesLimit = 20.0;

inline double mainardi_series(double mu, double theta, SeriesControl ctl) {
    // xi_mu(theta) = (1/(pi mu theta)) sum_{n>=1} (-1)^{n-1} theta^n
    //                Gamma(n mu + 1) sin(n pi mu) / n!
    const long double lmu = mu;
    const long double lth = theta;
    const long double lnth = std::log(lth);
    long double sum = 0.0L;
    int small_run = 0;
    for (int n = 1; n <= ctl.max_terms; ++n) {
        const long double mag =
            std::exp(n * lnth + std::lgamma(lmu * n + 1.0L) - std::lgamma(n + 1.0L));
        const long double s = std::sin(static_cast<long double>(n) * kPiL * lmu);
        const long double term = ((n & 1) ? mag : -mag) * s;
        sum += term;
        if (std::fabs(term) < static_cast<long double>(ctl.abs_tol)) {
            if (++small_run >= 3 && n > 4) {
                return static_cast<double>(sum / (kPiL * lmu * lth));
            }
        } else {
            small_run = 0;
        }
    }
    std::ostringstream os;
    os << "mainardi_density: series not converged within " << ctl.max_terms
       << " terms at theta=" << theta << " (mu=" << mu << ")";
    throw std::runtime_error(os.str());
}

}  // namespace detail

/// Mainardi density xi_mu(theta) = (1/mu) theta^{-1-1/mu} varpi_mu(theta^{-1/mu}),
/// the probability density of the subordination formula. Nonnegative on
/// (0,inf), unit mass, moments  int theta^r xi_mu dtheta = Gamma(1+r)/Gamma(1+mu r).
inline double mainardi_density(double mu, double theta, SeriesControl ctl = {}) {
    if (!(mu > 0.0) || !(mu < 1.0)) throw std::domain_error("mainardi_density: mu must lie in (0,1)");
    if (!(theta > 0.0)) throw std::domain_error("mainardi_density: theta must be positive");
    if (detail::mainardi_decay_exponent(mu, theta) > detail::kMainardiSeriesLimit) {
        return detail::mainardi_asymptotic(mu, theta);
    }
    return detail::mainardi_series(mu, theta, ctl);
}

/// One quadrature node of the subordination rule.
struct DensityNode {
    double theta;
    double weight;
};

namespace detail {

// 8-point Gauss-Legendre rule on [-1,1].
inline const double kGL8x[8] = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975362};
inline const double kGL8w[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Cutoff: keep integrating until the density has decayed through ~e^{-46}.
inline double mainardi_theta_max(double mu) {
    const double B = (1.0 - mu) * std::pow(mu, mu / (1.0 - mu));
    return std::pow(46.0 / B, 1.0 - mu);
}

}  // namespace detail

/// Deterministic quadrature rule for integrals  int_0^inf f(theta) xi_mu(theta) dtheta.
/// Composite 8-point Gauss-Legendre on panels graded toward theta=0, truncated
/// where the density has decayed below ~1e-20. The node count is rounded up to
/// a multiple of 8.
inline std::vector<DensityNode> density_nodes(double mu, int n) {
    if (n < 8) throw std::domain_error("density_nodes: need n >= 8");
    if (!(mu > 0.0) || !(mu < 1.0)) throw std::domain_error("density_nodes: mu must lie in (0,1)");
    const int panels = (n + 7) / 8;
    const double theta_max = detail::mainardi_theta_max(mu);
    std::vector<DensityNode> rule;
    rule.reserve(static_cast<std::size_t>(panels) * 8);
    for (int p = 0; p < panels; ++p) {
        const double a = theta_max * std::pow(static_cast<double>(p) / panels, 2.0);
        const double b = theta_max * std::pow(static_cast<double>(p + 1) / panels, 2.0);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < 8; ++i) {
            rule.push_back({mid + half * detail::kGL8x[i], half * detail::kGL8w[i]});
        }
    }
    return rule;
}

}  // namespace hfe

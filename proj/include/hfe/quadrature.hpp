#pragma once

// Weakly singular product-integration rules: exact moments of the kernel
// (t-s)^{alpha-1} against piecewise-linear data, incomplete-Beta cell moments
// for doubly singular kernels, the grid fractional integral, and the
// generalized Gronwall bound.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hfe/grid.hpp"
#include "hfe/specfun.hpp"

namespace hfe {
namespace detail {

/// a^p - b^p for 0 <= b <= a without cancellation.
inline double pow_diff(double a, double b, double p) {
    if (b <= 0.0) return std::pow(a, p);
    if (a == b) return 0.0;
    return -std::pow(a, p) * std::expm1(p * std::log(b / a));
}

/// Moments of the kernel (t-s)^{alpha-1} over a cell [s0,s1], s1 <= t:
///   M0 = int (t-s)^{alpha-1} ds,  M1 = int (t-s)^{alpha-1} (s-s0) ds.
struct KernelMoments {
    double M0;
    double M1;
};

inline KernelMoments kernel_moments(double alpha, double t, double s0, double s1) {
    const double a = t - s0;
    const double b = t - s1;
    const double d0 = pow_diff(a, b, alpha) / alpha;
    const double d1 = pow_diff(a, b, alpha + 1.0) / (alpha + 1.0);
    return {d0, a * d0 - d1};
}

/// Difference of lower incomplete Beta integrals
///   int_{x1}^{x2} s^{p-1} (1-s)^{q-1} ds,  0 <= x1 <= x2 <= 1,  p,q > 0.
/// Series about whichever endpoint keeps the expansion variable small; the
/// two-sided split keeps every branch at ratio <= 0.65.
inline double beta_diff(double p, double q, double x1, double x2) {
    if (x2 <= x1) return 0.0;
    if (x2 <= 0.65) {
        // (1-s)^{q-1} = sum c_k s^k, c_k = prod_{j<=k} (j-q)/j
        double sum = 0.0;
        double ck = 1.0;
        for (int k = 0; k < 400; ++k) {
            const double inc = ck * pow_diff(x2, x1, p + k) / (p + k);
            sum += inc;
            if (std::fabs(inc) < 1e-17 * (1.0 + std::fabs(sum)) && k > 2) return sum;
            ck *= (static_cast<double>(k + 1) - q) / (k + 1);
        }
        return sum;
    }
    if (x1 >= 0.65) {
        return beta_diff(q, p, 1.0 - x2, 1.0 - x1);
    }
    return beta_diff(p, q, x1, 0.65) + beta_diff(p, q, 0.65, x2);
}

}  // namespace detail

/// Fractional integral (I^alpha f)(t) = (1/Gamma(alpha)) int_0^t (t-s)^{alpha-1} f(s) ds
/// evaluated at grid node t_idx from samples of f at the nodes (piecewise
/// linear data, kernel integrated exactly). Works for scalar and vector
/// samples.
template <typename Sample>
inline Sample frac_integral(double alpha, const TimeGrid& grid, const std::vector<Sample>& samples,
                            std::size_t t_idx) {
    if (!(alpha > 0.0)) throw std::domain_error("frac_integral: alpha must be positive");
    if (t_idx >= grid.size()) throw std::out_of_range("frac_integral: node index out of range");
    if (samples.size() <= t_idx) throw std::invalid_argument("frac_integral: samples must cover nodes <= t_eval");
    const double t = grid.node(t_idx);
    Sample acc = 0.0 * samples[0];
    for (std::size_t j = 0; j + 1 <= t_idx; ++j) {
        const double s0 = grid.node(j), s1 = grid.node(j + 1);
        const auto m = detail::kernel_moments(alpha, t, s0, s1);
        const double slope_w = m.M1 / (s1 - s0);
        acc += (m.M0 - slope_w) * samples[j] + slope_w * samples[j + 1];
    }
    return acc / gamma_fn(alpha);
}

/// Right-hand side of the generalized Gronwall lemma at grid node t_idx:
///   a(t) + int_0^t [ sum_{n>=1} (b Gamma(beta))^n / Gamma(n beta) (t-s)^{n beta - 1} a(s) ] ds,
/// with each kernel moment integrated exactly against piecewise-linear a.
inline double gronwall_bound(const TimeGrid& grid, const std::vector<double>& a_samples, double b,
                             double beta, std::size_t t_idx) {
    if (!(b >= 0.0)) throw std::domain_error("gronwall_bound: b must be nonnegative");
    if (!(beta > 0.0)) throw std::domain_error("gronwall_bound: beta must be positive");
    if (t_idx >= grid.size()) throw std::out_of_range("gronwall_bound: node index out of range");
    if (a_samples.size() <= t_idx) throw std::invalid_argument("gronwall_bound: samples must cover nodes <= t_eval");
    for (std::size_t i = 0; i <= t_idx; ++i) {
        if (a_samples[i] < 0.0) throw std::domain_error("gronwall_bound: a(t) must be nonnegative");
    }
    double bound = a_samples[t_idx];
    if (b == 0.0 || t_idx == 0) return bound;

    const double log_bg = std::log(b) + std::lgamma(beta);
    for (int n = 1; n <= 400; ++n) {
        const double order = n * beta;
        // (b Gamma(beta))^n / Gamma(n beta) * int (t-s)^{n beta - 1} a(s) ds
        const double coeff = std::exp(n * log_bg - std::lgamma(order));
        const double integral = frac_integral(order, grid, a_samples, t_idx) * gamma_fn(order);
        const double term = coeff * integral;
        bound += term;
        if (std::fabs(term) < 1e-14 * (1.0 + std::fabs(bound))) return bound;
    }
    std::ostringstream os;
    os << "gronwall_bound: series not converged at t=" << grid.node(t_idx) << " (b=" << b
       << ", beta=" << beta << ")";
    throw std::runtime_error(os.str());
}

}  // namespace hfe

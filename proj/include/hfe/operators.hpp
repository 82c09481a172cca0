#pragma once

// Finite-dimensional generators and the C0-semigroup Q(t) = e^{-tA} plus its
// exponentially shifted variant R(t) = e^{-Ct} Q(t). The subordinated families
// P_mu, K_mu, S_{mu,nu} built on top of these live in propagator.hpp.

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "hfe/specfun.hpp"

namespace hfe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Fractional order pair (mu, nu) of the Hilfer derivative and the derived
/// weight exponent lambda = mu + nu - mu*nu.
struct FractionalOrder {
    double mu;
    double nu;

    static FractionalOrder of(double mu, double nu) {
        if (!(mu > 0.0) || !(mu < 1.0)) throw std::domain_error("FractionalOrder: mu must lie in (0,1)");
        if (!(nu >= 0.0) || !(nu <= 1.0)) throw std::domain_error("FractionalOrder: nu must lie in [0,1]");
        return FractionalOrder{mu, nu};
    }
    double lambda() const { return mu + nu - mu * nu; }
    /// Order of the fractional integral turning K_mu into S_{mu,nu}.
    double integral_order() const { return nu * (1.0 - mu); }
};

/// Uniform bound M* on the shifted semigroup and the cone normality constant.
struct OperatorBounds {
    double M_star = 1.0;
    double N_tilde = 1.0;
};

/// Closed linear operator A on R^dim; -A generates Q(t) = e^{-tA}.
///
/// The spectral decomposition is computed once at construction: a real
/// orthogonal one for symmetric A, a complex diagonalization otherwise.
/// Defective (non-diagonalizable) matrices keep the plain matrix-exponential
/// path but cannot feed the subordinated families.
class Generator {
  public:
    static Generator dense(Matrix A, bool symmetric_flag) {
        if (A.rows() != A.cols() || A.rows() < 1) {
            throw std::invalid_argument("Generator: matrix must be square and nonempty");
        }
        if (!A.allFinite()) throw std::invalid_argument("Generator: matrix entries must be finite");
        if (symmetric_flag) {
            const double skew = (A - A.transpose()).cwiseAbs().maxCoeff();
            if (skew > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff())) {
                std::ostringstream os;
                os << "Generator: symmetric_flag set but max |A - A^T| = " << skew;
                throw std::invalid_argument(os.str());
            }
        }
        return Generator(std::move(A), symmetric_flag);
    }

    int dim() const { return static_cast<int>(A_.rows()); }
    const Matrix& matrix() const { return A_; }
    bool symmetric() const { return symmetric_; }

    bool diagonalizable() const { return diagonalizable_; }
    /// Eigenvalues of A (real spectrum stored with zero imaginary parts).
    const ComplexVector& eigenvalues() const { return eigs_; }
    const ComplexMatrix& eigenvectors() const { return V_; }
    const ComplexMatrix& eigenvectors_inverse() const { return Vinv_; }
    /// Residual max |A - V D V^{-1}| of the diagonalization.
    double spectral_residual() const { return spectral_residual_; }

  private:
    Generator(Matrix A, bool symmetric) : A_(std::move(A)), symmetric_(symmetric) {
        const int n = dim();
        if (symmetric_) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(A_);
            eigs_ = es.eigenvalues().cast<std::complex<double>>();
            V_ = es.eigenvectors().cast<std::complex<double>>();
            Vinv_ = es.eigenvectors().transpose().cast<std::complex<double>>();
            diagonalizable_ = true;
            spectral_residual_ = 0.0;
        } else if (n == 1) {
            eigs_ = ComplexVector::Constant(1, A_(0, 0));
            V_ = ComplexMatrix::Identity(1, 1);
            Vinv_ = ComplexMatrix::Identity(1, 1);
            diagonalizable_ = true;
            spectral_residual_ = 0.0;
        } else {
            Eigen::ComplexEigenSolver<ComplexMatrix> es(A_.cast<std::complex<double>>());
            eigs_ = es.eigenvalues();
            V_ = es.eigenvectors();
            Eigen::FullPivLU<ComplexMatrix> lu(V_);
            if (lu.isInvertible()) {
                Vinv_ = lu.inverse();
                const double resid =
                    (V_ * eigs_.asDiagonal() * Vinv_ - A_.cast<std::complex<double>>())
                        .cwiseAbs()
                        .maxCoeff();
                spectral_residual_ = resid;
                diagonalizable_ = resid < 1e-8 * (1.0 + A_.cwiseAbs().maxCoeff());
            } else {
                diagonalizable_ = false;
                spectral_residual_ = std::numeric_limits<double>::infinity();
            }
        }
    }

    Matrix A_;
    bool symmetric_ = false;
    bool diagonalizable_ = false;
    double spectral_residual_ = 0.0;
    ComplexVector eigs_;
    ComplexMatrix V_;
    ComplexMatrix Vinv_;
};

namespace detail {

inline void check_finite_state(const Vector& x, const char* who) {
    if (!x.allFinite()) {
        std::ostringstream os;
        os << who << ": state overflowed the floating range";
        throw std::runtime_error(os.str());
    }
}

}  // namespace detail

/// Q(t) x = e^{-tA} x. Eigendecomposition when symmetric, otherwise
/// scaling-and-squaring Pade on the full matrix.
inline Vector semigroup_apply(const Generator& gen, double t, const Vector& x) {
    if (!(t >= 0.0)) throw std::domain_error("semigroup_apply: t must be nonnegative");
    if (x.size() != gen.dim()) throw std::invalid_argument("semigroup_apply: dimension mismatch");
    if (t == 0.0) return x;
    Vector y;
    if (gen.symmetric() || gen.dim() == 1) {
        ComplexVector xc = gen.eigenvectors_inverse() * x.cast<std::complex<double>>();
        for (int i = 0; i < xc.size(); ++i) {
            xc(i) *= std::exp(-t * gen.eigenvalues()(i));
        }
        y = (gen.eigenvectors() * xc).real();
    } else {
        const Matrix E = (-t * gen.matrix()).exp();
        y = E * x;
    }
    detail::check_finite_state(y, "semigroup_apply");
    return y;
}

/// R(t) x = e^{-Ct} Q(t) x, the semigroup of the shifted generator A + C I.
inline Vector perturbed_semigroup_apply(const Generator& gen, double C, double t, const Vector& x) {
    if (!(C >= 0.0)) throw std::domain_error("perturbed_semigroup_apply: C must be nonnegative");
    if (!(t >= 0.0)) throw std::domain_error("perturbed_semigroup_apply: t must be nonnegative");
    Vector y = semigroup_apply(gen, t, x) * std::exp(-C * t);
    detail::check_finite_state(y, "perturbed_semigroup_apply");
    return y;
}

/// Induced max-row-sum norm of the matrix of a linear map, assembled column
/// by column from its action on the basis.
template <typename Apply>
inline double operator_inf_norm(int dim, Apply&& apply) {
    Matrix M(dim, dim);
    Vector e = Vector::Zero(dim);
    for (int j = 0; j < dim; ++j) {
        e(j) = 1.0;
        M.col(j) = apply(e);
        e(j) = 0.0;
    }
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Empirical sup_t ||R(t)|| over a log-spaced sample of (0,T], floored at 1
/// (the value at t=0).
inline double estimate_m_star(const Generator& gen, double C, double T, int samples = 48) {
    if (!(T > 0.0)) throw std::domain_error("estimate_m_star: T must be positive");
    double m = 1.0;
    for (int i = 0; i < samples; ++i) {
        const double t = T * std::pow(1e-4, 1.0 - static_cast<double>(i + 1) / samples);
        const double nrm = operator_inf_norm(
            gen.dim(), [&](const Vector& v) { return perturbed_semigroup_apply(gen, C, t, v); });
        m = std::max(m, nrm);
    }
    return m;
}

}  // namespace hfe

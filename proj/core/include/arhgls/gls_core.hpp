#pragma once

#include <vector>

#include <Eigen/Core>

#include "arhgls/spectral_ops.hpp"

namespace arhgls {

/// N x N matrix with entries lam^{|i-j|} for a single autocorrelation
/// eigenvalue lam, |lam| < 1.
struct ToeplitzAr1 {
    double lam = 0.0;
    int N = 1;

    ToeplitzAr1(double lam_, int N_);
};

/// Symmetric tridiagonal N x N matrix stored as its main diagonal and first
/// off-diagonal.
struct SymTridiag {
    Eigen::VectorXd diag;
    Eigen::VectorXd off;

    int size() const { return static_cast<int>(diag.size()); }
    Eigen::MatrixXd dense() const;
    /// x^T * this * y.
    double quad_form(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    /// this * m, column by column.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
};

/// Inverse covariance of the error block: per basis frequency k, the N x N
/// tridiagonal (1/lambda_k(R0_eff)) * inverse of the lam_k Toeplitz matrix.
/// Frequencies are independent, so the full inverse is the direct sum of the
/// stored blocks.
struct BlockPrecision {
    std::vector<SymTridiag> per_frequency;
    int N = 0;
    int K = 0;

    static BlockPrecision identity(int K, int N);
};

/// Estimation result. covariance_blocks[k] is the p x p matrix
/// (X^T C^{-1} X)^{-1} restricted to frequency k (meaningful on the
/// per-frequency path and extracted from the dense solve otherwise).
struct GlsFit {
    std::vector<HFunction> beta_hat;
    std::vector<Eigen::MatrixXd> covariance_blocks;
    std::vector<HFunction> residuals;
    double loss = 0.0;
};

/// Dense realization, entry (i, j) = lam^{|i-j|}.
Eigen::MatrixXd toeplitz_dense(const ToeplitzAr1& t);

/// Closed-form inverse: with s = 1/(1-lam^2), corners s, interior diagonal
/// s*(1+lam^2), off-diagonal -s*lam. Requires |lam| < 1 - 1e-10.
SymTridiag toeplitz_inverse_tridiag(const ToeplitzAr1& t);

/// Upper-triangular factor with A^T A equal to the Toeplitz matrix: first row
/// (1, lam, lam^2, ...), rows i >= 2 scaled by sqrt(1-lam^2) and continuing
/// the same geometric pattern from the diagonal.
Eigen::MatrixXd cholesky_factor_A(const ToeplitzAr1& t);

/// Block k = (1/lambda_k(r0_eff)) * toeplitz_inverse_tridiag(lambda_k(rho)).
/// r0_eff must be strictly positive (apply a floor first if needed).
BlockPrecision build_block_precision(const SpectralOperator& r0_eff,
                                     const SpectralOperator& rho, int N);

/// sum_k r_k^T block_k r_k over the frequency slices of the residuals.
double rkhs_loss(const BlockPrecision& P, const std::vector<HFunction>& resid);

/// Weighted least squares with the given block precision. Diagonal panels
/// decouple per frequency into p x p solves; non-diagonal panels fall back to
/// the dense (pK) x (pK) normal equations (frequencies coupled through the
/// regressors while the precision stays frequency-diagonal).
GlsFit gls_estimate(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                    const BlockPrecision& P);

/// gls_estimate with identity precision blocks.
GlsFit ols_estimate(const RegressorPanel& panel, const std::vector<HFunction>& Y);

/// Per-frequency standardization z_k = (X^T C^{-1} X)_k^{1/2} (beta_hat -
/// beta)_k via the symmetric square root of the stored p x p information.
/// Layout: entry k*p + j is parameter j at frequency k (0-based). Under the
/// true covariance each entry is standard normal.
Eigen::VectorXd normalized_statistic(const GlsFit& fit,
                                     const std::vector<HFunction>& beta_true);

} // namespace arhgls

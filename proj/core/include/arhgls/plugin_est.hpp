#pragma once

#include <vector>

#include <Eigen/Core>

#include "arhgls/gls_core.hpp"

namespace arhgls {

/// Lag-0 and lag-1 residual covariance matrices in basis coefficients.
struct EmpiricalCov {
    Eigen::MatrixXd r0_hat;
    Eigen::MatrixXd r1_hat;
    int N = 0;
};

/// Sorted eigenpairs of the empirical lag-0 covariance. vectors.col(j) is the
/// j-th eigenvector; the sign convention fixes its largest-magnitude entry
/// positive so downstream estimates are reproducible.
struct EmpiricalEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    int dim() const { return static_cast<int>(values.size()); }
};

/// Autocorrelation estimate on the leading empirical eigendirections.
/// coeffs(i, j) pairs lag inner products along direction i with lead inner
/// products along direction j, divided by the j-th eigenvalue; the operator
/// acts on eigen-scores as out_j = sum_i coeffs(i, j) * s_i and is zero
/// beyond the k_N block.
struct RhoHat {
    Eigen::MatrixXd coeffs;
    int k_N = 0;
};

/// Options for the plug-in pipeline. k_N = 0 selects the truncation order
/// from the data.
struct PluginOptions {
    int k_N = 0;
    double truncation_threshold = 1.0;
};

/// Plug-in fit: the weighted estimate plus the empirical objects the
/// prediction step needs.
struct PluginFit {
    GlsFit fit;
    EmpiricalEigen eigen;
    RhoHat rho_hat;
    int k_N = 0;
    /// True when zero residuals made the covariance pipeline degenerate and
    /// the ordinary least-squares fit was returned unchanged.
    bool degenerate_ols = false;
};

/// r0_hat = (1/N) sum r_n r_n^T and r1_hat = (1/(N-1)) sum r_n r_{n+1}^T.
EmpiricalCov empirical_cov(const std::vector<HFunction>& residuals);

/// Eigenpairs of the symmetrized r0_hat, sorted nonincreasing, signs fixed.
EmpiricalEigen empirical_eigendecomposition(const EmpiricalCov& cov);

/// Componentwise estimate over the leading k_N eigendirections:
/// coeffs(i, j) = (1/(N-1)) sum_n <r_n, phi_i><r_{n+1}, phi_j> / lambda_j.
/// Directions with lambda_j below 1e-10 * lambda_1 are refused (truncation
/// too large) rather than clamped.
RhoHat estimate_rho(const std::vector<HFunction>& residuals,
                    const EmpiricalEigen& eig, int k_N);

/// Largest k with N * lambda_k^2 / ((sum_{j<=k} a_j)^2 * log N) >= threshold,
/// where a_1 = 2*sqrt(2)/(lambda_1 - lambda_2) and a_j for j >= 2 uses the
/// worse of the two adjacent spacings. Clamped to [1, min(K, N-1)] and to
/// k <= N/10.
int select_truncation(const EmpiricalEigen& eig, int N, double threshold = 1.0);

/// Full unknown-covariance pipeline: OLS, residual covariances, empirical
/// eigenbasis, rho estimate, weighted re-fit in the eigenbasis, rotation
/// back. When rho_hat is close to diagonal (off-diagonal Frobenius mass
/// under 10% of the diagonal mass, or immaterial in absolute terms) the
/// precision is the per-frequency closed form built from (lambda_jN,
/// rho_jj); otherwise it is the stationary AR(1) precision implied by the
/// full (Lambda, rho_hat) pair on the leading k_N directions, which reduces
/// to the same closed form for diagonal rho_hat. Frequencies beyond k_N are
/// weighted as serially uncorrelated with their empirical variances (floored
/// relative to the top eigenvalue) in both branches.
PluginFit plugin_gls(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                     const PluginOptions& options = {});

/// One-step-ahead prediction: the regression mean at the new time plus
/// rho_hat applied to the final fitted residual (projected on the leading
/// empirical eigendirections).
HFunction predict_response(const std::vector<RegressorOperator>& panel_row,
                           const PluginFit& fit);

/// Same predictor with an explicit previous residual; used for in-sample
/// estimates at arbitrary times.
HFunction predict_with_residual(const std::vector<RegressorOperator>& panel_row,
                                const std::vector<HFunction>& beta_hat,
                                const RhoHat& rho_hat, const EmpiricalEigen& eig,
                                const HFunction& prev_residual);

} // namespace arhgls

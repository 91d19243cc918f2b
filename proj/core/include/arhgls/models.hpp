#pragma once

#include <string>
#include <vector>

#include "arhgls/spectral_ops.hpp"

namespace arhgls {

/// Simulation model: power-law eigenvalue sequences for the error operators,
/// a parametric regressor family, and power-law true coefficient functions.
///
/// Eigenvalue laws (k >= 1):
///   lambda_k(R0 nominal) = (k+1)^{-r0_exponent}
///   lambda_k(R_delta)    = (k+1)^{-rdelta_exponent}
///   lambda_k(rho)        = (k+1)^{-rho_exponent}
/// Regressor families (j = 1..p, exponent e_j):
///   stretched_exp: x_k^j(n) = exp(-(n*k)^{e_j})
///   inverse_power: x_k^j(n) = (n*(k+1))^{-e_j}
/// True coefficients: <beta_j, phi_k> = (k+1)^{-beta_exponents[j]}.
struct ModelSpec {
    enum class Name { model1, model2, custom };
    enum class RegressorFamily { stretched_exp, inverse_power };

    Name name = Name::custom;
    double r0_exponent = 0.0;
    double rdelta_exponent = 0.0;
    double rho_exponent = 0.0;
    RegressorFamily family = RegressorFamily::stretched_exp;
    std::vector<double> regressor_exponents;
    std::vector<double> beta_exponents;
    int p = 0;
    int K = 50;
    /// Multiplies lambda(R_delta); 0 gives noise-free data.
    double noise_scale = 1.0;

    static ModelSpec model1(int K = 50);
    static ModelSpec model2(int K = 50);

    void validate() const;

    /// Nominal covariance eigenvalue law as printed for the model (used only
    /// for truncation diagnostics, not for data generation).
    SpectralOperator r0_nominal() const;
    SpectralOperator r_delta() const;
    SpectralOperator rho() const;
    /// Stationary covariance implied by (rho, R_delta):
    /// lambda_k = lambda_k(R_delta) / (1 - lambda_k(rho)^2). This is the
    /// effective R0 used for data generation and known-truth weighting; the
    /// printed nominal law is not consistent with stationarity.
    SpectralOperator r0_stationary() const;

    /// Regressor diagonal entry x_k^j(n); n and k are 1-based, j is 0-based.
    double regressor_value(int n, int k, int j) const;
    /// True coefficient functions beta_1..beta_p.
    std::vector<HFunction> beta_truth(Interval interval) const;
};

/// Panel of diagonal regressors filled from the model's closed-form
/// sequences, for observations n = 1..N.
RegressorPanel build_model_regressors(const ModelSpec& model, int N, int K);

std::string to_string(ModelSpec::Name name);

} // namespace arhgls

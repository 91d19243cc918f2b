#pragma once

#include <vector>

#include "arhgls/rng.hpp"
#include "arhgls/spectral_ops.hpp"

namespace arhgls {

/// Autoregressive error law: eps_n = rho(eps_{n-1}) + delta_n with diagonal
/// autocorrelation rho and diagonal innovation covariance r_delta.
struct ArhSpec {
    SpectralOperator rho;
    SpectralOperator r_delta;
    int K = 0;

    ArhSpec() = default;
    ArhSpec(SpectralOperator rho_, SpectralOperator r_delta_);
};

/// One simulated data set: the error path and the responses built on it.
struct SamplePath {
    std::vector<HFunction> errors;
    std::vector<HFunction> responses;
    std::uint64_t seed = 0;
};

/// One innovation draw: coefficient j independent Normal(0, lambda_j(R_delta)).
HFunction gaussian_innovation(const SpectralOperator& r_delta, Interval interval,
                              RngStream& rng);

/// Exact stationary simulation: eps_0 has coefficient k distributed
/// Normal(0, lambda_k(R_delta) / (1 - lambda_k(rho)^2)), then the recursion
/// runs burn_in extra steps before the N returned states. burn_in defaults
/// to 0 because the start is already stationary.
std::vector<HFunction> simulate_arh1(const ArhSpec& spec, int N, int burn_in,
                                     Interval interval, RngStream& rng);

/// Responses Y_n = sum_j X_n^j(beta_j) + eps_n.
std::vector<HFunction> simulate_response(const RegressorPanel& panel,
                                         const std::vector<HFunction>& beta,
                                         const std::vector<HFunction>& errors);

} // namespace arhgls

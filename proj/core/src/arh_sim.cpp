#include "arhgls/arh_sim.hpp"

#include <cmath>

namespace arhgls {

ArhSpec::ArhSpec(SpectralOperator rho_, SpectralOperator r_delta_)
    : rho(std::move(rho_)), r_delta(std::move(r_delta_)), K(rho.dim()) {
    if (rho.kind != OperatorKind::autocorrelation) {
        throw domain_error("ArhSpec: rho must be autocorrelation kind");
    }
    if (r_delta.kind != OperatorKind::covariance) {
        throw domain_error("ArhSpec: r_delta must be covariance kind");
    }
    if (rho.dim() != r_delta.dim()) {
        throw domain_error("ArhSpec: rho and r_delta K differ");
    }
}

HFunction gaussian_innovation(const SpectralOperator& r_delta, Interval interval,
                              RngStream& rng) {
    if (r_delta.kind != OperatorKind::covariance) {
        throw domain_error("gaussian_innovation: covariance kind required");
    }
    const int K = r_delta.dim();
    HFunction f = HFunction::zero(K, interval);
    for (int k = 0; k < K; ++k) {
        f.coeffs[k] = std::sqrt(r_delta.eigenvalues[k]) * rng.normal();
    }
    return f;
}

std::vector<HFunction> simulate_arh1(const ArhSpec& spec, int N, int burn_in,
                                     Interval interval, RngStream& rng) {
    if (N < 1) throw domain_error("simulate_arh1: N must be >= 1");
    if (burn_in < 0) throw domain_error("simulate_arh1: burn_in must be >= 0");
    const int K = spec.K;

    // Stationary start, coefficient-wise.
    HFunction state = HFunction::zero(K, interval);
    for (int k = 0; k < K; ++k) {
        const double lam = spec.rho.eigenvalues[k];
        const double var = spec.r_delta.eigenvalues[k] / (1.0 - lam * lam);
        state.coeffs[k] = std::sqrt(var) * rng.normal();
    }

    std::vector<HFunction> path;
    path.reserve(N);
    for (int step = 0; step < burn_in + N; ++step) {
        HFunction innov = gaussian_innovation(spec.r_delta, interval, rng);
        state.coeffs = spec.rho.eigenvalues.cwiseProduct(state.coeffs) + innov.coeffs;
        if (step >= burn_in) path.push_back(state);
    }
    return path;
}

std::vector<HFunction> simulate_response(const RegressorPanel& panel,
                                         const std::vector<HFunction>& beta,
                                         const std::vector<HFunction>& errors) {
    panel.validate();
    if (static_cast<int>(beta.size()) != panel.p()) {
        throw domain_error("simulate_response: beta count differs from panel p");
    }
    if (static_cast<int>(errors.size()) != panel.N()) {
        throw domain_error("simulate_response: error count differs from panel N");
    }
    std::vector<HFunction> Y;
    Y.reserve(panel.N());
    for (int n = 0; n < panel.N(); ++n) {
        HFunction y = errors[n];
        for (int j = 0; j < panel.p(); ++j) {
            y.coeffs += apply_regressor(panel.entries[n][j], beta[j]).coeffs;
        }
        Y.push_back(std::move(y));
    }
    return Y;
}

} // namespace arhgls

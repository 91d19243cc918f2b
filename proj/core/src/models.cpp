#include "arhgls/models.hpp"

#include <cmath>

namespace arhgls {

ModelSpec ModelSpec::model1(int K) {
    ModelSpec m;
    m.name = Name::model1;
    m.r0_exponent = 3.0;
    m.rdelta_exponent = 4.0;
    m.rho_exponent = 1.0;
    m.family = RegressorFamily::stretched_exp;
    m.regressor_exponents = {1.0 / 10.0, 15.0 / 100.0, 2.0 / 10.0};
    m.beta_exponents = {3.0 / 5.0, 7.0 / 10.0, 4.0 / 5.0};
    m.p = 3;
    m.K = K;
    return m;
}

ModelSpec ModelSpec::model2(int K) {
    ModelSpec m;
    m.name = Name::model2;
    m.r0_exponent = 11.0 / 10.0;
    m.rdelta_exponent = 12.0 / 10.0;
    m.rho_exponent = 51.0 / 100.0;
    m.family = RegressorFamily::inverse_power;
    m.regressor_exponents = {1.0 / 10.0, 2.0 / 100.0, 3.0 / 100.0};
    m.beta_exponents = {3.0 / 5.0, 7.0 / 10.0, 4.0 / 5.0};
    m.p = 3;
    m.K = K;
    return m;
}

void ModelSpec::validate() const {
    if (p < 1) throw domain_error("model: p must be >= 1");
    if (K < 1) throw domain_error("model: K must be >= 1");
    if (static_cast<int>(regressor_exponents.size()) != p ||
        static_cast<int>(beta_exponents.size()) != p) {
        throw domain_error("model: exponent lists must have length p");
    }
    if (rho_exponent <= 0.0) {
        throw domain_error("model: rho law needs a positive exponent for |lambda| < 1");
    }
    if (noise_scale < 0.0) throw domain_error("model: noise_scale must be >= 0");
}

namespace {
Eigen::VectorXd power_law(int K, double exponent, double scale = 1.0) {
    Eigen::VectorXd v(K);
    for (int k = 1; k <= K; ++k) {
        v[k - 1] = scale * std::pow(static_cast<double>(k + 1), -exponent);
    }
    return v;
}
} // namespace

SpectralOperator ModelSpec::r0_nominal() const {
    return SpectralOperator(power_law(K, r0_exponent), OperatorKind::covariance);
}

SpectralOperator ModelSpec::r_delta() const {
    return SpectralOperator(power_law(K, rdelta_exponent, noise_scale),
                            OperatorKind::covariance);
}

SpectralOperator ModelSpec::rho() const {
    return SpectralOperator(power_law(K, rho_exponent), OperatorKind::autocorrelation);
}

SpectralOperator ModelSpec::r0_stationary() const {
    Eigen::VectorXd rd = r_delta().eigenvalues;
    Eigen::VectorXd rh = rho().eigenvalues;
    Eigen::VectorXd out(K);
    for (int i = 0; i < K; ++i) out[i] = rd[i] / (1.0 - rh[i] * rh[i]);
    return SpectralOperator(out, OperatorKind::covariance);
}

double ModelSpec::regressor_value(int n, int k, int j) const {
    const double e = regressor_exponents.at(j);
    switch (family) {
        case RegressorFamily::stretched_exp:
            return std::exp(-std::pow(static_cast<double>(n) * k, e));
        case RegressorFamily::inverse_power:
            return std::pow(static_cast<double>(n) * (k + 1), -e);
    }
    throw domain_error("model: unknown regressor family");
}

std::vector<HFunction> ModelSpec::beta_truth(Interval interval) const {
    std::vector<HFunction> beta;
    beta.reserve(p);
    for (int j = 0; j < p; ++j) {
        beta.emplace_back(power_law(K, beta_exponents[j]), interval);
    }
    return beta;
}

RegressorPanel build_model_regressors(const ModelSpec& model, int N, int K) {
    if (N < 1 || K < 1) throw domain_error("build_model_regressors: N, K must be >= 1");
    model.validate();
    RegressorPanel panel;
    panel.entries.resize(N);
    for (int n = 1; n <= N; ++n) {
        panel.entries[n - 1].reserve(model.p);
        for (int j = 0; j < model.p; ++j) {
            Eigen::VectorXd diag(K);
            for (int k = 1; k <= K; ++k) {
                diag[k - 1] = model.regressor_value(n, k, j);
            }
            panel.entries[n - 1].push_back(RegressorOperator::diagonal(std::move(diag)));
        }
    }
    return panel;
}

std::string to_string(ModelSpec::Name name) {
    switch (name) {
        case ModelSpec::Name::model1: return "model1";
        case ModelSpec::Name::model2: return "model2";
        case ModelSpec::Name::custom: return "custom";
    }
    return "custom";
}

} // namespace arhgls

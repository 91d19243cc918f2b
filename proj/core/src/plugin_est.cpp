#include "arhgls/plugin_est.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

namespace arhgls {

namespace {

Eigen::MatrixXd coefficient_matrix(const std::vector<HFunction>& fs) {
    const int N = static_cast<int>(fs.size());
    const int K = fs.empty() ? 0 : fs[0].modes();
    Eigen::MatrixXd m(K, N);
    for (int n = 0; n < N; ++n) {
        if (fs[n].modes() != K) throw domain_error("functions must share K");
        m.col(n) = fs[n].coeffs;
    }
    return m;
}

/// Rotate a diagonal-or-dense regressor into the eigenbasis: Phi^T X Phi.
RegressorOperator rotate_regressor(const RegressorOperator& X,
                                   const Eigen::MatrixXd& Phi) {
    if (X.is_diagonal()) {
        return RegressorOperator::dense(Phi.transpose() *
                                        (X.diag().asDiagonal() * Phi));
    }
    return RegressorOperator::dense(Phi.transpose() * (X.as_dense() * Phi));
}

/// Weighted fit for a substantially non-diagonal rho estimate: the exact
/// stationary AR(1) precision implied by the pair (Lambda, rho_hat) on the
/// leading k_N eigendirections, with per-frequency inverse-variance weights
/// beyond (tail_weights, one entry per frequency past the block). Writing M for
/// the action of rho_hat on score vectors and Q = Lambda - M Lambda M^T for
/// the implied innovation covariance, the error precision factorizes as
///   P = L^T diag(Lambda^{-1}, Q^{-1}, ..., Q^{-1}) L,
/// L unit lower block-bidiagonal with -M subdiagonal blocks, i.e.
///   first diagonal block   Lambda^{-1} + M^T Q^{-1} M
///   interior blocks        Q^{-1} + M^T Q^{-1} M
///   last block             Q^{-1}
///   super-diagonal blocks  -M^T Q^{-1}.
/// P is positive semidefinite by construction and coincides with the
/// per-frequency closed form whenever rho_hat is exactly diagonal. Since
/// rho_hat acts only on the leading k_N directions, frequencies beyond k_N
/// decouple with unit weight and the coupled system stays N * k_N however
/// large K is.
///
/// A noisy rho_hat can make the implied Q indefinite; its eigenvalues are
/// clamped at 1e-4 * lambda_1, which keeps the weighting positive definite
/// with a bounded weight ceiling instead of failing the repetition.
GlsFit gls_markov_precision(const RegressorPanel& panel,
                            const std::vector<HFunction>& Y,
                            const Eigen::VectorXd& lambda_top,
                            const Eigen::MatrixXd& rho_coeffs,
                            const Eigen::VectorXd& tail_weights) {
    const int N = panel.N();
    const int p = panel.p();
    const int K = panel.K();
    const int c = static_cast<int>(lambda_top.size());
    const int u = K - c;

    // rho_hat action on scores is out = coeffs^T s, so M = coeffs^T and
    // M Lambda M^T = coeffs^T Lambda coeffs, M^T Q^{-1} M = coeffs Qinv coeffs^T.
    Eigen::MatrixXd Q =
        Eigen::MatrixXd(lambda_top.asDiagonal()) -
        rho_coeffs.transpose() * lambda_top.asDiagonal() * rho_coeffs;
    Q = ((Q + Q.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qes(Q);
    if (qes.info() != Eigen::Success) {
        throw numerical_error("innovation covariance eigendecomposition failed "
                              "in the dense precision fallback");
    }
    const double qfloor = 1e-4 * lambda_top[0];
    const Eigen::VectorXd qvals = qes.eigenvalues().cwiseMax(qfloor);
    const Eigen::MatrixXd Qinv = qes.eigenvectors() *
                                 qvals.cwiseInverse().asDiagonal() *
                                 qes.eigenvectors().transpose();

    const Eigen::MatrixXd MtQiM = rho_coeffs * Qinv * rho_coeffs.transpose();
    const Eigen::MatrixXd A_first =
        Eigen::MatrixXd(lambda_top.cwiseInverse().asDiagonal()) + MtQiM;
    const Eigen::MatrixXd A_mid = Qinv + MtQiM;
    const Eigen::MatrixXd& A_last = Qinv;
    const Eigen::MatrixXd U = -rho_coeffs * Qinv;

    // Block-tridiagonal product on the coupled frequencies; Z has N blocks
    // of c rows.
    auto apply_P = [&](const Eigen::MatrixXd& Z) {
        Eigen::MatrixXd R(Z.rows(), Z.cols());
        for (int n = 0; n < N; ++n) {
            const auto Zn = Z.middleRows(n * c, c);
            Eigen::MatrixXd acc;
            if (n == 0) {
                acc = A_first * Zn;
            } else if (n == N - 1) {
                acc = A_last * Zn;
            } else {
                acc = A_mid * Zn;
            }
            if (n + 1 < N) acc.noalias() += U * Z.middleRows((n + 1) * c, c);
            if (n > 0) acc.noalias() += U.transpose() * Z.middleRows((n - 1) * c, c);
            R.middleRows(n * c, c) = acc;
        }
        return R;
    };

    // Stacked design: row (n, k), column (j, l) = rotated regressor entry;
    // coupled output frequencies k < c and weighted rows k >= c split.
    Eigen::MatrixXd Xc(N * c, p * K);
    Eigen::MatrixXd Xr(std::max(N * u, 0), p * K);
    Eigen::VectorXd yc(N * c);
    Eigen::VectorXd yr(std::max(N * u, 0));
    Eigen::VectorXd row_w(std::max(N * u, 0));
    for (int n = 0; n < N; ++n) {
        yc.segment(n * c, c) = Y[n].coeffs.head(c);
        if (u > 0) {
            yr.segment(n * u, u) = Y[n].coeffs.tail(u);
            row_w.segment(n * u, u) = tail_weights;
        }
        for (int j = 0; j < p; ++j) {
            const RegressorOperator& X = panel.entries[n][j];
            for (int l = 0; l < K; ++l) {
                for (int k = 0; k < c; ++k) {
                    Xc(n * c + k, j * K + l) = X.entry(k, l);
                }
                for (int k = c; k < K; ++k) {
                    Xr(n * u + (k - c), j * K + l) = X.entry(k, l);
                }
            }
        }
    }

    const Eigen::MatrixXd PXc = apply_P(Xc);
    Eigen::MatrixXd M = Xc.transpose() * PXc;
    Eigen::VectorXd rhs = PXc.transpose() * yc;
    if (u > 0) {
        M.noalias() += Xr.transpose() * row_w.asDiagonal() * Xr;
        rhs.noalias() += Xr.transpose() * (row_w.asDiagonal() * yr);
    }
    M = ((M + M.transpose()) / 2.0).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.info() != Eigen::Success || !(top > 0.0) ||
        es.eigenvalues().minCoeff() <= top * 1e-12) {
        throw numerical_error("singular stacked design in dense precision fallback");
    }
    const Eigen::VectorXd b = es.eigenvectors() *
                              es.eigenvalues().cwiseInverse().asDiagonal() *
                              (es.eigenvectors().transpose() * rhs);
    const Eigen::MatrixXd Minv = es.eigenvectors() *
                                 es.eigenvalues().cwiseInverse().asDiagonal() *
                                 es.eigenvectors().transpose();

    GlsFit fit;
    const Interval interval = Y[0].interval;
    fit.beta_hat.assign(p, HFunction::zero(K, interval));
    for (int j = 0; j < p; ++j) fit.beta_hat[j].coeffs = b.segment(j * K, K);
    fit.covariance_blocks.resize(K);
    for (int k = 0; k < K; ++k) {
        Eigen::MatrixXd block(p, p);
        for (int j1 = 0; j1 < p; ++j1) {
            for (int j2 = 0; j2 < p; ++j2) {
                block(j1, j2) = Minv(j1 * K + k, j2 * K + k);
            }
        }
        fit.covariance_blocks[k] = std::move(block);
    }

    const Eigen::VectorXd rc = yc - Xc * b;
    const Eigen::VectorXd rr =
        u > 0 ? Eigen::VectorXd(yr - Xr * b) : Eigen::VectorXd();
    fit.residuals.reserve(N);
    for (int n = 0; n < N; ++n) {
        Eigen::VectorXd coeffs(K);
        coeffs.head(c) = rc.segment(n * c, c);
        if (u > 0) coeffs.tail(u) = rr.segment(n * u, u);
        fit.residuals.emplace_back(std::move(coeffs), interval);
    }
    fit.loss = rc.dot(apply_P(rc).col(0)) +
               (u > 0 ? rr.dot(row_w.asDiagonal() * rr) : 0.0);
    return fit;
}

} // namespace

EmpiricalCov empirical_cov(const std::vector<HFunction>& residuals) {
    const int N = static_cast<int>(residuals.size());
    if (N < 2) throw domain_error("empirical_cov: need N >= 2 residuals");
    const Eigen::MatrixXd R = coefficient_matrix(residuals);
    EmpiricalCov cov;
    cov.N = N;
    cov.r0_hat = (R * R.transpose()) / N;
    cov.r1_hat = (R.leftCols(N - 1) * R.rightCols(N - 1).transpose()) / (N - 1);
    return cov;
}

EmpiricalEigen empirical_eigendecomposition(const EmpiricalCov& cov) {
    const Eigen::MatrixXd S = (cov.r0_hat + cov.r0_hat.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) {
        throw numerical_error("empirical eigendecomposition failed");
    }
    const int K = static_cast<int>(S.rows());
    EmpiricalEigen out;
    out.values.resize(K);
    out.vectors.resize(K, K);
    // Eigen returns ascending order; store nonincreasing. Roundoff can push
    // a zero eigenvalue slightly negative; clamp to the PSD contract.
    for (int j = 0; j < K; ++j) {
        out.values[j] = std::max(es.eigenvalues()[K - 1 - j], 0.0);
        Eigen::VectorXd v = es.eigenvectors().col(K - 1 - j);
        int argmax = 0;
        v.cwiseAbs().maxCoeff(&argmax);
        if (v[argmax] < 0.0) v = -v;
        out.vectors.col(j) = v;
    }
    return out;
}

RhoHat estimate_rho(const std::vector<HFunction>& residuals,
                    const EmpiricalEigen& eig, int k_N) {
    const int N = static_cast<int>(residuals.size());
    if (N < 2) throw domain_error("estimate_rho: need N >= 2 residuals");
    if (k_N < 1 || k_N > eig.dim() || k_N > N) {
        throw domain_error("estimate_rho: k_N out of range");
    }
    const double floor = 1e-10 * eig.values[0];
    for (int j = 0; j < k_N; ++j) {
        if (!(eig.values[j] > floor) || !(eig.values[j] > 0.0)) {
            throw numerical_error(
                "truncation order too large: empirical eigenvalue " +
                std::to_string(j + 1) + " is below the inversion floor");
        }
    }
    const Eigen::MatrixXd R = coefficient_matrix(residuals);
    const Eigen::MatrixXd S = eig.vectors.leftCols(k_N).transpose() * R;
    RhoHat rho;
    rho.k_N = k_N;
    rho.coeffs = (S.leftCols(N - 1) * S.rightCols(N - 1).transpose()) / (N - 1);
    for (int j = 0; j < k_N; ++j) rho.coeffs.col(j) /= eig.values[j];
    return rho;
}

int select_truncation(const EmpiricalEigen& eig, int N, double threshold) {
    if (N < 3) throw domain_error("select_truncation: N must be >= 3");
    const int K = eig.dim();
    int positive = 0;
    for (int j = 0; j < K; ++j) {
        if (eig.values[j] > 0.0) ++positive;
    }
    if (positive < 2) return 1;

    const double r = 2.0 * std::sqrt(2.0);
    const double logN = std::log(static_cast<double>(N));
    auto spacing_inv = [&](int hi, int lo) {
        const double gap = eig.values[hi] - eig.values[lo];
        return gap > 0.0 ? 1.0 / gap : std::numeric_limits<double>::infinity();
    };

    int chosen = 1;
    double a_sum = 0.0;
    // a_k needs the (k+1)-th eigenvalue, so candidates stop one short of K.
    for (int k = 1; k <= K - 1; ++k) {
        double a_k;
        if (k == 1) {
            a_k = r * spacing_inv(0, 1);
        } else {
            a_k = r * std::max(spacing_inv(k - 2, k - 1), spacing_inv(k - 1, k));
        }
        a_sum += a_k;
        const double lam = eig.values[k - 1];
        const double ratio = N * lam * lam / (a_sum * a_sum * logN);
        if (ratio >= threshold) chosen = k;
    }

    chosen = std::min({chosen, K, N - 1});
    chosen = std::min(chosen, std::max(1, N / 10));
    return std::max(chosen, 1);
}

PluginFit plugin_gls(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                     const PluginOptions& options) {
    panel.validate();
    if (static_cast<int>(Y.size()) != panel.N()) {
        throw domain_error("plugin_gls: response count differs from panel N");
    }
    const int N = panel.N();
    const int K = panel.K();

    GlsFit ols = ols_estimate(panel, Y);
    const EmpiricalCov cov = empirical_cov(ols.residuals);

    // (Near-)exact interpolation leaves nothing to estimate the error law
    // from; return the ordinary fit unchanged. The cutoff is a variance
    // ratio: residuals below 1e-10 of the data amplitude would produce
    // weights with >1e20 dynamic range, which carry no information beyond
    // roundoff.
    double y_scale = 0.0;
    for (const auto& y : Y) y_scale += y.coeffs.squaredNorm();
    y_scale /= N;
    if (cov.r0_hat.trace() <= 1e-20 * std::max(y_scale, 1e-300)) {
        PluginFit out;
        out.fit = std::move(ols);
        out.degenerate_ols = true;
        return out;
    }

    EmpiricalEigen eig = empirical_eigendecomposition(cov);
    const int k_N = options.k_N > 0
                        ? std::min(options.k_N, K)
                        : select_truncation(eig, N, options.truncation_threshold);
    RhoHat rho = estimate_rho(ols.residuals, eig, k_N);

    double diag_mass = 0.0;
    double off_mass = 0.0;
    for (int i = 0; i < k_N; ++i) {
        for (int j = 0; j < k_N; ++j) {
            const double c2 = rho.coeffs(i, j) * rho.coeffs(i, j);
            if (i == j) diag_mass += c2;
            else off_mass += c2;
        }
    }

    // Rotate data and regressors into the empirical eigenbasis.
    const Eigen::MatrixXd& Phi = eig.vectors;
    std::vector<HFunction> Yrot;
    Yrot.reserve(N);
    for (const auto& y : Y) {
        Yrot.emplace_back(Phi.transpose() * y.coeffs, y.interval);
    }
    RegressorPanel rotated;
    rotated.entries.resize(N);
    for (int n = 0; n < N; ++n) {
        rotated.entries[n].reserve(panel.p());
        for (int j = 0; j < panel.p(); ++j) {
            rotated.entries[n].push_back(rotate_regressor(panel.entries[n][j], Phi));
        }
    }

    GlsFit fit_rot;
    // The closed-form per-frequency precision needs rho effectively diagonal.
    // Relative test: off-diagonal Frobenius norm under 10% of the diagonal
    // norm. Absolute escape: when the whole off-diagonal block is below 0.1
    // in Frobenius norm it is immaterial against the unit scale of the
    // Toeplitz inverse (covers the white-noise case, where both masses are
    // sampling noise of the same size and the ratio test is meaningless).
    // Beyond the analyzed block, frequencies are weighted as serially
    // uncorrelated with their own empirical variances. Tying every weight
    // to the data scale keeps the estimator invariant under a global
    // rescaling of the data. The floor matches the innovation-covariance
    // floor in the dense fallback: a 1e4 weight spread is the most the
    // stacked solve can absorb on ill-conditioned designs, and empirical
    // eigenvalues further down are rank-deficiency artifacts (N < K) rather
    // than variance estimates.
    const double tail_floor = 1e-4 * eig.values[0];
    if (off_mass < 0.01 * diag_mass || off_mass < 0.01 || k_N == 1) {
        // Closed-form per-frequency precision from the diagonal of rho_hat.
        BlockPrecision P = BlockPrecision::identity(K, N);
        for (int j = 0; j < k_N; ++j) {
            const double lam = rho.coeffs(j, j);
            if (!(std::abs(lam) < 1.0 - 1e-10)) {
                throw numerical_error("estimated autocorrelation at frequency " +
                                      std::to_string(j + 1) +
                                      " is at or beyond the unit guard");
            }
            SymTridiag tri = toeplitz_inverse_tridiag(ToeplitzAr1(lam, N));
            tri.diag /= eig.values[j];
            tri.off /= eig.values[j];
            P.per_frequency[j] = std::move(tri);
        }
        for (int j = k_N; j < K; ++j) {
            P.per_frequency[j].diag.setConstant(
                1.0 / std::max(eig.values[j], tail_floor));
        }
        fit_rot = gls_estimate(rotated, Yrot, P);
    } else {
        Eigen::VectorXd tail_w(K - k_N);
        for (int j = k_N; j < K; ++j) {
            tail_w[j - k_N] = 1.0 / std::max(eig.values[j], tail_floor);
        }
        fit_rot = gls_markov_precision(rotated, Yrot, eig.values.head(k_N),
                                       rho.coeffs, tail_w);
    }

    PluginFit out;
    out.k_N = k_N;
    out.fit.loss = fit_rot.loss;
    out.fit.covariance_blocks = std::move(fit_rot.covariance_blocks);
    out.fit.beta_hat.reserve(panel.p());
    for (int j = 0; j < panel.p(); ++j) {
        out.fit.beta_hat.emplace_back(Phi * fit_rot.beta_hat[j].coeffs,
                                      Y[0].interval);
    }
    out.fit.residuals.reserve(N);
    for (int n = 0; n < N; ++n) {
        out.fit.residuals.emplace_back(Phi * fit_rot.residuals[n].coeffs,
                                       Y[0].interval);
    }
    // Phi aliases eig.vectors, so eig may only be moved from once the
    // rotation back to the original basis is complete.
    out.eigen = std::move(eig);
    out.rho_hat = std::move(rho);
    return out;
}

HFunction predict_with_residual(const std::vector<RegressorOperator>& panel_row,
                                const std::vector<HFunction>& beta_hat,
                                const RhoHat& rho_hat, const EmpiricalEigen& eig,
                                const HFunction& prev_residual) {
    if (panel_row.size() != beta_hat.size()) {
        throw domain_error("predict: regressor row length differs from beta count");
    }
    HFunction out = HFunction::zero(prev_residual.modes(), prev_residual.interval);
    for (std::size_t j = 0; j < panel_row.size(); ++j) {
        out.coeffs += apply_regressor(panel_row[j], beta_hat[j]).coeffs;
    }
    if (rho_hat.k_N > 0) {
        const auto lead = eig.vectors.leftCols(rho_hat.k_N);
        const Eigen::VectorXd scores = lead.transpose() * prev_residual.coeffs;
        out.coeffs += lead * (rho_hat.coeffs.transpose() * scores);
    }
    return out;
}

HFunction predict_response(const std::vector<RegressorOperator>& panel_row,
                           const PluginFit& fit) {
    if (fit.fit.residuals.empty()) {
        throw domain_error("predict_response: fit carries no residuals");
    }
    return predict_with_residual(panel_row, fit.fit.beta_hat, fit.rho_hat, fit.eigen,
                                 fit.fit.residuals.back());
}

} // namespace arhgls

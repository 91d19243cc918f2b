#include "arhgls/gls_core.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace arhgls {

namespace {

constexpr double kUnitGuard = 1.0 - 1e-10;

void require_unit_guard(double lam) {
    if (!(std::abs(lam) < kUnitGuard)) {
        throw numerical_error("autocorrelation magnitude " + std::to_string(lam) +
                              " too close to 1; Toeplitz inverse is near-singular");
    }
}

/// K x N matrix of coefficients: row k holds coefficient k across time.
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

/// Symmetric solve helpers built on an eigendecomposition so rank deficiency
/// is detected instead of amplified.
struct SymSolve {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;

    static SymSolve decompose(const Eigen::MatrixXd& M, const std::string& singular_msg) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        if (es.info() != Eigen::Success) {
            throw numerical_error("eigendecomposition failed: " + singular_msg);
        }
        const double top = es.eigenvalues().cwiseAbs().maxCoeff();
        if (!(top > 0.0) || es.eigenvalues().minCoeff() <= top * 1e-12) {
            throw numerical_error(singular_msg);
        }
        return SymSolve{es.eigenvectors(), es.eigenvalues()};
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return vectors * values.cwiseInverse().asDiagonal() * (vectors.transpose() * b);
    }
    Eigen::MatrixXd inverse() const {
        return vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
    }
};

std::vector<HFunction> compute_residuals(const RegressorPanel& panel,
                                         const std::vector<HFunction>& Y,
                                         const std::vector<HFunction>& beta) {
    std::vector<HFunction> resid;
    resid.reserve(Y.size());
    for (int n = 0; n < panel.N(); ++n) {
        HFunction r = Y[n];
        for (int j = 0; j < panel.p(); ++j) {
            r.coeffs -= apply_regressor(panel.entries[n][j], beta[j]).coeffs;
        }
        resid.push_back(std::move(r));
    }
    return resid;
}

GlsFit gls_diagonal_path(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                         const BlockPrecision& P) {
    const int N = panel.N();
    const int p = panel.p();
    const int K = panel.K();
    const Interval interval = Y[0].interval;
    const Eigen::MatrixXd ycoef = coefficient_matrix(Y);

    GlsFit fit;
    fit.beta_hat.assign(p, HFunction::zero(K, interval));
    fit.covariance_blocks.resize(K);

    Eigen::MatrixXd D(N, p);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            for (int j = 0; j < p; ++j) D(n, j) = panel.entries[n][j].diag()[k];
        }
        const SymTridiag& B = P.per_frequency[k];
        const Eigen::MatrixXd BD = B.apply(D);
        const Eigen::MatrixXd M = D.transpose() * BD;
        const Eigen::VectorXd v = BD.transpose() * ycoef.row(k).transpose();
        SymSolve sol = SymSolve::decompose(
            M, "singular design at frequency " + std::to_string(k + 1));
        const Eigen::VectorXd b = sol.solve(v);
        for (int j = 0; j < p; ++j) fit.beta_hat[j].coeffs[k] = b[j];
        fit.covariance_blocks[k] = sol.inverse();
    }
    return fit;
}

GlsFit gls_dense_path(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                      const BlockPrecision& P) {
    const int N = panel.N();
    const int p = panel.p();
    const int K = panel.K();
    const Interval interval = Y[0].interval;
    const Eigen::MatrixXd ycoef = coefficient_matrix(Y);

    // Unknown ordering: parameter-major, index j*K + l for coefficient l of
    // beta_j. The precision is frequency-diagonal, so the normal equations
    // accumulate one output-frequency slice at a time:
    //   W_k(n, j*K + l) = entry (k, l) of X_n^j, M += W_k^T B_k W_k.
    const int dim = p * K;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd W(N, dim);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            for (int j = 0; j < p; ++j) {
                const RegressorOperator& X = panel.entries[n][j];
                if (X.is_diagonal()) {
                    W.block(n, j * K, 1, K).setZero();
                    W(n, j * K + k) = X.diag()[k];
                } else {
                    for (int l = 0; l < K; ++l) W(n, j * K + l) = X.entry(k, l);
                }
            }
        }
        const Eigen::MatrixXd BW = P.per_frequency[k].apply(W);
        M.noalias() += W.transpose() * BW;
        rhs.noalias() += BW.transpose() * ycoef.row(k).transpose();
    }

    SymSolve sol = SymSolve::decompose(M, "singular stacked design in dense solve");
    const Eigen::VectorXd b = sol.solve(rhs);
    const Eigen::MatrixXd Minv = sol.inverse();

    GlsFit fit;
    fit.beta_hat.assign(p, HFunction::zero(K, interval));
    for (int j = 0; j < p; ++j) {
        fit.beta_hat[j].coeffs = b.segment(j * K, K);
    }
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
    return fit;
}

} // namespace

ToeplitzAr1::ToeplitzAr1(double lam_, int N_) : lam(lam_), N(N_) {
    if (N < 1) throw domain_error("ToeplitzAr1: N must be >= 1");
    if (!(std::abs(lam) < 1.0)) {
        throw domain_error("ToeplitzAr1: |lam| < 1 required");
    }
}

Eigen::MatrixXd SymTridiag::dense() const {
    const int n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.diagonal() = diag;
    for (int i = 0; i + 1 < n; ++i) {
        m(i, i + 1) = off[i];
        m(i + 1, i) = off[i];
    }
    return m;
}

double SymTridiag::quad_form(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    const int n = size();
    if (x.size() != n || y.size() != n) {
        throw domain_error("quad_form: vector length differs from matrix size");
    }
    double acc = diag.cwiseProduct(x).dot(y);
    for (int i = 0; i + 1 < n; ++i) {
        acc += off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
    }
    return acc;
}

Eigen::MatrixXd SymTridiag::apply(const Eigen::MatrixXd& m) const {
    const int n = size();
    if (m.rows() != n) throw domain_error("apply: row count differs from matrix size");
    Eigen::MatrixXd out = diag.asDiagonal() * m;
    for (int i = 0; i + 1 < n; ++i) {
        out.row(i) += off[i] * m.row(i + 1);
        out.row(i + 1) += off[i] * m.row(i);
    }
    return out;
}

BlockPrecision BlockPrecision::identity(int K, int N) {
    BlockPrecision P;
    P.N = N;
    P.K = K;
    P.per_frequency.reserve(K);
    for (int k = 0; k < K; ++k) {
        SymTridiag t;
        t.diag = Eigen::VectorXd::Ones(N);
        t.off = Eigen::VectorXd::Zero(N > 0 ? N - 1 : 0);
        P.per_frequency.push_back(std::move(t));
    }
    return P;
}

Eigen::MatrixXd toeplitz_dense(const ToeplitzAr1& t) {
    Eigen::MatrixXd m(t.N, t.N);
    for (int i = 0; i < t.N; ++i) {
        for (int j = 0; j < t.N; ++j) {
            m(i, j) = std::pow(t.lam, std::abs(i - j));
        }
    }
    return m;
}

SymTridiag toeplitz_inverse_tridiag(const ToeplitzAr1& t) {
    require_unit_guard(t.lam);
    const double s = 1.0 / (1.0 - t.lam * t.lam);
    SymTridiag out;
    if (t.N == 1) {
        // Degenerate length: the matrix is [1], so the corner formula
        // (which assumes two distinct endpoints) does not apply.
        out.diag = Eigen::VectorXd::Constant(1, 1.0);
        out.off = Eigen::VectorXd(0);
        return out;
    }
    out.diag = Eigen::VectorXd::Constant(t.N, s * (1.0 + t.lam * t.lam));
    if (t.N >= 1) {
        out.diag[0] = s;
        out.diag[t.N - 1] = s;
    }
    out.off = Eigen::VectorXd::Constant(t.N > 0 ? t.N - 1 : 0, -s * t.lam);
    return out;
}

Eigen::MatrixXd cholesky_factor_A(const ToeplitzAr1& t) {
    require_unit_guard(t.lam);
    const int N = t.N;
    const double root = std::sqrt(1.0 - t.lam * t.lam);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < N; ++j) A(0, j) = std::pow(t.lam, j);
    for (int i = 1; i < N; ++i) {
        for (int j = i; j < N; ++j) A(i, j) = root * std::pow(t.lam, j - i);
    }
    return A;
}

BlockPrecision build_block_precision(const SpectralOperator& r0_eff,
                                     const SpectralOperator& rho, int N) {
    if (rho.kind != OperatorKind::autocorrelation) {
        throw domain_error("build_block_precision: rho must be autocorrelation kind");
    }
    if (r0_eff.dim() != rho.dim()) {
        throw domain_error("build_block_precision: operator K differ");
    }
    if (N < 1) throw domain_error("build_block_precision: N must be >= 1");
    const int K = r0_eff.dim();
    BlockPrecision P;
    P.N = N;
    P.K = K;
    P.per_frequency.reserve(K);
    for (int k = 0; k < K; ++k) {
        const double var = r0_eff.eigenvalues[k];
        if (!(var > 0.0)) {
            throw domain_error("build_block_precision: r0_eff must be strictly "
                               "positive; apply a floor first");
        }
        SymTridiag tri = toeplitz_inverse_tridiag(ToeplitzAr1(rho.eigenvalues[k], N));
        tri.diag /= var;
        tri.off /= var;
        P.per_frequency.push_back(std::move(tri));
    }
    return P;
}

double rkhs_loss(const BlockPrecision& P, const std::vector<HFunction>& resid) {
    if (static_cast<int>(resid.size()) != P.N) {
        throw domain_error("rkhs_loss: residual count differs from precision N");
    }
    const Eigen::MatrixXd rc = coefficient_matrix(resid);
    if (rc.rows() != P.K) throw domain_error("rkhs_loss: K mismatch");
    double acc = 0.0;
    for (int k = 0; k < P.K; ++k) {
        const Eigen::VectorXd rk = rc.row(k).transpose();
        acc += P.per_frequency[k].quad_form(rk, rk);
    }
    return acc;
}

GlsFit gls_estimate(const RegressorPanel& panel, const std::vector<HFunction>& Y,
                    const BlockPrecision& P) {
    panel.validate();
    if (static_cast<int>(Y.size()) != panel.N()) {
        throw domain_error("gls_estimate: response count differs from panel N");
    }
    if (P.N != panel.N() || P.K != panel.K()) {
        throw domain_error("gls_estimate: precision dimensions differ from panel");
    }
    for (const auto& y : Y) {
        if (y.modes() != panel.K()) {
            throw domain_error("gls_estimate: response K differs from panel K");
        }
    }

    GlsFit fit = panel.all_diagonal() ? gls_diagonal_path(panel, Y, P)
                                      : gls_dense_path(panel, Y, P);
    fit.residuals = compute_residuals(panel, Y, fit.beta_hat);
    fit.loss = rkhs_loss(P, fit.residuals);
    return fit;
}

GlsFit ols_estimate(const RegressorPanel& panel, const std::vector<HFunction>& Y) {
    return gls_estimate(panel, Y, BlockPrecision::identity(panel.K(), panel.N()));
}

Eigen::VectorXd normalized_statistic(const GlsFit& fit,
                                     const std::vector<HFunction>& beta_true) {
    const int p = static_cast<int>(fit.beta_hat.size());
    if (static_cast<int>(beta_true.size()) != p) {
        throw domain_error("normalized_statistic: parameter count mismatch");
    }
    const int K = fit.beta_hat.empty() ? 0 : fit.beta_hat[0].modes();
    Eigen::VectorXd out(static_cast<Eigen::Index>(K) * p);
    Eigen::VectorXd delta(p);
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < p; ++j) {
            if (beta_true[j].modes() != K) {
                throw domain_error("normalized_statistic: beta_true K mismatch");
            }
            delta[j] = fit.beta_hat[j].coeffs[k] - beta_true[j].coeffs[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance_blocks[k]);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
            throw numerical_error("normalized_statistic: covariance block " +
                                  std::to_string(k + 1) + " not positive definite");
        }
        // Information square root from the covariance eigenpairs.
        const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
        out.segment(static_cast<Eigen::Index>(k) * p, p) =
            es.eigenvectors() * inv_sqrt.asDiagonal() *
            (es.eigenvectors().transpose() * delta);
    }
    return out;
}

} // namespace arhgls

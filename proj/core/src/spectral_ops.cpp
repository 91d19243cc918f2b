#include "arhgls/spectral_ops.hpp"

#include <cmath>
#include <string>

namespace arhgls {

SpectralOperator::SpectralOperator(Eigen::VectorXd eig, OperatorKind k)
    : eigenvalues(std::move(eig)), kind(k) {
    if (eigenvalues.size() == 0) throw domain_error("operator needs >= 1 eigenvalue");
    for (int j = 0; j < dim(); ++j) {
        const double v = eigenvalues[j];
        if (!std::isfinite(v)) throw domain_error("non-finite eigenvalue");
        if (kind == OperatorKind::covariance) {
            // Zero is admitted so degenerate (noise-free) innovation laws are
            // representable; inversion sites enforce strict positivity.
            if (v < 0.0) throw domain_error("covariance eigenvalues must be nonnegative");
            if (j > 0 && v > eigenvalues[j - 1]) {
                throw domain_error("covariance eigenvalues must be nonincreasing");
            }
        } else if (std::abs(v) >= 1.0) {
            throw domain_error("autocorrelation eigenvalues must satisfy |lambda| < 1");
        }
    }
}

RegressorOperator RegressorOperator::diagonal(Eigen::VectorXd diag) {
    RegressorOperator X;
    X.dim_ = static_cast<int>(diag.size());
    X.store_ = diag;
    X.diagonal_ = true;
    if (!diag.allFinite()) throw domain_error("regressor entries must be finite");
    return X;
}

RegressorOperator RegressorOperator::dense(Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols()) {
        throw domain_error("regressor matrix must be square");
    }
    if (!matrix.allFinite()) throw domain_error("regressor entries must be finite");
    RegressorOperator X;
    X.dim_ = static_cast<int>(matrix.rows());
    X.store_ = std::move(matrix);
    X.diagonal_ = false;
    return X;
}

Eigen::MatrixXd RegressorOperator::as_dense() const {
    if (diagonal_) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
        m.diagonal() = store_.col(0);
        return m;
    }
    return store_;
}

double RegressorOperator::hilbert_schmidt_norm() const {
    return store_.norm();
}

bool RegressorPanel::all_diagonal() const {
    for (const auto& row : entries) {
        for (const auto& X : row) {
            if (!X.is_diagonal()) return false;
        }
    }
    return true;
}

void RegressorPanel::validate() const {
    if (N() < 2 || p() < 1) throw domain_error("panel needs N >= 2 and p >= 1");
    const int k = K();
    for (const auto& row : entries) {
        if (static_cast<int>(row.size()) != p()) {
            throw domain_error("panel rows must have uniform parameter count");
        }
        for (const auto& X : row) {
            if (X.dim() != k) throw domain_error("panel entries must share K");
        }
    }
}

HFunction apply_operator(const SpectralOperator& op, const HFunction& f) {
    if (op.dim() != f.modes()) {
        throw domain_error("apply_operator: operator and function K differ");
    }
    return HFunction(op.eigenvalues.cwiseProduct(f.coeffs), f.interval);
}

SpectralOperator operator_power(const SpectralOperator& op, int j) {
    if (j < 0) throw domain_error("operator_power: exponent must be >= 0");
    SpectralOperator out;
    out.kind = op.kind;
    out.eigenvalues = op.eigenvalues.array().pow(j).matrix();
    return out;
}

SpectralOperator operator_inverse(const SpectralOperator& op, double floor) {
    if (op.kind != OperatorKind::covariance) {
        throw domain_error("operator_inverse: covariance kind required");
    }
    if (!(floor > 0.0)) throw domain_error("operator_inverse: floor must be positive");
    SpectralOperator out;
    out.kind = OperatorKind::covariance;
    out.eigenvalues = op.eigenvalues.cwiseMax(floor).cwiseInverse();
    return out;
}

HFunction apply_regressor(const RegressorOperator& X, const HFunction& f) {
    if (X.dim() != f.modes()) {
        throw domain_error("apply_regressor: regressor and function K differ");
    }
    if (X.is_diagonal()) {
        return HFunction(X.diag().cwiseProduct(f.coeffs), f.interval);
    }
    return HFunction(X.as_dense() * f.coeffs, f.interval);
}

} // namespace arhgls

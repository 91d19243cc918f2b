#pragma once

#include <vector>

#include <Eigen/Core>

#include "arhgls/basis.hpp"

namespace arhgls {

enum class OperatorKind { covariance, autocorrelation };

/// Operator diagonal in the shared basis, given by its eigenvalue sequence.
/// covariance kind requires lambda_j > 0 nonincreasing; autocorrelation kind
/// requires |lambda_j| < 1 (stationarity regime).
struct SpectralOperator {
    Eigen::VectorXd eigenvalues;
    OperatorKind kind = OperatorKind::covariance;

    SpectralOperator() = default;
    SpectralOperator(Eigen::VectorXd eig, OperatorKind k);

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Kernel regressor: K x K coefficient matrix, entry (k, l) mapping input
/// mode l to output mode k. Diagonal regressors (the simulation design) are
/// stored compactly as their diagonal.
class RegressorOperator {
public:
    RegressorOperator() = default;
    static RegressorOperator diagonal(Eigen::VectorXd diag);
    static RegressorOperator dense(Eigen::MatrixXd matrix);

    bool is_diagonal() const { return diagonal_; }
    int dim() const { return dim_; }
    /// Entry (k, l), 0-based.
    double entry(int k, int l) const {
        return diagonal_ ? (k == l ? store_(k, 0) : 0.0) : store_(k, l);
    }
    /// Diagonal of the operator; valid only for diagonal operators.
    Eigen::VectorXd diag() const { return store_.col(0); }
    Eigen::MatrixXd as_dense() const;
    double hilbert_schmidt_norm() const;

private:
    // K x 1 when diagonal, K x K otherwise.
    Eigen::MatrixXd store_;
    int dim_ = 0;
    bool diagonal_ = false;
};

/// N x p array of kernel regressors with uniform mode count K.
struct RegressorPanel {
    // entries[n][j] is the regressor for observation n (0-based), parameter j.
    std::vector<std::vector<RegressorOperator>> entries;

    int N() const { return static_cast<int>(entries.size()); }
    int p() const { return entries.empty() ? 0 : static_cast<int>(entries[0].size()); }
    int K() const { return entries.empty() || entries[0].empty() ? 0 : entries[0][0].dim(); }
    bool all_diagonal() const;
    void validate() const;
};

/// Coefficient-wise action lambda_j * f_j.
HFunction apply_operator(const SpectralOperator& op, const HFunction& f);

/// Eigenvalues raised to the j-th power; j = 0 yields the identity.
SpectralOperator operator_power(const SpectralOperator& op, int j);

/// Reciprocal eigenvalues with a positive floor regularizing the unbounded
/// inverse: result eigenvalue 1/max(lambda_j, floor). Covariance kind only.
SpectralOperator operator_inverse(const SpectralOperator& op, double floor = 1e-12);

/// Output coefficient k = sum_l x_{k,l} * f_l.
HFunction apply_regressor(const RegressorOperator& X, const HFunction& f);

} // namespace arhgls

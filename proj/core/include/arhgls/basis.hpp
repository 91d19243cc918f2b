#pragma once

#include <Eigen/Core>

#include "arhgls/errors.hpp"

namespace arhgls {

/// Open interval (a, b) carrying the function domain.
struct Interval {
    double a = 0.0;
    double b = 60.0;

    Interval() = default;
    Interval(double a_, double b_);

    double length() const { return b - a; }
    bool operator==(const Interval&) const = default;
};

/// Equally spaced abscissae strictly inside the interval. The canonical grid
/// is the midpoint grid x_i = a + (i + 1/2) * (b-a)/M, on which the discrete
/// sine orthogonality makes projection exact for modes up to M-1.
struct Grid {
    Eigen::VectorXd points;
    Interval interval;
    /// Quadrature cell width (b-a)/M for the composite midpoint rule.
    double weight = 0.0;

    int size() const { return static_cast<int>(points.size()); }
};

/// Element of L2((a,b)) stored as coefficients in the orthonormal sine basis.
/// Coefficient at 0-based position j-1 multiplies basis mode j.
struct HFunction {
    Eigen::VectorXd coeffs;
    Interval interval;

    HFunction() = default;
    HFunction(Eigen::VectorXd c, Interval iv) : coeffs(std::move(c)), interval(iv) {}
    static HFunction zero(int K, Interval iv) {
        return HFunction(Eigen::VectorXd::Zero(K), iv);
    }

    int modes() const { return static_cast<int>(coeffs.size()); }
    double norm() const { return coeffs.norm(); }
};

/// Midpoint grid with M cells over the interval.
Grid make_midpoint_grid(Interval interval, int M);

/// Orthonormal sine basis mode j (1-based) evaluated at x:
/// sqrt(2/(b-a)) * sin(pi * j * (x-a) / (b-a)). Throws domain_error when x
/// lies outside the open interval or j < 1.
double basis_eval(int j, double x, Interval interval);

/// Pointwise values of f on the grid: sum_j coeffs[j] * basis_eval(j, x).
Eigen::VectorXd synthesize(const HFunction& f, const Grid& grid);

/// Coefficients of the first K modes by composite midpoint quadrature of the
/// grid values against each basis function. Requires M >= 4K so mode K is
/// resolved without aliasing.
HFunction project(const Eigen::VectorXd& values, const Grid& grid, int K);

/// Coefficient inner product (Parseval). Requires matching interval and K.
double inner_product(const HFunction& f, const HFunction& g);

} // namespace arhgls

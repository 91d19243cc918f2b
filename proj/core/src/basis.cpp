#include "arhgls/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace arhgls {

Interval::Interval(double a_, double b_) : a(a_), b(b_) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw domain_error("interval endpoints must be finite with a < b");
    }
}

Grid make_midpoint_grid(Interval interval, int M) {
    if (M < 1) throw domain_error("grid size must be >= 1");
    Grid g;
    g.interval = interval;
    g.weight = interval.length() / M;
    g.points.resize(M);
    for (int i = 0; i < M; ++i) {
        g.points[i] = interval.a + (i + 0.5) * g.weight;
    }
    return g;
}

double basis_eval(int j, double x, Interval interval) {
    if (j < 1) throw domain_error("basis mode index must be >= 1");
    if (!(x > interval.a && x < interval.b)) {
        throw domain_error("basis argument x=" + std::to_string(x) +
                           " outside open interval");
    }
    const double L = interval.length();
    return std::sqrt(2.0 / L) * std::sin(std::numbers::pi * j * (x - interval.a) / L);
}

Eigen::VectorXd synthesize(const HFunction& f, const Grid& grid) {
    if (!(f.interval == grid.interval)) {
        throw domain_error("synthesize: grid interval differs from function interval");
    }
    const int M = grid.size();
    const int K = f.modes();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
    for (int j = 1; j <= K; ++j) {
        const double c = f.coeffs[j - 1];
        if (c == 0.0) continue;
        for (int i = 0; i < M; ++i) {
            out[i] += c * basis_eval(j, grid.points[i], grid.interval);
        }
    }
    return out;
}

HFunction project(const Eigen::VectorXd& values, const Grid& grid, int K) {
    if (K < 1) throw domain_error("project: K must be >= 1");
    if (values.size() != grid.points.size()) {
        throw domain_error("project: values length differs from grid size");
    }
    if (grid.size() < 4 * K) {
        throw domain_error("project: grid has " + std::to_string(grid.size()) +
                           " points, need >= 4K = " + std::to_string(4 * K) +
                           " to resolve mode K");
    }
    HFunction f = HFunction::zero(K, grid.interval);
    for (int j = 1; j <= K; ++j) {
        double acc = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            acc += values[i] * basis_eval(j, grid.points[i], grid.interval);
        }
        f.coeffs[j - 1] = grid.weight * acc;
    }
    return f;
}

double inner_product(const HFunction& f, const HFunction& g) {
    if (!(f.interval == g.interval) || f.modes() != g.modes()) {
        throw domain_error("inner_product: mismatched interval or mode count");
    }
    return f.coeffs.dot(g.coeffs);
}

} // namespace arhgls

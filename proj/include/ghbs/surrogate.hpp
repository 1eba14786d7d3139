#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ghbs/errors.hpp"

namespace ghbs {

/// Full quadratic polynomial in k variables: intercept, k linear terms and
/// all k(k+1)/2 second-order terms including cross terms.
struct QuadraticSurface {
    int k = 0;
    /// Ordered as [intercept, linear_1..k, quad_(i<=j) row-major]:
    /// g(y) = c0 + sum_i c_i y_i + sum_{i<=j} c_ij y_i y_j.
    Eigen::VectorXd coefficients;
    bool rank_deficient = false;
    bool constant_targets = false;

    static long coefficient_count(int k) { return 1 + k + long(k) * (k + 1) / 2; }
};

struct FitResult {
    QuadraticSurface surface;
    double r2 = 0.0;
};

/// Least-squares fit of the full quadratic basis to (y_i, f_i) pairs.
/// Inputs are centered and scaled internally; the returned coefficients
/// are in the original coordinates. Constant targets fit exactly with
/// r2 = 1 by convention; rank deficiency falls back to the minimum-norm
/// solution and is flagged.
FitResult fit_quadratic(const Eigen::MatrixXd& y, const Eigen::VectorXd& f);

double eval_surface(const QuadraticSurface& surface, const Eigen::VectorXd& y);

}  // namespace ghbs

#include "ghbs/surrogate.hpp"

#include <cmath>

namespace ghbs {

namespace {

// Design row for the basis [1, u_1..u_k, u_i u_j (i <= j)].
Eigen::RowVectorXd design_row(const Eigen::VectorXd& u) {
    const int k = int(u.size());
    Eigen::RowVectorXd row(QuadraticSurface::coefficient_count(k));
    row[0] = 1.0;
    for (int i = 0; i < k; ++i) row[1 + i] = u[i];
    long c = 1 + k;
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) row[c++] = u[i] * u[j];
    return row;
}

}  // namespace

FitResult fit_quadratic(const Eigen::MatrixXd& y, const Eigen::VectorXd& f) {
    const long n = y.rows();
    const int k = int(y.cols());
    const long m = QuadraticSurface::coefficient_count(k);
    if (f.size() != n) throw DimensionMismatch("fit_quadratic: y/f length mismatch");
    if (n < m) throw InsufficientSamples("fit_quadratic: fewer pairs than coefficients");
    for (long i = 0; i < n; ++i)
        if (!std::isfinite(f[i]))
            throw std::invalid_argument("fit_quadratic: non-finite target value");

    FitResult out;
    out.surface.k = k;

    // Center and scale the inputs for conditioning; coefficients are mapped
    // back to the original coordinates below.
    Eigen::VectorXd mu(k), scale(k);
    for (int d = 0; d < k; ++d) {
        mu[d] = y.col(d).mean();
        const double var = (y.col(d).array() - mu[d]).square().sum() / double(n);
        const double sd = std::sqrt(std::max(var, 0.0));
        scale[d] = (sd > 0.0) ? sd : 1.0;
    }

    Eigen::MatrixXd A(n, m);
    for (long i = 0; i < n; ++i) {
        const Eigen::VectorXd u = (y.row(i).transpose() - mu).cwiseQuotient(scale);
        A.row(i) = design_row(u);
    }

    Eigen::VectorXd coef;
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < m) {
            out.surface.rank_deficient = true;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
            coef = cod.solve(f);
        } else {
            coef = qr.solve(f);
        }
    }

    // Map back: with u = D^{-1}(y - mu), collect the polynomial in y.
    const double a0 = coef[0];
    const Eigen::VectorXd lin_u = coef.segment(1, k);
    Eigen::MatrixXd Qu = Eigen::MatrixXd::Zero(k, k);
    {
        long c = 1 + k;
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) {
                const double b = coef[c++];
                if (i == j)
                    Qu(i, i) = b;
                else
                    Qu(i, j) = Qu(j, i) = 0.5 * b;
            }
    }
    const Eigen::VectorXd l0 = lin_u.cwiseQuotient(scale);
    const Eigen::MatrixXd Q =
        scale.cwiseInverse().asDiagonal() * Qu * scale.cwiseInverse().asDiagonal();
    const double c0 = a0 - l0.dot(mu) + mu.dot(Q * mu);
    const Eigen::VectorXd c_lin = l0 - 2.0 * (Q * mu);

    out.surface.coefficients.resize(m);
    out.surface.coefficients[0] = c0;
    out.surface.coefficients.segment(1, k) = c_lin;
    {
        long c = 1 + k;
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j)
                out.surface.coefficients[c++] = (i == j) ? Q(i, i) : 2.0 * Q(i, j);
    }

    // r^2 on the training pairs.
    const Eigen::VectorXd pred = A * coef;
    const double f_mean = f.mean();
    const double ss_tot = (f.array() - f_mean).square().sum();
    const double ss_res = (f - pred).squaredNorm();
    if (ss_tot <= 0.0) {
        out.surface.constant_targets = true;
        out.r2 = 1.0;
    } else {
        out.r2 = 1.0 - ss_res / ss_tot;
    }
    return out;
}

double eval_surface(const QuadraticSurface& surface, const Eigen::VectorXd& y) {
    const int k = surface.k;
    if (y.size() != k) throw DimensionMismatch("eval_surface: dimension mismatch");
    if (surface.coefficients.size() != QuadraticSurface::coefficient_count(k))
        throw DimensionMismatch("eval_surface: malformed coefficient vector");
    double g = surface.coefficients[0];
    for (int i = 0; i < k; ++i) g += surface.coefficients[1 + i] * y[i];
    long c = 1 + k;
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) g += surface.coefficients[c++] * y[i] * y[j];
    return g;
}

}  // namespace ghbs

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ghbs/inverse.hpp"
#include "ghbs/rng.hpp"

namespace ghbs {

/// Eigenpairs of the sample gradient outer-product matrix, with bootstrap
/// diagnostics.
struct SpectrumEstimate {
    Eigen::VectorXd eigenvalues;  ///< descending, clipped at 0
    Eigen::MatrixXd eigenvectors; ///< orthonormal columns, deterministic signs
    std::vector<std::pair<double, double>> eigenvalue_intervals;  ///< bootstrap (lo, hi)
    std::vector<double> subspace_errors;  ///< mean bootstrap distance, k = 1..n-1
};

/// Active/inactive split of the eigenvector basis.
struct ActiveSubspace {
    int k = 0;
    Eigen::MatrixXd W1;  ///< n x k
    Eigen::MatrixXd W2;  ///< n x (n-k)

    Eigen::VectorXd project_active(const Eigen::VectorXd& x) const {
        return W1.transpose() * x;
    }
    Eigen::VectorXd project_inactive(const Eigen::VectorXd& x) const {
        return W2.transpose() * x;
    }
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& y, const Eigen::VectorXd& z) const {
        return W1 * y + ((W2.cols() > 0) ? Eigen::VectorXd(W2 * z)
                                         : Eigen::VectorXd::Zero(W1.rows()));
    }
};

/// N = ceil(alpha_factor * ell * ln(n)) sample-count heuristic.
long heuristic_sample_count(double alpha_factor, int ell, double n);

/// Eigendecomposition of (1/N) sum g_j g_j^T. Sign convention: each
/// eigenvector's largest-magnitude component is positive. Sets
/// *degenerate when the whole spectrum is below 1e-30.
SpectrumEstimate estimate_C(const std::vector<MisfitGradientSample>& samples,
                            bool* degenerate = nullptr);

/// Spectral distance between the spans of two orthonormal column blocks,
/// computed as the largest singular value of A^T B_perp.
double subspace_distance(const Eigen::MatrixXd& W1_a, const Eigen::MatrixXd& W1_b);

/// Bootstrap resampling of the spectrum: empirical percentile intervals
/// for each eigenvalue and mean subspace distance per candidate dimension.
void bootstrap_errors(const std::vector<MisfitGradientSample>& samples,
                      SpectrumEstimate& spectrum, int n_boot, std::uint64_t seed,
                      double percentile_lo = 2.5, double percentile_hi = 97.5);

/// First k eigenvector columns vs the rest.
ActiveSubspace split(const SpectrumEstimate& spectrum, int k);

/// Advisory gap detection: the k in [1, n-1] maximizing lambda_k / lambda_{k+1}.
int largest_gap_dimension(const SpectrumEstimate& spectrum);

}  // namespace ghbs

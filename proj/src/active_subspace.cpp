#include "ghbs/active_subspace.hpp"

#include <algorithm>
#include <cmath>

namespace ghbs {

long heuristic_sample_count(double alpha_factor, int ell, double n) {
    if (!(alpha_factor >= 2.0 && alpha_factor <= 10.0))
        throw std::invalid_argument("heuristic_sample_count: alpha_factor must be in [2, 10]");
    if (!(ell >= 1 && double(ell) <= n))
        throw std::invalid_argument("heuristic_sample_count: need 1 <= ell <= n");
    return long(std::ceil(alpha_factor * double(ell) * std::log(n)));
}

namespace {

// Descending eigendecomposition with the deterministic sign convention.
void decompose(const Eigen::MatrixXd& C, Eigen::VectorXd& eigvals,
               Eigen::MatrixXd& eigvecs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const long n = C.rows();
    eigvals.resize(n);
    eigvecs.resize(n, n);
    for (long i = 0; i < n; ++i) {
        eigvals[i] = es.eigenvalues()[n - 1 - i];
        eigvecs.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    eigvals = eigvals.cwiseMax(0.0);
    for (long i = 0; i < n; ++i) {
        long imax = 0;
        eigvecs.col(i).cwiseAbs().maxCoeff(&imax);
        if (eigvecs(imax, i) < 0.0) eigvecs.col(i) = -eigvecs.col(i);
    }
}

Eigen::MatrixXd outer_product_average(const std::vector<MisfitGradientSample>& samples,
                                      const std::vector<int>& idx) {
    const long n = samples.front().grad.size();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (int i : idx) C.noalias() += samples[i].grad * samples[i].grad.transpose();
    return C / double(idx.size());
}

}  // namespace

SpectrumEstimate estimate_C(const std::vector<MisfitGradientSample>& samples,
                            bool* degenerate) {
    if (samples.empty()) throw InsufficientSamples("estimate_C: no gradient samples");
    const long n = samples.front().grad.size();
    if (long(samples.size()) < n)
        throw InsufficientSamples("estimate_C: need at least n samples");
    for (const auto& s : samples)
        if (s.grad.size() != n)
            throw DimensionMismatch("estimate_C: inconsistent gradient dimensions");

    std::vector<int> all(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) all[i] = int(i);
    SpectrumEstimate sp;
    decompose(outer_product_average(samples, all), sp.eigenvalues, sp.eigenvectors);
    if (degenerate) *degenerate = sp.eigenvalues.maxCoeff() < 1e-30;
    return sp;
}

double subspace_distance(const Eigen::MatrixXd& W1_a, const Eigen::MatrixXd& W1_b) {
    if (W1_a.rows() != W1_b.rows() || W1_a.cols() != W1_b.cols())
        throw DimensionMismatch("subspace_distance: shape mismatch");
    const long n = W1_a.rows();
    const long k = W1_a.cols();
    // Orthogonal complement of W1_b via full QR.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W1_b);
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd B_perp = Q.rightCols(n - k);
    const Eigen::MatrixXd M = W1_a.transpose() * B_perp;
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()[0];
}

void bootstrap_errors(const std::vector<MisfitGradientSample>& samples,
                      SpectrumEstimate& spectrum, int n_boot, std::uint64_t seed,
                      double percentile_lo, double percentile_hi) {
    if (n_boot < 30) throw std::invalid_argument("bootstrap_errors: n_boot must be >= 30");
    const long n = spectrum.eigenvalues.size();
    const int N = int(samples.size());
    Rng rng(seed);

    std::vector<std::vector<double>> eig_reps(n);
    std::vector<std::vector<double>> dist_reps(n - 1);

    std::vector<int> idx(N);
    for (int b = 0; b < n_boot; ++b) {
        for (int i = 0; i < N; ++i) idx[i] = int(rng.below(N));
        Eigen::VectorXd ev;
        Eigen::MatrixXd W;
        decompose(outer_product_average(samples, idx), ev, W);
        for (long i = 0; i < n; ++i) eig_reps[i].push_back(ev[i]);
        for (long k = 1; k < n; ++k)
            dist_reps[k - 1].push_back(
                subspace_distance(W.leftCols(k), spectrum.eigenvectors.leftCols(k)));
    }

    auto percentile = [](std::vector<double> v, double pct) {
        std::sort(v.begin(), v.end());
        const double pos = pct / 100.0 * double(v.size() - 1);
        const std::size_t lo = std::size_t(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double t = pos - double(lo);
        return v[lo] + t * (v[hi] - v[lo]);
    };

    spectrum.eigenvalue_intervals.clear();
    for (long i = 0; i < n; ++i)
        spectrum.eigenvalue_intervals.emplace_back(percentile(eig_reps[i], percentile_lo),
                                                   percentile(eig_reps[i], percentile_hi));
    spectrum.subspace_errors.clear();
    for (long k = 1; k < n; ++k) {
        double mean = 0.0;
        for (double d : dist_reps[k - 1]) mean += d;
        spectrum.subspace_errors.push_back(mean / double(n_boot));
    }
}

ActiveSubspace split(const SpectrumEstimate& spectrum, int k) {
    const long n = spectrum.eigenvectors.cols();
    if (!(k >= 1 && k <= n))
        throw std::invalid_argument("split: k must be in [1, n]");
    ActiveSubspace as;
    as.k = k;
    as.W1 = spectrum.eigenvectors.leftCols(k);
    as.W2 = spectrum.eigenvectors.rightCols(n - k);
    return as;
}

int largest_gap_dimension(const SpectrumEstimate& spectrum) {
    const long n = spectrum.eigenvalues.size();
    int best_k = 1;
    double best_ratio = -1.0;
    for (long k = 1; k < n; ++k) {
        const double num = spectrum.eigenvalues[k - 1];
        const double den = std::max(spectrum.eigenvalues[k], 1e-300);
        const double ratio = num / den;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_k = int(k);
        }
    }
    return best_k;
}

}  // namespace ghbs

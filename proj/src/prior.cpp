#include "ghbs/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ghbs {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

void PriorBox::validate() const {
    for (int i = 0; i < kParamDim; ++i) {
        if (!(intervals[i].first < intervals[i].second)) {
            std::ostringstream os;
            os << "PriorBox: interval " << i + 1 << " has min >= max";
            throw std::invalid_argument(os.str());
        }
    }
}

std::array<double, kParamDim> to_array(const PlasticParams& pp) {
    return {pp.c, pp.alpha_res_l, pp.delta_alpha_res, pp.lambda_dot_star,
            pp.m_alpha, pp.beta_star, pp.lambda_star, pp.m_beta};
}

PlasticParams from_array(const std::array<double, kParamDim>& a) {
    PlasticParams pp;
    pp.c = a[0];
    pp.alpha_res_l = a[1];
    pp.delta_alpha_res = a[2];
    pp.lambda_dot_star = a[3];
    pp.m_alpha = a[4];
    pp.beta_star = a[5];
    pp.lambda_star = a[6];
    pp.m_beta = a[7];
    return pp;
}

PlasticParams PriorBox::to_physical(const Eigen::VectorXd& x_norm) const {
    if (x_norm.size() != kParamDim)
        throw DimensionMismatch("to_physical: expected an 8-vector");
    std::array<double, kParamDim> a;
    for (int i = 0; i < kParamDim; ++i) {
        const double x = x_norm[i];
        if (x < -1.0 || x > 1.0) {
            std::ostringstream os;
            os << "to_physical: coordinate " << i + 1 << " = " << x
               << " outside [-1, 1]";
            throw OutOfBox(os.str());
        }
        const auto [lo, hi] = intervals[i];
        a[i] = lo + 0.5 * (x + 1.0) * (hi - lo);
    }
    return from_array(a);
}

Eigen::VectorXd PriorBox::to_normalized(const PlasticParams& pp) const {
    const auto a = to_array(pp);
    Eigen::VectorXd x(kParamDim);
    for (int i = 0; i < kParamDim; ++i) {
        const auto [lo, hi] = intervals[i];
        const double t = 2.0 * (a[i] - lo) / (hi - lo) - 1.0;
        if (t < -1.0 - 1e-12 || t > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "to_normalized: parameter " << i + 1 << " = " << a[i]
               << " outside its prior interval";
            throw OutOfBox(os.str());
        }
        x[i] = std::clamp(t, -1.0, 1.0);
    }
    return x;
}

Eigen::MatrixXd PriorBox::sample_prior(Rng& rng, int count) const {
    if (count < 1) throw std::invalid_argument("sample_prior: count must be >= 1");
    Eigen::MatrixXd pts(count, kParamDim);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < kParamDim; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
    return pts;
}

KdeEstimate KdeEstimate::fit(const Eigen::MatrixXd& samples, double bandwidth_scale) {
    const long n = samples.rows();
    const int k = int(samples.cols());
    if (n < 2) throw InsufficientSamples("KdeEstimate: need at least 2 samples");

    KdeEstimate kde;
    kde.bandwidth_.resize(k);
    const double factor = bandwidth_scale * std::pow(double(n), -1.0 / (k + 4));
    for (int d = 0; d < k; ++d) {
        const double mean = samples.col(d).mean();
        const double var =
            (samples.col(d).array() - mean).square().sum() / double(n - 1);
        double sd = std::sqrt(std::max(var, 0.0));
        if (!(sd > 0.0)) sd = 1e-12;  // degenerate column, keep the kernel proper
        kde.bandwidth_[d] = factor * sd;
    }

    // Sort by the first coordinate for window pruning during evaluation.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return samples(a, 0) < samples(b, 0);
    });
    kde.points_.resize(k, n);
    kde.first_coord_.resize(n);
    for (long i = 0; i < n; ++i) {
        kde.points_.col(i) = samples.row(order[i]).transpose();
        kde.first_coord_[i] = samples(order[i], 0);
    }

    double h_prod = 1.0;
    for (int d = 0; d < k; ++d) h_prod *= kde.bandwidth_[d];
    kde.norm_const_ = 1.0 / (double(n) * h_prod * std::pow(kTwoPi, 0.5 * k));
    return kde;
}

double KdeEstimate::eval(const Eigen::VectorXd& y) const {
    const int k = dim();
    if (y.size() != k) throw DimensionMismatch("KdeEstimate::eval: dimension mismatch");

    // Points further than cutoff bandwidths in the first coordinate
    // contribute less than exp(-0.5 * cutoff^2) ~ 1e-10 each.
    constexpr double cutoff = 9.0;
    const double h0 = bandwidth_[0];
    const auto lo = std::lower_bound(first_coord_.begin(), first_coord_.end(),
                                     y[0] - cutoff * h0);
    const auto hi = std::upper_bound(first_coord_.begin(), first_coord_.end(),
                                     y[0] + cutoff * h0);
    const long i0 = lo - first_coord_.begin();
    const long i1 = hi - first_coord_.begin();

    double sum = 0.0;
    for (long i = i0; i < i1; ++i) {
        double r2 = 0.0;
        for (int d = 0; d < k; ++d) {
            const double t = (y[d] - points_(d, i)) / bandwidth_[d];
            r2 += t * t;
            if (r2 > cutoff * cutoff) break;
        }
        if (r2 <= cutoff * cutoff) sum += std::exp(-0.5 * r2);
    }
    return norm_const_ * sum;
}

}  // namespace ghbs

#include "ghbs/inverse.hpp"

#include <cmath>
#include <sstream>

namespace ghbs {

void Dataset::validate() const {
    if (stations.size() != d_eps.size() || stations.size() != d_sigma.size())
        throw std::invalid_argument("Dataset: block lengths differ");
    for (std::size_t i = 1; i < stations.size(); ++i)
        if (!(stations[i] > stations[i - 1]))
            throw std::invalid_argument("Dataset: stations must be strictly increasing");
}

Eigen::VectorXd Dataset::stacked() const {
    const long n = long(stations.size());
    Eigen::VectorXd d(2 * n);
    for (long i = 0; i < n; ++i) {
        d[i] = d_eps[i];
        d[n + i] = d_sigma[i];
    }
    return d;
}

void NoiseModel::validate() const {
    for (long i = 0; i < sigma.size(); ++i)
        if (!(sigma[i] > 0.0))
            throw std::invalid_argument("NoiseModel: standard deviations must be > 0");
}

NoiseModel NoiseModel::relative(const Dataset& data, double level, double floor_eps,
                                double floor_sigma) {
    data.validate();
    const long n = long(data.stations.size());
    NoiseModel nm;
    nm.sigma.resize(2 * n);
    for (long i = 0; i < n; ++i) {
        nm.sigma[i] = std::max(level * std::abs(data.d_eps[i]), floor_eps);
        nm.sigma[n + i] = std::max(level * std::abs(data.d_sigma[i]), floor_sigma);
    }
    nm.validate();
    return nm;
}

namespace {

Eigen::VectorXd eval_forward(const ForwardMap& forward, const Eigen::VectorXd& x) {
    try {
        return forward(x);
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "forward model failed at x = [";
        for (long i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << "]: " << e.what();
        throw MisfitEvaluationError(os.str());
    }
}

}  // namespace

double misfit_from_response(const Eigen::VectorXd& g, const Dataset& data,
                            const NoiseModel& noise) {
    const Eigen::VectorXd d = data.stacked();
    if (g.size() != d.size() || noise.sigma.size() != d.size())
        throw DimensionMismatch("misfit: observation vector size mismatch");
    const Eigen::ArrayXd r = (d - g).array() / noise.sigma.array();
    return 0.5 * r.square().sum();
}

double misfit(const Eigen::VectorXd& x_norm, const Dataset& data,
              const NoiseModel& noise, const ForwardMap& forward) {
    return misfit_from_response(eval_forward(forward, x_norm), data, noise);
}

Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& x_norm, double h,
                            const ForwardMap& forward, bool* clamped) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_jacobian: h must be > 0");
    const long n = x_norm.size();
    bool any_clamped = false;
    Eigen::MatrixXd J;
    for (long j = 0; j < n; ++j) {
        const double hi = std::min(x_norm[j] + h, 1.0);
        const double lo = std::max(x_norm[j] - h, -1.0);
        if (hi - lo < 2.0 * h * (1.0 - 1e-12)) any_clamped = true;
        Eigen::VectorXd xp = x_norm, xm = x_norm;
        xp[j] = hi;
        xm[j] = lo;
        const Eigen::VectorXd gp = eval_forward(forward, xp);
        const Eigen::VectorXd gm = eval_forward(forward, xm);
        if (J.size() == 0) J.resize(gp.size(), n);
        J.col(j) = (gp - gm) / (hi - lo);
    }
    if (clamped) *clamped = any_clamped;
    return J;
}

MisfitGradientSample misfit_gradient(const Eigen::VectorXd& x_norm, const Dataset& data,
                                     const NoiseModel& noise, const ForwardMap& forward,
                                     double h) {
    MisfitGradientSample s;
    s.x_norm = x_norm;
    const Eigen::VectorXd g = eval_forward(forward, x_norm);
    s.f = misfit_from_response(g, data, noise);
    const Eigen::MatrixXd J = fd_jacobian(x_norm, h, forward, &s.clamped_stencil);
    const Eigen::VectorXd w = (g - data.stacked()).array() / noise.sigma.array().square();
    s.grad = J.transpose() * w;
    return s;
}

}  // namespace ghbs

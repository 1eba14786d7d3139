#include "ghbs/mcmc.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace ghbs {

void ChainConfig::validate(int dim) const {
    if (!(burn_in >= 0 && burn_in < n_steps))
        throw std::invalid_argument("ChainConfig: need 0 <= burn_in < n_steps");
    if (proposal_sd.size() != 0 && proposal_sd.size() != dim)
        throw DimensionMismatch("ChainConfig: proposal_sd dimension mismatch");
    for (long i = 0; i < proposal_sd.size(); ++i)
        if (!(proposal_sd[i] > 0.0))
            throw std::invalid_argument("ChainConfig: proposal scales must be > 0");
    if (init.size() != 0 && init.size() != dim)
        throw DimensionMismatch("ChainConfig: init dimension mismatch");
}

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, long j_max) {
    const long n = series.size();
    if (n < 2) return Eigen::VectorXd();
    long J = n / 3;
    if (j_max > 0) J = std::min(J, j_max);

    const double mean = series.mean();
    Eigen::VectorXd x = series.array() - mean;
    const double var0 = x.squaredNorm();
    // Treat variance at rounding level as zero: subtracting the mean of a
    // constant series leaves O(eps) residue that must not count as signal.
    if (var0 <= 1e-20 * double(n) * (1.0 + mean * mean))
        return Eigen::VectorXd::Zero(J);

    // Autocovariance by FFT with zero padding to the next power of two.
    long nfft = 1;
    while (nfft < 2 * n) nfft <<= 1;
    std::vector<double> padded(nfft, 0.0);
    for (long i = 0; i < n; ++i) padded[i] = x[i];

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);
    for (auto& c : spec) c = c * std::conj(c);
    std::vector<double> acov;
    fft.inv(acov, spec);

    Eigen::VectorXd r(J);
    for (long j = 1; j <= J; ++j) r[j - 1] = acov[j] / acov[0];
    return r;
}

double ess(const Eigen::VectorXd& series, long j_max) {
    const long n = series.size();
    if (n < 10) throw std::invalid_argument("ess: series length must be >= 10");
    const double mean = series.mean();
    const double var = (series.array() - mean).square().sum();
    if (var <= 1e-20 * double(n) * (1.0 + mean * mean))
        return 1.0;  // constant series up to rounding

    const Eigen::VectorXd r = autocorrelation(series, j_max);
    double s = 0.0;
    for (long j = 0; j < r.size(); ++j) {
        if (r[j] < 0.05) break;  // truncate once the correlation has decayed
        s += r[j];
    }
    const double e = double(n) / (1.0 + 2.0 * s);
    return std::clamp(e, 1.0, double(n));
}

std::vector<long> thin_effective(long chain_length, long count) {
    if (count < 1 || count > chain_length)
        throw std::invalid_argument("thin_effective: need 1 <= count <= chain length");
    std::vector<long> idx(count);
    for (long j = 0; j < count; ++j) {
        // Equal stride ending at the last sample.
        idx[j] = (j + 1) * chain_length / count - 1;
    }
    return idx;
}

namespace {

ChainResult run_chain(const std::function<double(const Eigen::VectorXd&)>& log_target,
                      int dim, const ChainConfig& cfg) {
    cfg.validate(dim);
    Eigen::VectorXd sd = cfg.proposal_sd;
    if (sd.size() == 0) sd = Eigen::VectorXd::Constant(dim, 0.1);
    Eigen::VectorXd y = cfg.init.size() ? cfg.init : Eigen::VectorXd::Zero(dim);

    double lt = log_target(y);
    if (!std::isfinite(lt))
        throw std::invalid_argument("mcmc: log target not finite at the initial point");

    Rng rng(cfg.seed);
    const long kept = cfg.n_steps - cfg.burn_in;
    ChainResult res;
    res.samples.resize(kept, dim);

    long accepted = 0;
    Eigen::VectorXd prop(dim);
    for (long i = 0; i < cfg.n_steps; ++i) {
        for (int d = 0; d < dim; ++d) prop[d] = y[d] + sd[d] * rng.normal();
        const double lt_prop = log_target(prop);
        bool accept = false;
        if (lt_prop > -std::numeric_limits<double>::infinity()) {
            const double log_ratio = lt_prop - lt;
            accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
        }
        if (accept) {
            y = prop;
            lt = lt_prop;
            ++accepted;
        }
        if (i >= cfg.burn_in) res.samples.row(i - cfg.burn_in) = y.transpose();
    }
    res.acceptance_rate = double(accepted) / double(cfg.n_steps);

    res.ess_per_component.resize(dim);
    for (int d = 0; d < dim; ++d) {
        res.autocorrelations.push_back(autocorrelation(res.samples.col(d)));
        res.ess_per_component[d] = ess(res.samples.col(d));
    }
    res.ess_min = res.ess_per_component.minCoeff();
    return res;
}

}  // namespace

ChainResult mh_generic(const std::function<double(const Eigen::VectorXd&)>& log_target,
                       int dim, const ChainConfig& cfg) {
    return run_chain(log_target, dim, cfg);
}

ChainResult mh_active(const QuadraticSurface& surface, const KdeEstimate& kde,
                      const ChainConfig& cfg) {
    if (surface.k != kde.dim())
        throw DimensionMismatch("mh_active: surrogate and KDE dimensions differ");
    auto log_target = [&](const Eigen::VectorXd& y) {
        const double rho = kde.eval(y);
        if (!(rho > 0.0)) return -std::numeric_limits<double>::infinity();
        return -eval_surface(surface, y) + std::log(rho);
    };
    return run_chain(log_target, surface.k, cfg);
}

ChainResult mh_inactive(const Eigen::VectorXd& y, const ActiveSubspace& as,
                        const ChainConfig& cfg) {
    const int nz = int(as.W2.cols());
    if (nz == 0) throw DimensionMismatch("mh_inactive: no inactive directions");
    cfg.validate(nz);

    auto inside = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = as.reconstruct(y, z);
        return (x.array() >= -1.0).all() && (x.array() <= 1.0).all();
    };

    // Feasible start: project the clamped lift of y, then retry with small
    // random perturbations.
    Rng start_rng(hash_combine(cfg.seed, 0x5eedu));
    const Eigen::VectorXd x0 =
        (as.W1 * y).cwiseMax(-1.0).cwiseMin(1.0);
    Eigen::VectorXd z = as.W2.transpose() * x0;
    if (!inside(z)) {
        bool found = false;
        for (int attempt = 0; attempt < 100 && !found; ++attempt) {
            Eigen::VectorXd zt = z;
            for (int d = 0; d < nz; ++d) zt[d] += 0.2 * start_rng.normal();
            if (inside(zt)) {
                z = zt;
                found = true;
            }
        }
        if (!found)
            throw NoFeasibleStart("mh_inactive: no in-box start for the given active sample");
    }

    ChainConfig sub = cfg;
    sub.init = z;
    if (sub.proposal_sd.size() == 0) sub.proposal_sd = Eigen::VectorXd::Constant(nz, 0.4);
    auto log_target = [&](const Eigen::VectorXd& zz) {
        return inside(zz) ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    return run_chain(log_target, nz, sub);
}

Eigen::MatrixXd inactive_effective_samples(const Eigen::VectorXd& y,
                                           const ActiveSubspace& as,
                                           const ChainConfig& cfg, long ess_target) {
    if (ess_target < 1)
        throw std::invalid_argument("inactive_effective_samples: ess_target must be >= 1");
    ChainConfig sub = cfg;
    sub.burn_in = std::min<long>(cfg.burn_in, cfg.n_steps / 10);
    long length = std::max<long>(cfg.n_steps, 20 * ess_target);
    for (int attempt = 0; attempt < 6; ++attempt) {
        sub.n_steps = length;
        sub.burn_in = length / 10;
        sub.seed = hash_combine(cfg.seed, std::uint64_t(attempt));
        const ChainResult res = mh_inactive(y, as, sub);
        const long kept = res.samples.rows();
        if (long(res.ess_min) >= ess_target || attempt == 5) {
            const long take = std::min<long>(ess_target, kept);
            const auto idx = thin_effective(kept, take);
            Eigen::MatrixXd out(take, res.samples.cols());
            for (long j = 0; j < take; ++j) out.row(j) = res.samples.row(idx[j]);
            return out;
        }
        length *= 4;
    }
    throw std::logic_error("inactive_effective_samples: unreachable");
}

PosteriorSampleSet reconstruct(const Eigen::MatrixXd& y_samples,
                               const std::vector<Eigen::MatrixXd>& z_samples_per_y,
                               const ActiveSubspace& as, const PriorBox& box) {
    const long n = as.W1.rows();
    const long ny = y_samples.rows();
    const bool full_space = as.W2.cols() == 0;
    if (!full_space && long(z_samples_per_y.size()) != ny)
        throw DimensionMismatch("reconstruct: one z block per active sample required");

    long total = 0;
    if (full_space) {
        total = ny;
    } else {
        const long nz_each = z_samples_per_y.empty() ? 0 : z_samples_per_y.front().rows();
        for (const auto& zb : z_samples_per_y)
            if (zb.rows() != nz_each)
                throw DimensionMismatch("reconstruct: unequal inactive sample counts");
        total = ny * nz_each;
    }

    PosteriorSampleSet out;
    out.samples_norm.resize(total, n);
    long row = 0;
    for (long i = 0; i < ny; ++i) {
        const Eigen::VectorXd y = y_samples.row(i).transpose();
        if (full_space) {
            out.samples_norm.row(row++) = (as.W1 * y).transpose();
        } else {
            const Eigen::MatrixXd& zb = z_samples_per_y[i];
            for (long j = 0; j < zb.rows(); ++j)
                out.samples_norm.row(row++) =
                    as.reconstruct(y, zb.row(j).transpose()).transpose();
        }
    }

    Eigen::MatrixXd phys(total, n);
    for (long i = 0; i < total; ++i) {
        const auto a = to_array(box.to_physical(out.samples_norm.row(i).transpose()));
        for (long d = 0; d < n; ++d) phys(i, d) = a[d];
    }
    out.mean_physical = phys.colwise().mean();
    out.std_physical.resize(n);
    for (long d = 0; d < n; ++d) {
        const double m = out.mean_physical[d];
        const double ss = (phys.col(d).array() - m).square().sum();
        out.std_physical[d] = (total > 1) ? std::sqrt(ss / double(total - 1)) : 0.0;
    }
    return out;
}

}  // namespace ghbs

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ghbs/active_subspace.hpp"
#include "ghbs/prior.hpp"
#include "ghbs/surrogate.hpp"

namespace ghbs {

struct ChainConfig {
    long n_steps = 1000000;
    long burn_in = 100000;
    /// Per-component proposal standard deviations. A Gaussian random-walk
    /// proposal with covariance s^2 I corresponds to all entries = s.
    Eigen::VectorXd proposal_sd;
    std::uint64_t seed = 0;
    Eigen::VectorXd init;  ///< empty = zero vector

    void validate(int dim) const;
};

struct ChainResult {
    Eigen::MatrixXd samples;  ///< post-burn-in, one sample per row
    double acceptance_rate = 0.0;
    std::vector<Eigen::VectorXd> autocorrelations;  ///< per component, lags 1..J
    Eigen::VectorXd ess_per_component;
    double ess_min = 0.0;
};

/// Full-space posterior samples with physical-unit summary statistics.
struct PosteriorSampleSet {
    Eigen::MatrixXd samples_norm;  ///< normalized coordinates, one per row
    Eigen::VectorXd mean_physical;
    Eigen::VectorXd std_physical;
};

/// Normalized autocorrelations r_1..r_J of a series, computed via FFT;
/// J capped at len/3 and at j_max when positive.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, long j_max = -1);

/// Effective sample size N / (1 + 2 sum r_j). The sum is truncated at the
/// first lag with r_j < 0.05 (and at j_max); clamped to [1, N]. A constant
/// series yields 1.
double ess(const Eigen::VectorXd& series, long j_max = -1);

/// Deterministic equal-stride subsample of the given size, always
/// including the last element.
std::vector<long> thin_effective(long chain_length, long count);

/// Metropolis-Hastings in the active variable: symmetric Gaussian
/// random-walk against exp(-g(y)) * kde(y). Proposals at zero estimated
/// prior density are rejected.
ChainResult mh_active(const QuadraticSurface& surface, const KdeEstimate& kde,
                      const ChainConfig& cfg);

/// Generic scalar-target sampler used for oracles and diagnostics.
ChainResult mh_generic(const std::function<double(const Eigen::VectorXd&)>& log_target,
                       int dim, const ChainConfig& cfg);

/// Metropolis-Hastings in the inactive variable conditioned on an active
/// sample: for the uniform box prior the acceptance rule is the indicator
/// that W1 y + W2 z stays inside [-1,1]^n. Throws NoFeasibleStart when no
/// in-box starting point is found.
ChainResult mh_inactive(const Eigen::VectorXd& y, const ActiveSubspace& as,
                        const ChainConfig& cfg);

/// Runs mh_inactive with the chain extended until the minimum component
/// ESS reaches ess_target (within a growth cap), then thins to exactly
/// ess_target samples.
Eigen::MatrixXd inactive_effective_samples(const Eigen::VectorXd& y,
                                           const ActiveSubspace& as,
                                           const ChainConfig& cfg, long ess_target);

/// Assembles full-space samples x = W1 y + W2 z for every (y_i, z_ij)
/// combination and computes physical-unit statistics through the prior box.
PosteriorSampleSet reconstruct(const Eigen::MatrixXd& y_samples,
                               const std::vector<Eigen::MatrixXd>& z_samples_per_y,
                               const ActiveSubspace& as, const PriorBox& box);

}  // namespace ghbs

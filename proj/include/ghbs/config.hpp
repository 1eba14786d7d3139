#pragma once

#include <cstdint>
#include <string>

#include "ghbs/prior.hpp"
#include "ghbs/triax.hpp"

namespace ghbs {

/// All knobs of the staged pipeline. Loaded from a flat "key = value"
/// file; every key has a default, unknown keys are rejected with their
/// line number.
struct PipelineConfig {
    std::uint64_t seed = 42;
    int workers = 0;  ///< 0 = hardware concurrency

    ElasticParams elastic;
    LoadingSchedule schedule;
    PriorBox prior;

    int station_count = 23;

    double noise_level = 0.02;
    double noise_floor_eps = 1e-5;
    double noise_floor_sigma = 1e3;

    double fd_step = 1e-4;

    Eigen::VectorXd truth_norm = Eigen::VectorXd::Zero(kParamDim);

    int gradient_count = 250;
    double gradient_max_failure_fraction = 0.05;

    int bootstrap_count = 200;

    int subspace_dim = 0;  ///< 0 = choose the largest spectral gap

    // Chain settings; 0 means "resolve from the paper-style preset for the
    // chosen subspace dimension" (see resolve_active_chain below).
    long active_steps = 0;
    long active_burn_in = 0;
    double active_proposal_cov = 0.0;

    double inactive_proposal_cov = 0.0;
    long inactive_ess = 10;
    long inactive_steps = 2000;

    long kde_samples = 100000;
    double kde_bandwidth_scale = 1.0;

    double tol_lat = 1.0;
    double tol_yield_rel = 1e-6;

    void validate() const;

    /// Canonical serialization: sorted "key = value" lines covering every
    /// field, suitable for hashing and for writing a template config.
    std::string canonical() const;

    /// FNV-1a hash of the canonical serialization, as fixed-width hex.
    std::string hash() const;

    std::vector<double> stations() const { return default_stations(schedule, station_count); }

    struct ResolvedChain {
        long steps;
        long burn_in;
        double proposal_sd;          ///< active chain
        double inactive_proposal_sd;
    };
    /// Fills unset chain fields from the presets: k <= 2 uses
    /// 1e6/1e5/cov 0.02 (inactive cov 0.4); larger k uses 1e7/1e6/0.0017
    /// (inactive cov 0.8). Stored values are covariance scales; the
    /// returned proposal scales are standard deviations.
    ResolvedChain resolve_active_chain(int k) const;
};

/// Parses a config file. Throws ConfigError with a "file:line:" prefix on
/// syntax errors, unknown keys, or invalid values.
PipelineConfig load_config(const std::string& path);

/// Parses config text (same rules), with a name used in error messages.
PipelineConfig parse_config(const std::string& text, const std::string& name);

}  // namespace ghbs

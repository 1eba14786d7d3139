#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "ghbs/constitutive.hpp"
#include "ghbs/errors.hpp"
#include "ghbs/rng.hpp"

namespace ghbs {

inline constexpr int kParamDim = 8;

/// Physical intervals of the eight plasticity parameters, in inference
/// ordering. Defaults are the calibrated prior ranges.
struct PriorBox {
    std::array<std::pair<double, double>, kParamDim> intervals{{
        {1.8e6, 2.4e6},    // c [Pa]
        {0.5, 0.6},        // alpha_res_l
        {0.2, 0.3},        // delta_alpha_res
        {1.6e-3, 1.9e-3},  // lambda_dot_star
        {0.75, 1.05},      // m_alpha
        {0.3, 0.45},       // beta_star
        {0.01, 0.011},     // lambda_star
        {0.67, 0.74},      // m_beta
    }};

    void validate() const;

    /// Affine map from the normalized cube [-1,1]^8 to physical units.
    /// Throws OutOfBox on inputs strictly outside the cube.
    PlasticParams to_physical(const Eigen::VectorXd& x_norm) const;

    /// Inverse map; throws OutOfBox when the physical point leaves the box.
    Eigen::VectorXd to_normalized(const PlasticParams& pp) const;

    /// i.i.d. uniform draws on [-1,1]^8, one per row.
    Eigen::MatrixXd sample_prior(Rng& rng, int count) const;
};

std::array<double, kParamDim> to_array(const PlasticParams& pp);
PlasticParams from_array(const std::array<double, kParamDim>& a);

/// Gaussian product-kernel density estimate with per-dimension bandwidths.
class KdeEstimate {
public:
    /// Fits bandwidths by Scott's rule: sd_d * N^{-1/(k+4)}, optionally
    /// scaled by a common factor. Samples are one point per row.
    static KdeEstimate fit(const Eigen::MatrixXd& samples, double bandwidth_scale = 1.0);

    int dim() const { return int(points_.rows()); }
    long sample_count() const { return long(points_.cols()); }
    const Eigen::VectorXd& bandwidth() const { return bandwidth_; }

    double eval(const Eigen::VectorXd& y) const;

private:
    // Points stored column-wise, sorted by the first coordinate so that
    // evaluation can prune on it.
    Eigen::MatrixXd points_;
    Eigen::VectorXd bandwidth_;
    std::vector<double> first_coord_;
    double norm_const_ = 0.0;
};

}  // namespace ghbs

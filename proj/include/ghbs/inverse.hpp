#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ghbs/errors.hpp"

namespace ghbs {

/// Forward map from a normalized parameter point to the stacked
/// observation vector.
using ForwardMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Observations of one triaxial test: volumetric strain and shear stress
/// at fixed axial strain stations.
struct Dataset {
    std::vector<double> stations;     ///< axial strain magnitudes, strictly increasing
    std::vector<double> d_eps;        ///< volumetric strain
    std::vector<double> d_sigma;      ///< shear stress [Pa]

    void validate() const;
    Eigen::VectorXd stacked() const;  ///< (d_eps..., d_sigma...)
};

/// Diagonal Gaussian noise model: per-observation standard deviations.
struct NoiseModel {
    Eigen::VectorXd sigma;

    void validate() const;

    /// sigma_i = max(level * |d_i|, floor), with separate floors for the
    /// strain and stress blocks.
    static NoiseModel relative(const Dataset& data, double level = 0.02,
                               double floor_eps = 1e-5, double floor_sigma = 1e3);
};

/// One gradient sample of the data misfit in normalized coordinates.
struct MisfitGradientSample {
    Eigen::VectorXd x_norm;
    double f = 0.0;
    Eigen::VectorXd grad;
    bool clamped_stencil = false;  ///< any FD stencil clamped at the box face
};

/// Data misfit f_d(x) = (1/2) sum_i ((d_i - G_i(x)) / sigma_i)^2.
/// Forward failures surface as MisfitEvaluationError carrying the point.
double misfit(const Eigen::VectorXd& x_norm, const Dataset& data,
              const NoiseModel& noise, const ForwardMap& forward);

/// Same, reusing an already-computed forward value at x.
double misfit_from_response(const Eigen::VectorXd& g, const Dataset& data,
                            const NoiseModel& noise);

/// Central finite-difference Jacobian of the forward map, column j from
/// (G(x + h e_j) - G(x - h e_j)) / 2h. Stencil points leaving [-1,1]^n are
/// clamped to the face (one-sided difference); *clamped reports whether
/// any column was clamped.
Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& x_norm, double h,
                            const ForwardMap& forward, bool* clamped = nullptr);

/// Misfit gradient assembled as J^T Gamma^{-1} (G(x) - d); uses 2n + 1
/// forward evaluations in total.
MisfitGradientSample misfit_gradient(const Eigen::VectorXd& x_norm, const Dataset& data,
                                     const NoiseModel& noise, const ForwardMap& forward,
                                     double h);

}  // namespace ghbs

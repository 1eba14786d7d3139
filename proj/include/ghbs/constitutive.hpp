#pragma once

#include <utility>

#include "ghbs/errors.hpp"
#include "ghbs/tensor.hpp"

namespace ghbs {

/// Elastic constants of the hydrate-bearing sand. The effective Young's
/// modulus combines the sand skeleton and the hydrate contribution scaled
/// by saturation.
struct ElasticParams {
    double E_s = 1.5e8;  ///< sand Young's modulus [Pa]
    double E_h = 6.0e8;  ///< hydrate Young's modulus [Pa]
    double m = 1.0;      ///< saturation exponent
    double nu = 0.3;     ///< Poisson's ratio
    double S_h = 0.4;    ///< hydrate saturation in [0, 1]

    void validate() const;
};

/// Duration of the reference loading step [s]. The dimensionless reference
/// rate lambda_dot_star is expressed per step of this length, so plastic
/// multiplier rates are nondimensionalized as (d_lambda/dt)*kRateTimeUnit
/// before dividing by lambda_dot_star.
inline constexpr double kRateTimeUnit = 10.0;

/// The eight plasticity parameters, in the fixed inference ordering.
struct PlasticParams {
    double c = 2.1e6;              ///< cohesion [Pa]
    double alpha_res_l = 0.55;     ///< initial residual friction
    double delta_alpha_res = 0.25; ///< residual friction increase
    double lambda_dot_star = 1.75e-3; ///< reference plastic strain rate [1/step]
    double m_alpha = 0.9;          ///< friction exponent
    double beta_star = 0.375;      ///< peak dilatancy
    double lambda_star = 0.0105;   ///< plastic shear strain at peak dilatancy
    double m_beta = 0.705;         ///< dilatancy exponent

    void validate() const;
};

/// Hardening variables evaluated from the accumulated plastic shear strain
/// and its current rate.
struct HardeningState {
    double alpha = 0.0;  ///< mobilized frictional resistance
    double beta = 0.0;   ///< dilatancy
    double c = 0.0;      ///< cohesion [Pa]
};

/// Stress and plastic history at a single material point.
struct MaterialState {
    SymTensor2 sigma;          ///< Cauchy stress [Pa]
    SymTensor2 eps_p;          ///< plastic strain
    double lambda_acc = 0.0;   ///< accumulated plastic shear strain
    double lambda_dot = 0.0;   ///< plastic multiplier rate of the last step [1/step]
};

/// Numerical controls for the local stress update.
struct ReturnMapOptions {
    double tol_yield_rel = 1e-6; ///< |F| tolerance as a fraction of cohesion
    int max_iter = 50;
    int max_substep_depth = 10;

    double tol_yield(const PlasticParams& pp) const { return tol_yield_rel * pp.c; }
};

/// Result of one local stress update; delta_lambda is the plastic
/// multiplier increment of the step (0 for elastic steps).
struct StepResult {
    MaterialState state;
    double delta_lambda = 0.0;
};

/// (p, q): mean stress and deviatoric stress invariant.
std::pair<double, double> stress_invariants(const SymTensor2& sigma);

/// (eps_v_dot, eps_s_dot): volumetric and shear strain-rate invariants.
std::pair<double, double> strain_rate_invariants(const SymTensor2& eps_dot);

/// E = E_s + S_h^m E_h. The confining-stress dependence of E_s is folded
/// into the constant E_s.
double youngs_modulus(const ElasticParams& ep);

/// Isotropic linear-elastic stiffness in Lame form.
class ElasticStiffness {
public:
    ElasticStiffness(double E, double nu);

    double lame1() const { return lame1_; }
    double lame2() const { return lame2_; }
    double bulk() const { return lame1_ + 2.0 * lame2_ / 3.0; }

    SymTensor2 apply(const SymTensor2& strain) const;

private:
    double lame1_;
    double lame2_;
};

/// Evaluates the hardening laws at (lambda_acc, lambda_dot). The rate
/// factor (1 + 1/r)^{-1} is continued with its limit 0 at lambda_dot = 0.
HardeningState evolve_hardening(double lambda_acc, double lambda_dot,
                                const PlasticParams& pp);

/// Drucker-Prager yield value F = q + alpha p - c.
inline double yield_value(double p, double q, double alpha, double c) {
    return q + alpha * p - c;
}

/// Advances the material state over a strain increment using an implicit
/// return mapping with all derivatives taken at the final point. Elastic
/// trials inside the yield surface are accepted unchanged. Throws
/// ReturnMapDivergence when the local iteration fails after substepping.
StepResult integrate_step(const MaterialState& state, const SymTensor2& d_eps,
                          double dt, const ElasticParams& ep, const PlasticParams& pp,
                          const ReturnMapOptions& opt = {});

}  // namespace ghbs

#pragma once

#include <vector>

#include "ghbs/constitutive.hpp"

namespace ghbs {

/// Two-stage loading program of the drained triaxial compression test:
/// isotropic consolidation to sigma_c followed by strain-controlled axial
/// compression at constant confining stress.
struct LoadingSchedule {
    double sigma_c = 1e6;            ///< confining stress [Pa]
    double eps_a_rate = -1.04167e-5; ///< axial strain rate [1/s]
    int n_steps = 1350;
    double dt = 10.0;                ///< step size [s]

    void validate() const;

    /// Magnitude of the axial strain reached at the end of stage 2.
    double final_axial_strain() const { return -eps_a_rate * dt * n_steps; }
};

/// Controls for the constant-lateral-stress mixed-control solve.
struct LateralControlOptions {
    double tol_lat = 1.0;  ///< |sigma_lateral + sigma_c| tolerance [Pa]
    int max_iter = 30;
};

/// Per-step history of one simulated test. Strains are measured relative
/// to the end of the consolidation stage; length is n_steps + 1.
struct TrajectoryRecord {
    std::vector<double> axial_strain;
    std::vector<double> vol_strain;
    std::vector<double> p;
    std::vector<double> q;
    std::vector<double> lambda_acc;
    std::vector<double> alpha;
    std::vector<double> beta;

    std::size_t size() const { return axial_strain.size(); }
};

/// Forward-map output: volumetric strain and shear stress interpolated to
/// fixed axial strain stations.
struct QoIResponse {
    std::vector<double> axial_strain_stations;  ///< magnitudes, strictly increasing
    std::vector<double> vol_strain;
    std::vector<double> shear_stress;           ///< [Pa]
};

/// Default stations: count values uniformly spaced in axial strain
/// magnitude over (0, final], excluding 0.
std::vector<double> default_stations(const LoadingSchedule& sched, int count = 23);

/// Runs the two-stage triaxial test at a material point. Stage 1 is the
/// closed-form elastic isotropic load; stage 2 holds both lateral stresses
/// at -sigma_c via a safeguarded secant solve for the lateral strain
/// increment of each step.
TrajectoryRecord simulate(const PlasticParams& pp, const ElasticParams& ep,
                          const LoadingSchedule& sched,
                          const LateralControlOptions& lat = {},
                          const ReturnMapOptions& rmap = {});

/// Interpolates a trajectory onto the given stations. Output ordering for
/// the stacked response vector is all vol_strain values, then all
/// shear_stress values.
QoIResponse qoi_map(const PlasticParams& pp, const ElasticParams& ep,
                    const LoadingSchedule& sched,
                    const std::vector<double>& stations,
                    const LateralControlOptions& lat = {},
                    const ReturnMapOptions& rmap = {});

/// Same interpolation applied to an existing trajectory.
QoIResponse interpolate_stations(const TrajectoryRecord& traj,
                                 const std::vector<double>& stations);

/// Stacks a response as (vol_strain..., shear_stress...).
std::vector<double> stack_response(const QoIResponse& qoi);

}  // namespace ghbs

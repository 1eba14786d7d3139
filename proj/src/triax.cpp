#include "ghbs/triax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ghbs {

void LoadingSchedule::validate() const {
    if (!(sigma_c > 0.0)) throw std::invalid_argument("LoadingSchedule: sigma_c must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("LoadingSchedule: dt must be > 0");
    if (n_steps < 0) throw std::invalid_argument("LoadingSchedule: n_steps must be >= 0");
}

std::vector<double> default_stations(const LoadingSchedule& sched, int count) {
    const double final = sched.final_axial_strain();
    std::vector<double> s(count);
    for (int i = 0; i < count; ++i) s[i] = final * double(i + 1) / double(count);
    return s;
}

namespace {

void record(TrajectoryRecord& tr, const MaterialState& st, double eps_a, double eps_v,
            const PlasticParams& pp) {
    const auto [p, q] = stress_invariants(st.sigma);
    const HardeningState h = evolve_hardening(st.lambda_acc, st.lambda_dot, pp);
    tr.axial_strain.push_back(eps_a);
    tr.vol_strain.push_back(eps_v);
    tr.p.push_back(p);
    tr.q.push_back(q);
    tr.lambda_acc.push_back(st.lambda_acc);
    tr.alpha.push_back(h.alpha);
    tr.beta.push_back(h.beta);
}

double lateral_stress(const MaterialState& st) { return st.sigma.yy(); }

}  // namespace

TrajectoryRecord simulate(const PlasticParams& pp, const ElasticParams& ep,
                          const LoadingSchedule& sched, const LateralControlOptions& lat,
                          const ReturnMapOptions& rmap) {
    sched.validate();
    pp.validate();
    const ElasticStiffness stiff(youngs_modulus(ep), ep.nu);

    // Stage 1: closed-form elastic isotropic consolidation. The isotropic
    // state must lie inside the initial yield surface.
    MaterialState st;
    st.sigma = SymTensor2::diag(-sched.sigma_c, -sched.sigma_c, -sched.sigma_c);
    {
        const HardeningState h0 = evolve_hardening(0.0, 0.0, pp);
        const auto [p0, q0] = stress_invariants(st.sigma);
        if (yield_value(p0, q0, h0.alpha, h0.c) > 0.0) {
            throw InvalidInitialState(
                "isotropic consolidation state lies outside the initial yield surface");
        }
    }

    TrajectoryRecord tr;
    double eps_a = 0.0;
    SymTensor2 eps_rel = SymTensor2::zero();  // strain relative to stage-1 end
    record(tr, st, eps_a, eps_rel.trace(), pp);

    const double d_eps_a = sched.eps_a_rate * sched.dt;
    // Elastic predictor for the lateral increment at constant lateral stress.
    const double elastic_guess =
        -stiff.lame1() / (2.0 * (stiff.lame1() + stiff.lame2())) * d_eps_a;

    for (int step = 0; step < sched.n_steps; ++step) {
        auto trial = [&](double d_eps_l) {
            const SymTensor2 d_eps = SymTensor2::diag(d_eps_a, d_eps_l, d_eps_l);
            return integrate_step(st, d_eps, sched.dt, ep, pp, rmap);
        };
        auto residual = [&](const StepResult& r) {
            return lateral_stress(r.state) + sched.sigma_c;
        };

        double accepted = 0.0;
        StepResult best;
        bool solved = false;
        try {
            double x0 = elastic_guess;
            StepResult r0 = trial(x0);
            double f0 = residual(r0);
            if (std::abs(f0) <= lat.tol_lat) {
                accepted = x0;
                best = r0;
                solved = true;
            } else {
                double x1 = x0 + std::max(std::abs(d_eps_a), 1e-8) * 0.05;
                StepResult r1 = trial(x1);
                double f1 = residual(r1);
                for (int it = 0; it < lat.max_iter; ++it) {
                    if (std::abs(f1) <= lat.tol_lat) {
                        accepted = x1;
                        best = r1;
                        solved = true;
                        break;
                    }
                    if (f1 == f0) break;
                    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                    // Keep the step from running away on poor curvature.
                    const double span = 10.0 * std::abs(d_eps_a) + 1e-6;
                    const double xc = std::clamp(x2, x1 - span, x1 + span);
                    x0 = x1;
                    f0 = f1;
                    x1 = xc;
                    r1 = trial(x1);
                    f1 = residual(r1);
                }
            }
        } catch (const ReturnMapDivergence& e) {
            std::ostringstream os;
            os << e.what() << " (step " << step + 1 << ")";
            throw ReturnMapDivergence(os.str());
        }
        if (!solved) {
            std::ostringstream os;
            os << "lateral stress control did not converge at step " << step + 1;
            throw LateralControlFailure(os.str());
        }

        st = best.state;
        eps_a += d_eps_a;
        eps_rel += SymTensor2::diag(d_eps_a, accepted, accepted);
        record(tr, st, eps_a, eps_rel.trace(), pp);
    }

    return tr;
}

QoIResponse interpolate_stations(const TrajectoryRecord& traj,
                                 const std::vector<double>& stations) {
    QoIResponse out;
    out.axial_strain_stations = stations;
    const std::size_t n = traj.size();
    if (n < 2) throw StationOutOfRange("trajectory too short for interpolation");

    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(traj.axial_strain[i]);
    const double maxmag = mag.back();

    for (double s : stations) {
        if (s < 0.0 || s > maxmag * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "station " << s << " outside simulated range [0, " << maxmag << "]";
            throw StationOutOfRange(os.str());
        }
        const double sc = std::min(s, maxmag);
        auto it = std::lower_bound(mag.begin(), mag.end(), sc);
        std::size_t hi = std::min<std::size_t>(it - mag.begin(), n - 1);
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        const double span = mag[hi] - mag[lo];
        const double t = (span > 0.0) ? (sc - mag[lo]) / span : 0.0;
        out.vol_strain.push_back(traj.vol_strain[lo] +
                                 t * (traj.vol_strain[hi] - traj.vol_strain[lo]));
        out.shear_stress.push_back(traj.q[lo] + t * (traj.q[hi] - traj.q[lo]));
    }
    return out;
}

QoIResponse qoi_map(const PlasticParams& pp, const ElasticParams& ep,
                    const LoadingSchedule& sched, const std::vector<double>& stations,
                    const LateralControlOptions& lat, const ReturnMapOptions& rmap) {
    return interpolate_stations(simulate(pp, ep, sched, lat, rmap), stations);
}

std::vector<double> stack_response(const QoIResponse& qoi) {
    std::vector<double> v;
    v.reserve(qoi.vol_strain.size() + qoi.shear_stress.size());
    v.insert(v.end(), qoi.vol_strain.begin(), qoi.vol_strain.end());
    v.insert(v.end(), qoi.shear_stress.begin(), qoi.shear_stress.end());
    return v;
}

}  // namespace ghbs

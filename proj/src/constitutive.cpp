#include "ghbs/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ghbs {

void ElasticParams::validate() const {
    if (!(E_s > 0.0)) throw std::invalid_argument("ElasticParams: E_s must be > 0");
    if (!(E_h >= 0.0)) throw std::invalid_argument("ElasticParams: E_h must be >= 0");
    if (!(nu > 0.0 && nu < 0.5))
        throw std::invalid_argument("ElasticParams: nu must lie in (0, 0.5)");
    if (!(S_h >= 0.0 && S_h <= 1.0))
        throw std::invalid_argument("ElasticParams: S_h must lie in [0, 1]");
}

void PlasticParams::validate() const {
    const double vals[] = {c, alpha_res_l, delta_alpha_res, lambda_dot_star,
                           m_alpha, beta_star, lambda_star, m_beta};
    const char* names[] = {"c", "alpha_res_l", "delta_alpha_res", "lambda_dot_star",
                           "m_alpha", "beta_star", "lambda_star", "m_beta"};
    for (int i = 0; i < 8; ++i) {
        if (!(vals[i] > 0.0)) {
            std::ostringstream os;
            os << "PlasticParams: " << names[i] << " must be > 0";
            throw std::invalid_argument(os.str());
        }
    }
}

std::pair<double, double> stress_invariants(const SymTensor2& sigma) {
    const double p = sigma.trace() / 3.0;
    const double q = std::sqrt(1.5) * sigma.dev().norm();
    return {p, q};
}

std::pair<double, double> strain_rate_invariants(const SymTensor2& eps_dot) {
    const double ev = eps_dot.trace();
    const double es = std::sqrt(2.0 / 3.0) * eps_dot.dev().norm();
    return {ev, es};
}

double youngs_modulus(const ElasticParams& ep) {
    ep.validate();
    return ep.E_s + std::pow(ep.S_h, ep.m) * ep.E_h;
}

ElasticStiffness::ElasticStiffness(double E, double nu) {
    if (!(E > 0.0)) throw std::invalid_argument("ElasticStiffness: E must be > 0");
    if (!(nu > 0.0 && nu < 0.5))
        throw std::invalid_argument("ElasticStiffness: nu must lie in (0, 0.5)");
    lame1_ = nu * E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    lame2_ = E / (2.0 * (1.0 + nu));
}

SymTensor2 ElasticStiffness::apply(const SymTensor2& strain) const {
    SymTensor2 s = strain * (2.0 * lame2_);
    const double vol = lame1_ * strain.trace();
    s.v[0] += vol;
    s.v[1] += vol;
    s.v[2] += vol;
    return s;
}

HardeningState evolve_hardening(double lambda_acc, double lambda_dot,
                                const PlasticParams& pp) {
    const double lb = lambda_acc / pp.lambda_star;
    HardeningState h;
    h.c = pp.c;
    h.beta = (lb > 0.0)
                 ? pp.beta_star * lb * std::exp(1.0 - std::pow(lb, pp.m_beta))
                 : 0.0;
    // (1 + 1/rbar)^{-1} = rbar / (1 + rbar); limit 0 as the rate vanishes.
    const double rbar = lambda_dot / pp.lambda_dot_star;
    const double rate_factor = (rbar > 0.0) ? rbar / (1.0 + rbar) : 0.0;
    const double alpha_res =
        pp.alpha_res_l +
        pp.delta_alpha_res * rate_factor * ((lb > 0.0) ? std::pow(lb, pp.m_alpha) : 0.0);
    h.alpha = h.beta + alpha_res;
    return h;
}

namespace {

// Scalar consistency residual of the return mapping. With the deviatoric
// flow direction fixed by the trial state, the return reduces to
//   q(dl) = q_tr - 3 L2 dl,   p(dl) = p_tr - K beta(dl) dl,
// with the hardening variables evaluated implicitly at lambda + dl.
struct ConsistencyResidual {
    double p_tr, q_tr;
    double lame2, bulk;
    double lambda_acc, dt;
    bool has_deviator;
    const PlasticParams* pp;

    double operator()(double dl) const {
        const HardeningState h =
            evolve_hardening(lambda_acc + dl, dl / dt * kRateTimeUnit, *pp);
        const double q = has_deviator ? q_tr - 3.0 * lame2 * dl : 0.0;
        const double p = p_tr - bulk * h.beta * dl;
        return yield_value(p, q, h.alpha, h.c);
    }
};

StepResult integrate_once(const MaterialState& state, const SymTensor2& d_eps,
                          double dt, const ElasticStiffness& stiff,
                          const PlasticParams& pp, const ReturnMapOptions& opt,
                          bool& converged) {
    converged = true;

    const SymTensor2 sigma_tr = state.sigma + stiff.apply(d_eps);
    const auto [p_tr, q_tr] = stress_invariants(sigma_tr);

    // Trial check with the hardening state at zero rate: an elastic step
    // carries no plastic flow, so its rate term vanishes.
    const HardeningState h0 = evolve_hardening(state.lambda_acc, 0.0, pp);
    const double tol = opt.tol_yield(pp);
    if (yield_value(p_tr, q_tr, h0.alpha, h0.c) <= tol) {
        StepResult r;
        r.state = state;
        r.state.sigma = sigma_tr;
        r.state.lambda_dot = 0.0;
        return r;
    }

    const SymTensor2 dev_tr = sigma_tr.dev();
    const double dev_norm = dev_tr.norm();
    const bool has_deviator = dev_norm > 1e-12 * std::max(1.0, std::abs(p_tr));
    SymTensor2 n = SymTensor2::zero();
    if (has_deviator) n = dev_tr * (1.0 / dev_norm);

    ConsistencyResidual F{p_tr, q_tr, stiff.lame2(), stiff.bulk(),
                          state.lambda_acc, dt, has_deviator, &pp};

    // Bracket [lo, hi] with F(lo) > 0 >= F(hi). For a deviatoric trial the
    // natural upper bound is the multiplier that exhausts q.
    double lo = 0.0;
    double flo = F(lo);
    double hi;
    if (has_deviator) {
        hi = q_tr / (3.0 * stiff.lame2());
        if (F(hi) > 0.0) {
            // Would require a return past the cone apex.
            converged = false;
            return {};
        }
    } else {
        hi = std::max(flo / stiff.bulk(), 1e-16);
        int expand = 0;
        while (F(hi) > 0.0 && expand++ < 200) hi *= 2.0;
        if (F(hi) > 0.0) {
            converged = false;
            return {};
        }
    }

    // Secant steps safeguarded by the bracket; bisection on any step that
    // leaves it.
    double dl = 0.5 * (lo + hi);
    double fdl = F(dl);
    double prev = lo, fprev = flo;
    bool ok = std::abs(fdl) <= tol;
    for (int it = 0; it < opt.max_iter && !ok; ++it) {
        double step = dl;
        if (fdl != fprev) {
            step = dl - fdl * (dl - prev) / (fdl - fprev);
        }
        if (!(step > lo && step < hi)) step = 0.5 * (lo + hi);
        prev = dl;
        fprev = fdl;
        dl = step;
        fdl = F(dl);
        if (fdl > 0.0) {
            lo = dl;
        } else {
            hi = dl;
        }
        ok = std::abs(fdl) <= tol ||
             (hi - lo) <= 1e-10 * std::max(dl, 1e-300);
    }
    if (!ok) {
        converged = false;
        return {};
    }

    const HardeningState h =
        evolve_hardening(state.lambda_acc + dl, dl / dt * kRateTimeUnit, pp);
    SymTensor2 flow = n * std::sqrt(1.5);
    flow.v[0] += h.beta / 3.0;
    flow.v[1] += h.beta / 3.0;
    flow.v[2] += h.beta / 3.0;

    StepResult r;
    r.delta_lambda = dl;
    r.state.sigma = sigma_tr - dl * stiff.apply(flow);
    r.state.eps_p = state.eps_p + dl * flow;
    r.state.lambda_acc = state.lambda_acc + dl;
    r.state.lambda_dot = dl / dt * kRateTimeUnit;
    return r;
}

StepResult integrate_recursive(const MaterialState& state, const SymTensor2& d_eps,
                               double dt, const ElasticStiffness& stiff,
                               const PlasticParams& pp, const ReturnMapOptions& opt,
                               int depth) {
    bool converged = false;
    StepResult r = integrate_once(state, d_eps, dt, stiff, pp, opt, converged);
    if (converged) return r;
    if (depth >= opt.max_substep_depth) {
        throw ReturnMapDivergence(
            "return mapping failed to converge with substepping exhausted");
    }
    const SymTensor2 half = d_eps * 0.5;
    StepResult a = integrate_recursive(state, half, 0.5 * dt, stiff, pp, opt, depth + 1);
    StepResult b = integrate_recursive(a.state, half, 0.5 * dt, stiff, pp, opt, depth + 1);
    b.delta_lambda += a.delta_lambda;
    return b;
}

}  // namespace

StepResult integrate_step(const MaterialState& state, const SymTensor2& d_eps,
                          double dt, const ElasticParams& ep, const PlasticParams& pp,
                          const ReturnMapOptions& opt) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be > 0");
    pp.validate();
    const ElasticStiffness stiff(youngs_modulus(ep), ep.nu);
    return integrate_recursive(state, d_eps, dt, stiff, pp, opt, 0);
}

}  // namespace ghbs

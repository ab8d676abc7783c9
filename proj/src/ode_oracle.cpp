#include "disep/ode_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace disep {

namespace {

// State layout: {i, v1, v2, E_dissipated, E_load_extracted}. Dissipation and
// load-draw energy ride along as quadrature states so the energy-balance
// check sees full integration accuracy.
using LoopState = std::array<double, 5>;

struct LoopOde {
    const LoopParams& p;
    double i_load;
    bool conducting;

    LoopState operator()(double /*t*/, const LoopState& y) const {
        LoopState d{};
        const double i = y[0];
        if (conducting) {
            d[0] = (y[1] - y[2] - p.v_d - p.r * i) / p.l;
            d[1] = -i / p.c;
            d[2] = (i - i_load) / p.c;
            d[3] = p.r * i * i + p.v_d * std::abs(i);
        } else {
            d[0] = 0.0;
            d[1] = 0.0;
            d[2] = -i_load / p.c;
            d[3] = 0.0;
        }
        d[4] = i_load * y[2];
        return d;
    }
};

}  // namespace

double oracle_auto_dt(const LoopParams& p) {
    const Regime reg = classify_regime(p);
    if (reg.resistive()) {
        if (reg.critical) return 1.0 / (200.0 * -reg.r1);
        // Stability is set by the fast root, accuracy by the slow one; the
        // fast phase carries a negligible share of the charge.
        return std::min(1.4 / -reg.r2, 1.0 / (200.0 * -reg.r1));
    }
    const double rate = std::hypot(reg.alpha, reg.beta);
    return std::min(1.4 / rate, M_PI / reg.beta / 400.0);
}

double oracle_auto_t_max(const LoopParams& p) {
    const Regime reg = classify_regime(p);
    if (reg.resistive()) return (reg.critical ? 25.0 : 18.0) / -reg.r1;
    return 1.25 * M_PI / reg.beta;
}

namespace {

Trajectory integrate_core(const LoopParams& p, double v1_0, double v2_0,
                          double i_load, const OracleConfig& cfg) {
    p.validate();
    Trajectory traj;
    const bool engaged0 = loop_engaged(p, v1_0, v2_0);
    if (!engaged0 && i_load == 0.0) {
        traj.samples.push_back({0.0, 0.0, v1_0, v2_0});
        traj.end_reason = EndReason::ZeroCrossing;
        return traj;
    }

    const double dt = cfg.dt > 0.0 ? cfg.dt : oracle_auto_dt(p);
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : oracle_auto_t_max(p);
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(t_max / dt));
    const std::size_t stride =
        std::max<std::size_t>(1, n_steps / std::max<std::size_t>(cfg.max_samples, 2));

    LoopOde ode{p, i_load, engaged0};
    LoopState y{0.0, v1_0, v2_0, 0.0, 0.0};
    double t = 0.0;
    bool seen_positive = false;
    traj.samples.push_back({t, y[0], y[1], y[2]});

    auto finalize = [&](EndReason reason) {
        if (traj.samples.back().t != t)
            traj.samples.push_back({t, y[0], y[1], y[2]});
        traj.end_reason = reason;
        traj.dissipated_j = y[3];
        traj.load_extracted_j = y[4];
        traj.inductor_j_end = 0.5 * p.l * y[0] * y[0];
    };

    for (std::size_t step = 0; t < t_max; ++step) {
        if (!ode.conducting && loop_engaged(p, y[1], y[2])) ode.conducting = true;

        const LoopState y_prev = y;
        y = rk4_step(y, t, dt, ode);

        if (ode.conducting && seen_positive && y[0] <= 0.0) {
            // Bisect the crossing inside [t, t + dt] by re-integrating from
            // the step start with a shrinking substep.
            double lo = 0.0, hi = dt;
            LoopState y_cross = y;
            while (hi - lo > cfg.rel_tol * dt) {
                const double mid = 0.5 * (lo + hi);
                const LoopState y_mid = rk4_step(y_prev, t, mid, ode);
                if (y_mid[0] > 0.0)
                    lo = mid;
                else
                    hi = mid;
                y_cross = y_mid;
            }
            y = y_cross;
            y[0] = 0.0;
            t += 0.5 * (lo + hi);
            finalize(EndReason::ZeroCrossing);
            return traj;
        }
        if (y[0] > cfg.zero_current_eps) seen_positive = true;
        t += dt;
        if (step % stride == 0) traj.samples.push_back({t, y[0], y[1], y[2]});
    }
    finalize(EndReason::Horizon);
    return traj;
}

}  // namespace

Trajectory integrate_loop(const LoopParams& p, double v1_0, double v2_0,
                          const OracleConfig& cfg) {
    return integrate_core(p, v1_0, v2_0, 0.0, cfg);
}

Trajectory integrate_loaded_loop(const LoopParams& p, double v1_0, double v2_0,
                                 double i_load, const OracleConfig& cfg) {
    return integrate_core(p, v1_0, v2_0, i_load, cfg);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t_s,i_a,v1_v,v2_v\n";
    char buf[160];
    for (const auto& s : traj.samples) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", s.t, s.i, s.v1,
                      s.v2);
        os << buf;
    }
}

}  // namespace disep

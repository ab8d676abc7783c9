#ifndef DISEP_ODE_ORACLE_HPP
#define DISEP_ODE_ORACLE_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "disep/parallel_dynamics.hpp"

// Brute-force numerical integration of the parallelization loop with an
// ideal-diode cutoff. Serves as the independent check for every closed-form
// result in parallel_dynamics and as the dynamics kernel reused by the
// converter simulation.

namespace disep {

struct OracleConfig {
    double dt = 0.0;        // s; <= 0 picks a step from the loop time scales
    double rel_tol = 1e-6;  // zero-crossing localization tolerance (of dt)
    double t_max = 0.0;     // s; <= 0 picks a horizon from the decay rates
    double zero_current_eps = 1e-12;  // amp
    std::size_t max_samples = 4096;   // recorded samples are strided to this
};

enum class EndReason { ZeroCrossing, Horizon };

struct TrajectorySample {
    double t, i, v1, v2;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;  // strictly increasing t, i(0) = 0
    EndReason end_reason = EndReason::ZeroCrossing;
    double dissipated_j = 0.0;      // integral of R i^2 + V_d |i|
    double inductor_j_end = 0.0;    // residual 0.5 L i^2 at the end point
    double load_extracted_j = 0.0;  // energy drawn by i_load (loaded variant)

    const TrajectorySample& back() const { return samples.back(); }
};

// Classic fixed-step fourth-order Runge-Kutta update, shared with the
// converter simulation.
template <typename State, typename Deriv>
State rk4_step(const State& y, double t, double dt, Deriv&& f) {
    const State k1 = f(t, y);
    State y2{};
    for (std::size_t j = 0; j < y.size(); ++j) y2[j] = y[j] + 0.5 * dt * k1[j];
    const State k2 = f(t + 0.5 * dt, y2);
    for (std::size_t j = 0; j < y.size(); ++j) y2[j] = y[j] + 0.5 * dt * k2[j];
    const State k3 = f(t + 0.5 * dt, y2);
    for (std::size_t j = 0; j < y.size(); ++j) y2[j] = y[j] + dt * k3[j];
    const State k4 = f(t + dt, y2);
    State out{};
    for (std::size_t j = 0; j < y.size(); ++j)
        out[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

// Step and horizon heuristics exposed for reuse and for the convergence tests.
double oracle_auto_dt(const LoopParams& p);
double oracle_auto_t_max(const LoopParams& p);

// Integrates  L di/dt = v1 - v2 - V_d - R i,  dv1/dt = -i/C,  dv2/dt = +i/C
// from (V1, V2, 0) until the first downward zero crossing of i (located by
// bisection inside the final step) or the horizon. A non-engaged loop yields
// a single-sample trajectory.
Trajectory integrate_loop(const LoopParams& p, double v1_0, double v2_0,
                          const OracleConfig& cfg = {});

// Same loop with a constant external draw i_load on the receiving capacitor
// (dv2/dt gains a -i_load/C term). The diode may engage mid-trajectory once
// the drift forward-biases it.
Trajectory integrate_loaded_loop(const LoopParams& p, double v1_0, double v2_0,
                                 double i_load, const OracleConfig& cfg = {});

// CSV export: header "t_s,i_a,v1_v,v2_v", one row per sample.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace disep

#endif

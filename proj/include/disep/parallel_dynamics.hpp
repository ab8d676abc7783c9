#ifndef DISEP_PARALLEL_DYNAMICS_HPP
#define DISEP_PARALLEL_DYNAMICS_HPP

#include <stdexcept>

// Closed-form solution of the two-capacitor equilibration loop (C-R-L plus a
// lumped loop diode): regime classification, current waveform, final
// voltages, steady-state deviation and energy loss, for both the
// resistance-dominated and the inductance-dominated regime, plus the
// double-H-bridge (CH2B) loss baseline.

namespace disep {

struct LoopParams {
    double c = 15e-3;   // farad, per module (equal capacitances)
    double r = 20e-3;   // ohm
    double l = 0.5e-6;  // henry
    double v_d = 2.4;   // volt, lumped loop diode drop

    void validate() const {
        if (!(c > 0.0)) throw std::invalid_argument("loop.c must be > 0");
        if (!(r > 0.0)) throw std::invalid_argument("loop.r must be > 0");
        if (!(l > 0.0)) throw std::invalid_argument("loop.l must be > 0");
        if (!(v_d >= 0.0)) throw std::invalid_argument("loop.v_d must be >= 0");
    }
};

enum class RegimeKind { ResistanceDominated, InductanceDominated };

// Characteristic solution of L i'' + R i' + (2/C) i = 0. R^2 >= 8L/C gives
// two real roots r1 >= r2 (resistance dominated, unipolar decaying current);
// otherwise a decaying oscillation with decay rate alpha and angular
// frequency beta. The repeated-root case is folded into the resistive branch
// with r1 == r2 and the t*exp(r t) limit form.
struct Regime {
    RegimeKind kind = RegimeKind::ResistanceDominated;
    double r1 = 0.0;     // 1/s, resistive case (slow root)
    double r2 = 0.0;     // 1/s, resistive case (fast root)
    double alpha = 0.0;  // 1/s, inductive case, < 0
    double beta = 0.0;   // rad/s, inductive case, > 0
    bool critical = false;

    bool resistive() const { return kind == RegimeKind::ResistanceDominated; }
};

struct EquilibrationOutcome {
    double v1_end = 0.0;
    double v2_end = 0.0;
    double delta_v_inf = 0.0;  // v1_end - v2_end
    double energy_loss = 0.0;  // joule
    double t_end = 0.0;        // s; resistive case: time when |i| < 1e-6 i_peak
    double i_peak = 0.0;       // amp
    bool engaged = false;      // false when V1 <= V2 + v_d
};

Regime classify_regime(const LoopParams& p);

inline bool loop_engaged(const LoopParams& p, double v1_0, double v2_0) {
    return v1_0 > v2_0 + p.v_d;
}

// Loop current at time t for initial voltages v1_0 > v2_0 + v_d. Returns 0
// for a non-engaged loop (it degrades to bypass) and for t past the first
// current zero crossing in the inductive regime.
double loop_current(const LoopParams& p, double v1_0, double v2_0, double t);

// Analytic peak of the loop current and the time it occurs at.
double loop_current_peak_time(const LoopParams& p);
double loop_current_peak(const LoopParams& p, double v1_0, double v2_0);

// Full closed-form outcome of one parallelization event. Non-engagement is a
// valid outcome (initial state preserved, zero loss), not an error.
EquilibrationOutcome equilibrate(const LoopParams& p, double v1_0, double v2_0);

// Loss of a bidirectional (CH2B-style) parallelization: C/4 (V1 - V2)^2,
// independent of loop parameters.
double energy_loss_ch2b(double c, double v1, double v2);

// Regime-matched DiSeP loss; equals the capacitor-energy difference computed
// from equilibrate()'s final voltages. Zero for a non-engaged loop.
double energy_loss_disep(const LoopParams& p, double v1_0, double v2_0);

// Inductance at which the inductive-regime steady-state deviation crosses
// zero, found by bisection over [r^2 c / 8, 1 H]. Throws std::invalid_argument
// when delta_v0 <= v_d (loop would not engage) and std::domain_error when the
// deviation has no sign change in the bracket (e.g. v_d = 0).
double zero_deviation_inductance(double c, double r, double v_d, double delta_v0);

}  // namespace disep

#endif

#include "disep/parallel_dynamics.hpp"

#include <cmath>

namespace disep {

namespace {

constexpr double kCriticalBand = 1e-9;  // relative width of the repeated-root band
constexpr double kResidualFraction = 1e-6;  // resistive t_end current threshold

// exp(a) - exp(b), assuming a >= b: no cancellation near a == b and no
// 0 * inf when both exponents underflow.
double exp_diff(double a, double b) {
    return -std::exp(a) * std::expm1(b - a);
}

}  // namespace

Regime classify_regime(const LoopParams& p) {
    p.validate();
    Regime reg;
    const double threshold = 8.0 * p.l / p.c;
    const double disc = p.r * p.r - threshold;
    const double half_rate = p.r / (2.0 * p.l);
    if (disc >= 0.0) {
        reg.kind = RegimeKind::ResistanceDominated;
        if (disc < kCriticalBand * threshold) {
            reg.critical = true;
            reg.r1 = reg.r2 = -half_rate;
        } else {
            // sqrt(R^2/4L^2 - 2/LC) = sqrt(disc) / 2L
            const double s = std::sqrt(disc) / (2.0 * p.l);
            reg.r1 = -half_rate + s;
            reg.r2 = -half_rate - s;
        }
    } else {
        reg.kind = RegimeKind::InductanceDominated;
        reg.alpha = -half_rate;
        reg.beta = std::sqrt(-disc) / (2.0 * p.l);
    }
    return reg;
}

double loop_current(const LoopParams& p, double v1_0, double v2_0, double t) {
    if (!loop_engaged(p, v1_0, v2_0)) return 0.0;
    if (t < 0.0) throw std::invalid_argument("loop_current: t must be >= 0");
    const double forcing = (v1_0 - v2_0 - p.v_d) / p.l;  // = di/dt at t = 0
    const Regime reg = classify_regime(p);
    if (reg.resistive()) {
        if (reg.critical) return forcing * t * std::exp(reg.r1 * t);
        return forcing / (reg.r1 - reg.r2) * exp_diff(reg.r1 * t, reg.r2 * t);
    }
    if (t >= M_PI / reg.beta) return 0.0;  // diode cuts off at the zero crossing
    return forcing / reg.beta * std::exp(reg.alpha * t) * std::sin(reg.beta * t);
}

double loop_current_peak_time(const LoopParams& p) {
    const Regime reg = classify_regime(p);
    if (reg.resistive()) {
        if (reg.critical) return -1.0 / reg.r1;
        return std::log(reg.r2 / reg.r1) / (reg.r1 - reg.r2);
    }
    return std::atan2(reg.beta, -reg.alpha) / reg.beta;
}

double loop_current_peak(const LoopParams& p, double v1_0, double v2_0) {
    if (!loop_engaged(p, v1_0, v2_0)) return 0.0;
    return loop_current(p, v1_0, v2_0, loop_current_peak_time(p));
}

namespace {

// Time past the current peak at which |i| falls to kResidualFraction of the
// peak; the resistive solution only decays asymptotically.
double resistive_end_time(const LoopParams& p, double v1_0, double v2_0) {
    const Regime reg = classify_regime(p);
    const double t_peak = loop_current_peak_time(p);
    const double i_peak = loop_current(p, v1_0, v2_0, t_peak);
    const double target = kResidualFraction * i_peak;
    // Start from the slow-root estimate, then bisect (i is monotone past the peak).
    double hi = t_peak + std::log(1.0 / kResidualFraction) / -reg.r1 + 1.0 / -reg.r1;
    while (loop_current(p, v1_0, v2_0, hi) > target) hi *= 2.0;
    double lo = t_peak;
    for (int iter = 0; iter < 80; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (loop_current(p, v1_0, v2_0, mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

EquilibrationOutcome equilibrate(const LoopParams& p, double v1_0, double v2_0) {
    p.validate();
    if (v1_0 < 0.0 || v2_0 < 0.0)
        throw std::invalid_argument("equilibrate: initial voltages must be >= 0");
    EquilibrationOutcome out;
    if (!loop_engaged(p, v1_0, v2_0)) {
        out.engaged = false;
        out.v1_end = v1_0;
        out.v2_end = v2_0;
        out.delta_v_inf = v1_0 - v2_0;
        return out;
    }
    out.engaged = true;
    const Regime reg = classify_regime(p);
    const double w = v1_0 - v2_0 - p.v_d;  // engaged excess above the diode drop
    const double sum = v1_0 + v2_0;
    if (reg.resistive()) {
        out.delta_v_inf = p.v_d;
        // C/4 ((V1-V2)^2 - Vd^2) in the cancellation-safe form C/4 w (w + 2 Vd)
        out.energy_loss = 0.25 * p.c * w * (w + 2.0 * p.v_d);
        out.t_end = resistive_end_time(p, v1_0, v2_0);
    } else {
        const double k = std::exp(reg.alpha * M_PI / reg.beta);
        out.delta_v_inf = -(v1_0 - v2_0) * k + p.v_d * (1.0 + k);
        out.energy_loss = 0.25 * p.c * (1.0 + k) * w * (w * (1.0 - k) + 2.0 * p.v_d);
        out.t_end = M_PI / reg.beta;
    }
    out.v1_end = 0.5 * (sum + out.delta_v_inf);
    out.v2_end = sum - out.v1_end;  // keeps v1_end + v2_end == v1_0 + v2_0 exactly
    out.i_peak = loop_current_peak(p, v1_0, v2_0);
    return out;
}

double energy_loss_ch2b(double c, double v1, double v2) {
    if (!(c > 0.0)) throw std::invalid_argument("energy_loss_ch2b: c must be > 0");
    const double dv = v1 - v2;
    return 0.25 * c * dv * dv;
}

double energy_loss_disep(const LoopParams& p, double v1_0, double v2_0) {
    if (!loop_engaged(p, v1_0, v2_0)) return 0.0;
    return equilibrate(p, v1_0, v2_0).energy_loss;
}

double zero_deviation_inductance(double c, double r, double v_d, double delta_v0) {
    if (!(c > 0.0) || !(r > 0.0) || !(v_d >= 0.0))
        throw std::invalid_argument("zero_deviation_inductance: invalid loop parameters");
    if (!(delta_v0 > v_d))
        throw std::invalid_argument(
            "zero_deviation_inductance: delta_v0 must exceed v_d (loop never engages)");

    // Inductive-regime deviation as a function of L; for L > L* = r^2 c / 8
    // the exponent simplifies to -pi r / sqrt(8 L / c - r^2).
    auto deviation = [&](double l) {
        const double k = std::exp(-M_PI * r / std::sqrt(8.0 * l / c - r * r));
        return -delta_v0 * k + v_d * (1.0 + k);
    };

    const double l_star = r * r * c / 8.0;
    double lo = l_star * (1.0 + 1e-12);
    double hi = 1.0;
    // At L -> L*+ the deviation tends to v_d > 0; require a sign change by 1 H.
    if (!(deviation(lo) > 0.0) || !(deviation(hi) < 0.0))
        throw std::domain_error(
            "zero_deviation_inductance: deviation has no zero crossing in [r^2 c / 8, 1 H]");
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double d = deviation(mid);
        if (std::abs(d) < 1e-3 && (hi - lo) < 1e-9 * mid) return mid;
        if (d > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace disep

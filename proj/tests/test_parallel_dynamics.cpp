#include "disep/parallel_dynamics.hpp"

#include <cmath>
#include <random>

#include "disep/ode_oracle.hpp"
#include "doctest.h"

using namespace disep;

namespace {
// The pre-prototyping loop: 15 mF per module, 20 mOhm.
LoopParams study_loop(double l, double v_d = 2.0) {
    return LoopParams{15e-3, 20e-3, l, v_d};
}
}  // namespace

TEST_CASE("regime classification boundary sits at L* = r^2 c / 8") {
    // r^2 c / 8 = 0.75 uH for the study loop.
    CHECK(classify_regime(study_loop(0.5e-6)).resistive());
    CHECK_FALSE(classify_regime(study_loop(10e-6)).resistive());
    CHECK(classify_regime(study_loop(0.75e-6 * (1.0 - 1e-6))).resistive());
    CHECK_FALSE(classify_regime(study_loop(0.75e-6 * (1.0 + 1e-6))).resistive());

    const Regime ind = classify_regime(study_loop(10e-6));
    const double l = 10e-6, c = 15e-3, r = 20e-3;
    CHECK(ind.beta ==
          doctest::Approx(std::sqrt(2.0 / (l * c) - r * r / (4.0 * l * l))));
    CHECK(ind.alpha == doctest::Approx(-r / (2.0 * l)));
    CHECK(ind.beta > 0.0);
    CHECK(ind.alpha < 0.0);
}

TEST_CASE("exact boundary gives the repeated real root, tie broken resistive") {
    const double c = 15e-3, r = 20e-3;
    const double l_star = r * r * c / 8.0;
    const Regime reg = classify_regime(study_loop(l_star));
    CHECK(reg.resistive());
    CHECK(reg.critical);
    CHECK(reg.r1 == doctest::Approx(-r / (2.0 * l_star)));
    CHECK(reg.r1 == reg.r2);
}

TEST_CASE("resistive roots satisfy the characteristic polynomial") {
    const LoopParams p = study_loop(0.3e-6);
    const Regime reg = classify_regime(p);
    for (double root : {reg.r1, reg.r2}) {
        const double poly = p.l * root * root + p.r * root + 2.0 / p.c;
        CHECK(std::abs(poly) < 1e-3 * (2.0 / p.c));
    }
    CHECK(reg.r1 > reg.r2);
    CHECK(reg.r1 < 0.0);
}

TEST_CASE("loop current is zero without engagement and at the inductive crossing") {
    const LoopParams p = study_loop(10e-6);
    // Zero forcing: V1 = V2 + Vd exactly.
    for (double t : {0.0, 1e-6, 1e-3})
        CHECK(loop_current(p, 30.0, 28.0, t) == 0.0);
    const Regime reg = classify_regime(p);
    const double t_cross = M_PI / reg.beta;
    CHECK(loop_current(p, 40.0, 30.0, t_cross) == 0.0);
    CHECK(loop_current(p, 40.0, 30.0, 2.0 * t_cross) == 0.0);
    CHECK(loop_current(p, 40.0, 30.0, 0.4 * t_cross) > 0.0);
}

TEST_CASE("closed-form current matches the ODE oracle pointwise") {
    for (double l : {0.5e-6, 4.6e-6, 50e-6}) {
        const LoopParams p = study_loop(l);
        OracleConfig cfg;
        cfg.max_samples = 100000;
        const Trajectory tr = integrate_loop(p, 40.0, 30.0, cfg);
        double i_max = 0.0;
        for (const auto& s : tr.samples) i_max = std::max(i_max, s.i);
        for (std::size_t k = 1; k + 1 < tr.samples.size(); k += 7) {
            const double i_cf = loop_current(p, 40.0, 30.0, tr.samples[k].t);
            CHECK(std::abs(i_cf - tr.samples[k].i) < 1e-3 * i_max);
        }
    }
}

TEST_CASE("equilibrate resistive spec point: 12 V and 2 V through a 2 V drop") {
    LoopParams p = study_loop(0.5e-6, 2.0);
    const EquilibrationOutcome out = equilibrate(p, 12.0, 2.0);
    CHECK(out.engaged);
    CHECK(out.v1_end == doctest::Approx(8.0));
    CHECK(out.v2_end == doctest::Approx(6.0));
    CHECK(out.delta_v_inf == doctest::Approx(2.0));
}

TEST_CASE("equilibrate without engagement preserves the initial state") {
    const LoopParams p = study_loop(0.5e-6, 2.0);
    const EquilibrationOutcome out = equilibrate(p, 10.0, 10.0);
    CHECK_FALSE(out.engaged);
    CHECK(out.v1_end == 10.0);
    CHECK(out.v2_end == 10.0);
    CHECK(out.energy_loss == 0.0);
    CHECK(out.i_peak == 0.0);
    // Barely below the threshold still degrades to bypass.
    CHECK_FALSE(equilibrate(p, 12.0, 10.0).engaged);
}

TEST_CASE("inductive deviation vanishes near 4.6 uH for the study loop") {
    const EquilibrationOutcome out = equilibrate(study_loop(4.601e-6), 40.0, 30.0);
    CHECK(std::abs(out.delta_v_inf) < 50e-3);
}

TEST_CASE("CH2B loss baseline") {
    CHECK(energy_loss_ch2b(15e-3, 40.0, 30.0) == doctest::Approx(0.375));
    CHECK(energy_loss_ch2b(15e-3, 25.0, 25.0) == 0.0);
    // Resistive DiSeP loss saves 4% at dV = 10 V, Vd = 2 V.
    const double ratio = energy_loss_disep(study_loop(0.5e-6, 2.0), 40.0, 30.0) /
                         energy_loss_ch2b(15e-3, 40.0, 30.0);
    CHECK(ratio == doctest::Approx(0.96).epsilon(1e-12));
}

TEST_CASE("resistive DiSeP loss spec point and the Vd = 0 coincidence") {
    CHECK(energy_loss_disep(study_loop(0.5e-6, 2.0), 40.0, 30.0) ==
          doctest::Approx(0.36));
    const LoopParams p0 = study_loop(0.5e-6, 0.0);
    CHECK(energy_loss_disep(p0, 40.0, 30.0) ==
          doctest::Approx(energy_loss_ch2b(15e-3, 40.0, 30.0)).epsilon(1e-12));
    // Non-engaged loop loses nothing.
    CHECK(energy_loss_disep(study_loop(0.5e-6, 2.0), 31.0, 30.0) == 0.0);
}

TEST_CASE("inductive loss vanishes in the lossless LC swap limit") {
    LoopParams p = study_loop(100e-6, 0.0);
    double prev = energy_loss_disep(p, 40.0, 30.0);
    for (double r : {5e-3, 1e-3, 1e-4, 1e-5}) {
        p.r = r;
        const double loss = energy_loss_disep(p, 40.0, 30.0);
        CHECK(loss < prev);
        prev = loss;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("charge is conserved exactly for engaged equilibrations") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        LoopParams p;
        p.c = 100e-6 * std::pow(1000.0, u(rng));
        p.r = 1e-3 * std::pow(1000.0, u(rng));
        p.l = 10e-9 * std::pow(1e6, u(rng));
        p.v_d = 3.0 * u(rng);
        const double v1 = 60.0;
        const double v2 = 60.0 - (p.v_d + 0.01 + (50.0 - p.v_d - 0.01) * u(rng));
        const EquilibrationOutcome out = equilibrate(p, v1, v2);
        CHECK(out.v1_end + out.v2_end == v1 + v2);  // exact, not approximate
    }
}

TEST_CASE("closed-form loss equals the capacitor energy difference") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        LoopParams p;
        p.c = 100e-6 * std::pow(1000.0, u(rng));
        p.r = 1e-3 * std::pow(1000.0, u(rng));
        p.l = 10e-9 * std::pow(1e6, u(rng));
        p.v_d = 3.0 * u(rng);
        const double v1 = 60.0;
        const double v2 = 60.0 - (p.v_d + 0.05 + (40.0 - p.v_d) * u(rng));
        const EquilibrationOutcome out = equilibrate(p, v1, v2);
        const double from_voltages = 0.5 * p.c * (v1 * v1 + v2 * v2) -
                                     0.5 * p.c * (out.v1_end * out.v1_end +
                                                  out.v2_end * out.v2_end);
        CHECK(out.energy_loss ==
              doctest::Approx(from_voltages).epsilon(1e-9));
    }
}

TEST_CASE("deviation and loss are continuous across the regime boundary") {
    const double c = 15e-3, r = 20e-3;
    const double l_star = r * r * c / 8.0;
    const EquilibrationOutcome below =
        equilibrate(LoopParams{c, r, l_star * (1.0 - 1e-9), 2.0}, 40.0, 30.0);
    const EquilibrationOutcome above =
        equilibrate(LoopParams{c, r, l_star * (1.0 + 1e-9), 2.0}, 40.0, 30.0);
    CHECK(below.delta_v_inf == doctest::Approx(above.delta_v_inf).epsilon(1e-6));
    CHECK(below.energy_loss == doctest::Approx(above.energy_loss).epsilon(1e-6));
}

TEST_CASE("inductive steady-state deviation is strictly decreasing in L") {
    double prev = equilibrate(study_loop(0.76e-6), 40.0, 30.0).delta_v_inf;
    for (double l = 1e-6; l < 1e-3; l *= 1.6) {
        const double dv = equilibrate(study_loop(l), 40.0, 30.0).delta_v_inf;
        CHECK(dv < prev);
        prev = dv;
    }
}

TEST_CASE("DiSeP always beats the CH2B loss when the diode drop is real") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        LoopParams p;
        p.c = 100e-6 * std::pow(1000.0, u(rng));
        p.r = 1e-3 * std::pow(1000.0, u(rng));
        p.l = 10e-9 * std::pow(1e6, u(rng));
        p.v_d = 0.1 + 2.9 * u(rng);
        const double v1 = 60.0;
        const double v2 = 60.0 - (p.v_d + 0.05 + (40.0 - p.v_d) * u(rng));
        CHECK(energy_loss_disep(p, v1, v2) < energy_loss_ch2b(p.c, v1, v2));
    }
}

TEST_CASE("zero-deviation inductance reproduces the study value") {
    const double l = zero_deviation_inductance(15e-3, 20e-3, 2.0, 10.0);
    CHECK(l > 3.9e-6);
    CHECK(l < 5.3e-6);
    // The returned inductance actually nulls the deviation.
    CHECK(std::abs(equilibrate(study_loop(l), 40.0, 30.0).delta_v_inf) < 1e-3);
}

TEST_CASE("zero-deviation inductance error paths") {
    // Without a diode drop the deviation stays strictly negative past L*.
    CHECK_THROWS_AS(zero_deviation_inductance(15e-3, 20e-3, 0.0, 10.0),
                    std::domain_error);
    // No engagement, no root.
    CHECK_THROWS_AS(zero_deviation_inductance(15e-3, 20e-3, 2.0, 1.5),
                    std::invalid_argument);
}

TEST_CASE("analytic peak matches a dense scan of the waveform") {
    for (double l : {0.2e-6, 0.75e-6 * 1.0000001, 5e-6, 80e-6}) {
        const LoopParams p = study_loop(l);
        const double i_peak = loop_current_peak(p, 40.0, 30.0);
        const double t_peak = loop_current_peak_time(p);
        double scan = 0.0;
        for (int k = 0; k <= 4000; ++k) {
            const double t = t_peak * 3.0 * k / 4000.0;
            scan = std::max(scan, loop_current(p, 40.0, 30.0, t));
        }
        CHECK(i_peak == doctest::Approx(scan).epsilon(1e-4));
        CHECK(loop_current(p, 40.0, 30.0, t_peak) == doctest::Approx(i_peak));
    }
}

TEST_CASE("resistive t_end marks the residual-current threshold") {
    const LoopParams p = study_loop(0.5e-6, 2.0);
    const EquilibrationOutcome out = equilibrate(p, 40.0, 30.0);
    const double i_end = loop_current(p, 40.0, 30.0, out.t_end);
    CHECK(i_end == doctest::Approx(1e-6 * out.i_peak).epsilon(1e-2));
}

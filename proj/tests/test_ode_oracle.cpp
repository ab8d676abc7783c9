#include "disep/ode_oracle.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"

using namespace disep;

namespace {
LoopParams study_loop(double l, double v_d = 2.0) {
    return LoopParams{15e-3, 20e-3, l, v_d};
}
}  // namespace

TEST_CASE("inductive crossing time agrees with pi/beta") {
    const LoopParams p = study_loop(10e-6);
    const Regime reg = classify_regime(p);
    const Trajectory tr = integrate_loop(p, 40.0, 30.0);
    REQUIRE(tr.end_reason == EndReason::ZeroCrossing);
    CHECK(tr.back().t == doctest::Approx(M_PI / reg.beta).epsilon(1e-3));
}

TEST_CASE("non-engaged loop degrades to a single sample") {
    const Trajectory tr = integrate_loop(study_loop(10e-6), 30.0, 29.0);
    REQUIRE(tr.samples.size() == 1);
    CHECK(tr.samples[0].i == 0.0);
    CHECK(tr.samples[0].v1 == 30.0);
    CHECK(tr.samples[0].v2 == 29.0);
}

TEST_CASE("resistive final voltages approach (V1+V2 +- Vd)/2") {
    const LoopParams p = study_loop(0.5e-6, 2.0);
    const Trajectory tr = integrate_loop(p, 40.0, 30.0);
    CHECK(tr.end_reason == EndReason::Horizon);  // asymptotic decay, no crossing
    CHECK(tr.back().v1 == doctest::Approx(36.0).epsilon(1e-3));
    CHECK(tr.back().v2 == doctest::Approx(34.0).epsilon(1e-3));
}

TEST_CASE("trajectory starts from zero current with increasing time") {
    const Trajectory tr = integrate_loop(study_loop(5e-6), 40.0, 30.0);
    CHECK(tr.samples.front().i == 0.0);
    CHECK(tr.samples.front().t == 0.0);
    for (std::size_t k = 1; k < tr.samples.size(); ++k)
        CHECK(tr.samples[k].t > tr.samples[k - 1].t);
}

TEST_CASE("current stays non-negative along the whole trajectory") {
    for (double l : {0.3e-6, 5e-6, 100e-6}) {
        const Trajectory tr = integrate_loop(study_loop(l), 40.0, 30.0);
        for (const auto& s : tr.samples) CHECK(s.i >= -1e-9);
    }
}

TEST_CASE("energy balance closes for every trajectory") {
    for (double l : {0.3e-6, 0.75e-6 * 1.01, 5e-6, 100e-6}) {
        const LoopParams p = study_loop(l);
        const Trajectory tr = integrate_loop(p, 40.0, 30.0);
        const double e0 = 0.5 * p.c * (40.0 * 40.0 + 30.0 * 30.0);
        const double e1 =
            0.5 * p.c * (tr.back().v1 * tr.back().v1 + tr.back().v2 * tr.back().v2);
        const double drop = e0 - e1;
        CHECK(drop == doctest::Approx(tr.dissipated_j + tr.inductor_j_end)
                          .epsilon(1e-6));
    }
}

TEST_CASE("halving the step leaves the final voltages unchanged within rel_tol") {
    const LoopParams p = study_loop(5e-6);
    OracleConfig coarse;
    coarse.dt = oracle_auto_dt(p);
    OracleConfig fine;
    fine.dt = 0.5 * coarse.dt;
    const Trajectory a = integrate_loop(p, 40.0, 30.0, coarse);
    const Trajectory b = integrate_loop(p, 40.0, 30.0, fine);
    CHECK(std::abs(a.back().v1 - b.back().v1) < 1e-6 * 10.0);
    CHECK(std::abs(a.back().v2 - b.back().v2) < 1e-6 * 10.0);
}

TEST_CASE("loaded loop with zero draw reduces to the plain loop") {
    const LoopParams p = study_loop(5e-6);
    const Trajectory a = integrate_loop(p, 40.0, 30.0);
    const Trajectory b = integrate_loaded_loop(p, 40.0, 30.0, 0.0);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(std::abs(a.back().v1 - b.back().v1) < 1e-12);
    CHECK(std::abs(a.back().v2 - b.back().v2) < 1e-12);
    CHECK(std::abs(a.back().t - b.back().t) < 1e-12);
}

TEST_CASE("a load on the receiving capacitor leaves it lower") {
    const LoopParams p = study_loop(5e-6);
    const Trajectory unloaded = integrate_loop(p, 40.0, 30.0);
    const Trajectory loaded = integrate_loaded_loop(p, 40.0, 30.0, 1.0);
    CHECK(loaded.back().v2 < unloaded.back().v2);
    CHECK(loaded.load_extracted_j > 0.0);
}

TEST_CASE("non-engaged loaded capacitor drifts linearly at i_load/c") {
    const LoopParams p = study_loop(5e-6, 2.0);
    OracleConfig cfg;
    cfg.t_max = 1e-3;
    cfg.dt = 1e-6;
    const double i_load = 0.5;
    // v1 < v2 + vd and the drift only widens the gap on the v2 side upward?
    // No: the draw discharges v2, so start with v1 well below engagement.
    const Trajectory tr = integrate_loaded_loop(p, 29.0, 28.5, i_load, cfg);
    const auto& end = tr.back();
    CHECK(end.v1 == doctest::Approx(29.0));
    CHECK(end.v2 ==
          doctest::Approx(28.5 - i_load * end.t / p.c).epsilon(1e-9));
}

TEST_CASE("drift can forward-bias the diode and start a pulse") {
    const LoopParams p = study_loop(5e-6, 0.5);
    OracleConfig cfg;
    cfg.t_max = 0.2;
    cfg.dt = 2e-6;
    // Starts 0.2 V below engagement; the draw discharges v2 by 0.33 V/s.
    const Trajectory tr = integrate_loaded_loop(p, 29.2, 28.9, 5e-3, cfg);
    double i_max = 0.0;
    for (const auto& s : tr.samples) i_max = std::max(i_max, s.i);
    CHECK(i_max > 0.0);
}

TEST_CASE("csv export carries the header and one row per sample") {
    const Trajectory tr = integrate_loop(study_loop(5e-6), 40.0, 30.0);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    const std::string text = os.str();
    CHECK(text.rfind("t_s,i_a,v1_v,v2_v\n", 0) == 0);
    std::size_t rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == tr.samples.size() + 1);
}

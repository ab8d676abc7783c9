#include "disep/circuit.hpp"

#include <cmath>

#include "doctest.h"

using namespace disep;

namespace {
const DeviceParams kFet{8e-3, 1.2};
}

TEST_CASE("output contribution is signed for series modes and zero otherwise") {
    CHECK(output_contribution(ConnectionMode::SeriesPlus, 35.0) == doctest::Approx(35.0));
    CHECK(output_contribution(ConnectionMode::BypassMinus, 35.0) == 0.0);
    CHECK(output_contribution(ConnectionMode::SeriesMinus, 28.4) ==
          doctest::Approx(-28.4));
    for (ConnectionMode m : {ConnectionMode::ParallelMinus, ConnectionMode::ParallelPlus,
                             ConnectionMode::BypassMinus, ConnectionMode::BypassPlus})
        CHECK(output_contribution(m, 17.3) == 0.0);
}

TEST_CASE("output contribution is odd under series polarity swap") {
    for (double v : {0.0, 1.0, 28.4, 35.0, 120.0})
        CHECK(output_contribution(ConnectionMode::SeriesPlus, v) ==
              -output_contribution(ConnectionMode::SeriesMinus, v));
}

TEST_CASE("series path impedance follows the two-branch lower envelope") {
    // Below the crossover the transistor branch wins.
    CHECK(series_path_impedance(kFet, 1.0) == doctest::Approx(8e-3));
    // Crossover at i = V_d / R_ds_on = 150 A.
    CHECK(series_path_impedance(kFet, 150.0) == doctest::Approx(8e-3));
    CHECK(series_path_impedance(kFet, 300.0) == doctest::Approx(4e-3));
    CHECK_THROWS_AS(series_path_impedance(kFet, 0.0), std::domain_error);
    CHECK_THROWS_AS(series_path_impedance(kFet, -1.0), std::domain_error);
}

TEST_CASE("series path impedance is continuous at the crossover and non-increasing") {
    const double i_star = kFet.v_d / kFet.r_ds_on;
    CHECK(series_path_impedance(kFet, i_star * (1.0 - 1e-9)) ==
          doctest::Approx(series_path_impedance(kFet, i_star * (1.0 + 1e-9))));
    double prev = series_path_impedance(kFet, 1e-3);
    for (double i = 1e-2; i < 1e4; i *= 1.7) {
        const double z = series_path_impedance(kFet, i);
        CHECK(z <= prev + 1e-15);
        prev = z;
    }
}

TEST_CASE("conduction drop spec points") {
    // Bypass path: one transistor plus one diode.
    CHECK(conduction_drop(ConnectionMode::BypassPlus, 1, 1.0, kFet) ==
          doctest::Approx(1.208));
    // Favorable series direction takes the envelope (resistive branch at 1 A).
    CHECK(conduction_drop(ConnectionMode::SeriesMinus, -1, 1.0, kFet) ==
          doctest::Approx(8e-3));
    CHECK(conduction_drop(ConnectionMode::SeriesPlus, 1, 1.0, kFet) ==
          doctest::Approx(8e-3));
    // Unfavorable series direction falls back to transistor + diode.
    CHECK(conduction_drop(ConnectionMode::SeriesMinus, 1, 1.0, kFet) ==
          doctest::Approx(1.208));
    // No current, no drop, in any mode and direction.
    for (ConnectionMode m :
         {ConnectionMode::SeriesPlus, ConnectionMode::SeriesMinus,
          ConnectionMode::ParallelMinus, ConnectionMode::BypassPlus})
        for (int dir : {-1, 1}) CHECK(conduction_drop(m, dir, 0.0, kFet) == 0.0);
}

TEST_CASE("conduction drop is non-negative and monotone in |i|") {
    for (ConnectionMode m :
         {ConnectionMode::SeriesPlus, ConnectionMode::SeriesMinus,
          ConnectionMode::ParallelMinus, ConnectionMode::ParallelPlus,
          ConnectionMode::BypassMinus, ConnectionMode::BypassPlus})
        for (int dir : {-1, 1}) {
            double prev = 0.0;
            for (double i = 0.0; i < 400.0; i += 7.3) {
                const double d = conduction_drop(m, dir, i, kFet);
                CHECK(d >= 0.0);
                CHECK(d >= prev - 1e-12);
                prev = d;
            }
        }
}

TEST_CASE("conduction matrix is data and can be rewired") {
    ConductionMatrix mx;
    mx.bypass = PathDevices{0.0, 2.0, 2.0};  // e.g. IGBT-style two junctions
    CHECK(conduction_drop(ConnectionMode::BypassPlus, 1, 1.0, kFet, mx) ==
          doctest::Approx(2.0 * 8e-3 + 2.0 * 1.2));
}

TEST_CASE("v_d_loop derives from the loop diode count unless overridden") {
    LinkParams link;
    link.n_loop_diodes = 2;
    CHECK(link.effective_v_d(kFet) == doctest::Approx(2.4));
    link.v_d_loop = 2.0;
    CHECK(link.effective_v_d(kFet) == doctest::Approx(2.0));
}

TEST_CASE("converter config validation catches inconsistent lists") {
    ConverterConfig cfg;
    cfg.n_modules = 3;
    cfg.modules.assign(3, ModuleParams{15e-3, 35.0, kFet});
    cfg.links.assign(2, LinkParams{});
    cfg.supply_index = 1;
    CHECK_NOTHROW(cfg.validate());
    cfg.supply_index = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.supply_index = 1;
    cfg.links.resize(1);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.links.assign(2, LinkParams{});
    cfg.f_carrier = 10.0;  // below f_out
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

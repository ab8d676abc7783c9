#ifndef DISEP_MODULATION_HPP
#define DISEP_MODULATION_HPP

#include <iosfwd>
#include <utility>
#include <vector>

#include "disep/circuit.hpp"

// Phase-shifted-carrier PWM adapted to the series/parallel module string:
// per-module three-way levels {-1, 0, +1}, remapping of zero levels to
// parallel modes, and the rising-edge latch that alternates the parallel
// polarity.

namespace disep {

struct ModulatorConfig {
    int n_modules = 0;
    double f_carrier = 10e3;        // Hz
    double f_out = 60.0;            // Hz
    double modulation_index = 0.95; // per unit, [0, 1]
    // Carrier phase offsets in radians of the carrier period; defaults to
    // k*pi/n for module k when empty.
    std::vector<double> carrier_phases;

    double carrier_phase(int k) const;
    void validate() const;
};

enum class ParallelPolarity { MinusNext, PlusNext };

// The only modulator state: the parallel-polarity latch. It toggles on a
// rising edge of the separator signal (the quantized string level leaving
// zero), so consecutive all-parallel dwells get opposite polarity.
struct LatchState {
    ParallelPolarity polarity = ParallelPolarity::MinusNext;
    int prev_sep = 0;
};

struct ModeCommand {
    double t = 0.0;
    std::vector<ConnectionMode> link_modes;  // length n-1; link j from module j+1
    std::vector<int> module_levels;          // length n, in {-1, 0, +1}
};

// Per-unit sinusoidal reference, modulation_index * sin(2 pi f_out t).
double reference(const ModulatorConfig& cfg, double t);

// Symmetric triangle carrier in [0, 1] for module k at time t.
double carrier(const ModulatorConfig& cfg, int k, double t);

// Three-way quantizer: module k outputs sign(reference) when |reference|
// reaches its carrier, else 0. The level sum tracks reference * n within
// one level.
std::vector<int> psc_levels(const ModulatorConfig& cfg, double t);

// Maps levels to link modes: +1 -> Series+, -1 -> Series-, 0 -> the parallel
// mode selected by the latch. Link j is owned by module j+1 (a module's level
// sets its upstream link; the string ends collapse into the output
// terminals). Engagement degradation to bypass is decided by the simulator,
// not here.
std::pair<ModeCommand, LatchState> map_levels_to_modes(
    const std::vector<int>& levels, LatchState latch, double t = 0.0);

// Convenience: quantize at t and advance the latch in place.
ModeCommand sample_command(const ModulatorConfig& cfg, double t, LatchState& latch);

ConnectionMode level_to_mode(int level, ParallelPolarity polarity);

// CSV stream of commands on a uniform grid: t, per-module level, per-link mode.
void write_command_csv(std::ostream& os, const ModulatorConfig& cfg, double t_end,
                       double dt);

}  // namespace disep

#endif

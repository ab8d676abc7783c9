#ifndef DISEP_CONVERTER_SIM_HPP
#define DISEP_CONVERTER_SIM_HPP

#include <vector>

#include "disep/circuit.hpp"
#include "disep/modulation.hpp"

// Time-stepped simulation of the N-module string: applies modulator commands,
// advances capacitor voltages under the load current, integrates the
// parallelization loops with diode cutoff, clamps the supplied module, and
// accumulates waveforms plus a loss breakdown.

namespace disep {

struct LossBreakdown {
    double conduction_j = 0.0;
    double switching_j = 0.0;
    double parallelization_j = 0.0;
    std::vector<long> transition_count;  // device transitions per link

    double total() const { return conduction_j + switching_j + parallelization_j; }
};

// Dynamic state of one link's parallelization loop. `direction` is +1 when
// the loop charges the downstream capacitor (Parallel-), -1 for Parallel+.
struct LinkLoopState {
    bool conducting = false;
    int direction = 0;
    double i = 0.0;  // amp, >= 0 while conducting
};

struct SimState {
    double t = 0.0;
    std::vector<double> v_caps;
    std::vector<double> link_currents;  // mirrors active_loops[k].i
    std::vector<LinkLoopState> active_loops;
    LossBreakdown loss_acc;
    double energy_in_j = 0.0;    // supplied through the dc clamp
    double energy_load_j = 0.0;  // delivered into r_load
    double i_out = 0.0;
    ModeCommand modes;  // command currently applied (empty before first step)
};

struct SimOptions {
    int oversample = 50;  // substeps per carrier period (>= 20)
    bool load_coupled = true;
    double load_coupling_share = 0.5;  // loop-resistance fraction shared with the string
    double e_sw = 0.0;                 // joule per device transition
    int transitions_per_mode_change = 2;
    int sample_stride = 1;
    bool record_waveforms = true;
    bool record_module_traces = true;
    bool record_link_traces = true;
    double max_voltage_factor = 10.0;  // blow-up guard
};

struct SimResult {
    // Run description
    int n_modules = 0;
    int supply_index = 0;
    double v_supply = 0.0;
    double f_out = 0.0;
    double r_load = 0.0;
    double dt = 0.0;         // substep
    double sample_dt = 0.0;  // dt * sample_stride

    // Sampled traces (empty when recording is disabled)
    std::vector<double> time;
    std::vector<double> v_out;
    std::vector<double> i_out;
    std::vector<std::vector<double>> module_traces;  // [module][sample]
    std::vector<std::vector<double>> link_traces;    // [link][sample]
    // Cumulative energies and device-transition totals at each sample, for
    // windowed metrics
    std::vector<double> cum_load_j, cum_conduction_j, cum_switching_j,
        cum_parallelization_j, cum_supply_j, cum_transitions;

    LossBreakdown loss;
    double energy_delivered_j = 0.0;
    double energy_in_j = 0.0;
    std::vector<double> final_v_caps;
    std::vector<double> link_peak_current;           // max loop current seen, per link
    std::vector<std::vector<double>> period_means;   // [period][module]
    bool settled = false;
};

SimState make_initial_state(const ConverterConfig& cfg);

// Advance the state by one substep under a fixed mode command. dt must not
// exceed a twentieth of the carrier period.
SimState step(SimState state, const ModeCommand& command, double dt,
              const ConverterConfig& cfg, const SimOptions& opt = {});

// Full deterministic run over `horizon` seconds. Steady state is declared
// when per-period mean module voltages change by less than 0.1% between the
// final two fundamental periods.
SimResult run(const ConverterConfig& cfg, const ModulatorConfig& mod,
              double horizon, const SimOptions& opt = {});

// Per-module mean voltage over the last k fundamental periods. Throws
// std::runtime_error when the run did not settle.
std::vector<double> steady_state_profile(const SimResult& result, int k_periods);

}  // namespace disep

#endif

#ifndef DISEP_CIRCUIT_HPP
#define DISEP_CIRCUIT_HPP

#include <stdexcept>
#include <string>
#include <vector>

// Core circuit description for a string of four-transistor series/parallel
// (DiSeP) modules: parameter records, the six inter-module connection modes,
// per-mode output contribution and conduction-path drops.

namespace disep {

// The six dynamic states of one inter-module connection. Series modes insert
// the upstream capacitor into the output loop with +/- polarity, Parallel
// modes form a direction-selective equilibration loop between the two
// adjacent capacitors, Bypass modes route the string current around them.
enum class ConnectionMode {
    SeriesMinus,
    SeriesPlus,
    ParallelMinus,  // loop charging the downstream capacitor
    ParallelPlus,   // loop charging the upstream capacitor
    BypassMinus,
    BypassPlus,
};

const char* to_string(ConnectionMode m);

inline bool is_series(ConnectionMode m) {
    return m == ConnectionMode::SeriesMinus || m == ConnectionMode::SeriesPlus;
}
inline bool is_parallel(ConnectionMode m) {
    return m == ConnectionMode::ParallelMinus || m == ConnectionMode::ParallelPlus;
}
inline bool is_bypass(ConnectionMode m) {
    return m == ConnectionMode::BypassMinus || m == ConnectionMode::BypassPlus;
}

// Ideal switch/diode model: constant on-resistance and constant forward drop.
struct DeviceParams {
    double r_ds_on = 8e-3;  // ohm
    double v_d = 1.2;       // volt

    void validate() const;
};

struct ModuleParams {
    double capacitance = 15e-3;  // farad
    double v_init = 0.0;         // volt
    DeviceParams devices;

    void validate() const;
};

// Lumped parallelization-loop parameters of one inter-module link. The loop
// diode drop defaults to n_loop_diodes junctions of the module devices; an
// explicit v_d_loop overrides that.
struct LinkParams {
    double r_loop = 20e-3;    // ohm
    double l_loop = 0.5e-6;   // henry
    double v_d_loop = -1.0;   // volt; < 0 means derive from n_loop_diodes
    int n_loop_diodes = 2;

    double effective_v_d(const DeviceParams& dev) const {
        return v_d_loop >= 0.0 ? v_d_loop : n_loop_diodes * dev.v_d;
    }
    void validate() const;
};

struct ConverterConfig {
    int n_modules = 0;
    std::vector<ModuleParams> modules;  // length n_modules
    std::vector<LinkParams> links;      // length n_modules - 1
    int supply_index = 0;
    double v_supply = 35.0;   // volt
    double r_src = 0.0;       // ohm; 0 = ideal clamp
    double r_load = 200.0;    // ohm
    double f_out = 60.0;      // Hz
    double modulation_index = 0.95;
    double f_carrier = 10e3;  // Hz

    void validate() const;
};

// Voltage the module contributes to the output loop under a given link mode.
// Sign convention: SeriesPlus inserts the capacitor aiding positive string
// voltage. All non-series modes contribute zero.
double output_contribution(ConnectionMode mode, double v_cap);

// Impedance of the favorable-direction series path: two paralleled branches
// (transistor pair, diode pair), lower envelope min(R_ds_on, V_d / i).
// Requires i > 0; the unfavorable direction uses the single-path model.
double series_path_impedance(const DeviceParams& devices, double i);

// Device counts per conduction path; drop = envelope-path units * z_p(i)*i
// + transistors * R*i + diodes * V_d. Kept as data so the per-mode path
// model can be corrected without code changes.
struct PathDevices {
    double envelope_pairs = 0.0;
    double transistors = 0.0;
    double diodes = 0.0;
};

struct ConductionMatrix {
    PathDevices series_favorable{1.0, 0.0, 0.0};
    PathDevices series_unfavorable{0.0, 1.0, 1.0};
    PathDevices bypass{0.0, 1.0, 1.0};
    PathDevices parallel{0.0, 1.0, 1.0};

    const PathDevices& lookup(ConnectionMode mode, int direction) const;
};

// True when `direction` (sign of the string current) is the favorable one
// for a series link: the insertion polarity drives current in that sense,
// so the two-branch envelope path conducts.
bool series_direction_favorable(ConnectionMode mode, int direction);

// Voltage drop across one inter-module connection carrying |i| amps in the
// given direction (+1/-1). Zero current never drops anything: the diode
// contributes only while conducting.
double conduction_drop(ConnectionMode mode, int direction, double i,
                       const DeviceParams& devices,
                       const ConductionMatrix& matrix = ConductionMatrix{});

}  // namespace disep

#endif

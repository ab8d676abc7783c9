#include "disep/circuit.hpp"

#include <algorithm>
#include <cmath>

namespace disep {

const char* to_string(ConnectionMode m) {
    switch (m) {
        case ConnectionMode::SeriesMinus: return "series-";
        case ConnectionMode::SeriesPlus: return "series+";
        case ConnectionMode::ParallelMinus: return "parallel-";
        case ConnectionMode::ParallelPlus: return "parallel+";
        case ConnectionMode::BypassMinus: return "bypass-";
        case ConnectionMode::BypassPlus: return "bypass+";
    }
    return "?";
}

void DeviceParams::validate() const {
    if (!(r_ds_on > 0.0)) throw std::invalid_argument("devices.r_ds_on must be > 0");
    if (!(v_d >= 0.0)) throw std::invalid_argument("devices.v_d must be >= 0");
}

void ModuleParams::validate() const {
    if (!(capacitance > 0.0)) throw std::invalid_argument("module.capacitance must be > 0");
    if (!(v_init >= 0.0)) throw std::invalid_argument("module.v_init must be >= 0");
    devices.validate();
}

void LinkParams::validate() const {
    if (!(r_loop > 0.0)) throw std::invalid_argument("link.r_loop must be > 0");
    if (!(l_loop > 0.0)) throw std::invalid_argument("link.l_loop must be > 0");
    if (v_d_loop < 0.0 && n_loop_diodes < 0)
        throw std::invalid_argument("link.n_loop_diodes must be >= 0");
}

void ConverterConfig::validate() const {
    if (n_modules < 2) throw std::invalid_argument("n_modules must be >= 2");
    if (static_cast<int>(modules.size()) != n_modules)
        throw std::invalid_argument("modules list length must equal n_modules");
    if (static_cast<int>(links.size()) != n_modules - 1)
        throw std::invalid_argument("links list length must equal n_modules - 1");
    if (supply_index < 0 || supply_index >= n_modules)
        throw std::invalid_argument("supply_index out of range");
    if (!(v_supply >= 0.0)) throw std::invalid_argument("v_supply must be >= 0");
    if (!(r_src >= 0.0)) throw std::invalid_argument("r_src must be >= 0");
    if (!(r_load > 0.0)) throw std::invalid_argument("r_load must be > 0");
    if (!(f_out > 0.0)) throw std::invalid_argument("f_out must be > 0");
    if (!(modulation_index >= 0.0 && modulation_index <= 1.0))
        throw std::invalid_argument("modulation_index must be in [0, 1]");
    if (!(f_carrier > f_out)) throw std::invalid_argument("f_carrier must exceed f_out");
    for (const auto& m : modules) m.validate();
    for (const auto& l : links) l.validate();
}

double output_contribution(ConnectionMode mode, double v_cap) {
    switch (mode) {
        case ConnectionMode::SeriesPlus: return v_cap;
        case ConnectionMode::SeriesMinus: return -v_cap;
        default: return 0.0;
    }
}

double series_path_impedance(const DeviceParams& devices, double i) {
    if (!(i > 0.0))
        throw std::domain_error("series_path_impedance: current must be positive");
    return std::min(devices.r_ds_on, devices.v_d / i);
}

bool series_direction_favorable(ConnectionMode mode, int direction) {
    // SeriesPlus drives positive string current when discharging; SeriesMinus
    // the opposite. Discharge direction is the favorable (two-branch) one.
    if (mode == ConnectionMode::SeriesPlus) return direction > 0;
    if (mode == ConnectionMode::SeriesMinus) return direction < 0;
    return false;
}

const PathDevices& ConductionMatrix::lookup(ConnectionMode mode, int direction) const {
    if (is_series(mode))
        return series_direction_favorable(mode, direction) ? series_favorable
                                                           : series_unfavorable;
    return is_parallel(mode) ? parallel : bypass;
}

double conduction_drop(ConnectionMode mode, int direction, double i,
                       const DeviceParams& devices, const ConductionMatrix& matrix) {
    double mag = std::abs(i);
    if (mag == 0.0) return 0.0;
    const PathDevices& pd = matrix.lookup(mode, direction);
    double drop = pd.transistors * devices.r_ds_on * mag + pd.diodes * devices.v_d;
    if (pd.envelope_pairs > 0.0)
        drop += pd.envelope_pairs * series_path_impedance(devices, mag) * mag;
    return drop;
}

}  // namespace disep

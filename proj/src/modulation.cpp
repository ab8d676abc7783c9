#include "disep/modulation.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

namespace disep {

double ModulatorConfig::carrier_phase(int k) const {
    if (!carrier_phases.empty()) return carrier_phases[static_cast<std::size_t>(k)];
    return k * M_PI / n_modules;
}

void ModulatorConfig::validate() const {
    if (n_modules < 1) throw std::invalid_argument("modulator.n_modules must be >= 1");
    if (!(f_carrier > f_out)) throw std::invalid_argument("f_carrier must exceed f_out");
    if (!(f_out > 0.0)) throw std::invalid_argument("f_out must be > 0");
    if (!(modulation_index >= 0.0 && modulation_index <= 1.0))
        throw std::invalid_argument("modulation_index must be in [0, 1]");
    if (!carrier_phases.empty() &&
        static_cast<int>(carrier_phases.size()) != n_modules)
        throw std::invalid_argument("carrier_phases length must equal n_modules");
    // Offsets must be distinct modulo the carrier period.
    for (int a = 0; a < n_modules; ++a)
        for (int b = a + 1; b < n_modules; ++b) {
            double d = std::fmod(std::abs(carrier_phase(a) - carrier_phase(b)), 2.0 * M_PI);
            if (d < 1e-12 || std::abs(d - 2.0 * M_PI) < 1e-12)
                throw std::invalid_argument("carrier phases must be distinct");
        }
}

double reference(const ModulatorConfig& cfg, double t) {
    return cfg.modulation_index * std::sin(2.0 * M_PI * cfg.f_out * t);
}

double carrier(const ModulatorConfig& cfg, int k, double t) {
    double phase = 2.0 * M_PI * cfg.f_carrier * t + cfg.carrier_phase(k);
    double s = phase / (2.0 * M_PI);
    s -= std::floor(s);  // [0, 1)
    return 1.0 - std::abs(2.0 * s - 1.0);
}

std::vector<int> psc_levels(const ModulatorConfig& cfg, double t) {
    const double ref = reference(cfg, t);
    const int sgn = (ref > 0.0) - (ref < 0.0);
    const double mag = std::abs(ref);
    std::vector<int> levels(static_cast<std::size_t>(cfg.n_modules), 0);
    if (sgn == 0) return levels;
    for (int k = 0; k < cfg.n_modules; ++k)
        levels[static_cast<std::size_t>(k)] = mag >= carrier(cfg, k, t) ? sgn : 0;
    return levels;
}

ConnectionMode level_to_mode(int level, ParallelPolarity polarity) {
    if (level > 0) return ConnectionMode::SeriesPlus;
    if (level < 0) return ConnectionMode::SeriesMinus;
    return polarity == ParallelPolarity::MinusNext ? ConnectionMode::ParallelMinus
                                                   : ConnectionMode::ParallelPlus;
}

std::pair<ModeCommand, LatchState> map_levels_to_modes(const std::vector<int>& levels,
                                                       LatchState latch, double t) {
    const int sum = std::accumulate(levels.begin(), levels.end(), 0);
    const int sep = sum != 0 ? 1 : 0;
    if (sep == 1 && latch.prev_sep == 0) {
        latch.polarity = latch.polarity == ParallelPolarity::MinusNext
                             ? ParallelPolarity::PlusNext
                             : ParallelPolarity::MinusNext;
    }
    latch.prev_sep = sep;

    ModeCommand cmd;
    cmd.t = t;
    cmd.module_levels = levels;
    if (levels.size() > 1) {
        cmd.link_modes.reserve(levels.size() - 1);
        for (std::size_t j = 1; j < levels.size(); ++j)
            cmd.link_modes.push_back(level_to_mode(levels[j], latch.polarity));
    }
    return {std::move(cmd), latch};
}

ModeCommand sample_command(const ModulatorConfig& cfg, double t, LatchState& latch) {
    auto [cmd, next] = map_levels_to_modes(psc_levels(cfg, t), latch, t);
    latch = next;
    return cmd;
}

void write_command_csv(std::ostream& os, const ModulatorConfig& cfg, double t_end,
                       double dt) {
    os << "t_s";
    for (int k = 0; k < cfg.n_modules; ++k) os << ",level_" << k;
    for (int j = 0; j + 1 < cfg.n_modules; ++j) os << ",link_" << j;
    os << "\n";
    LatchState latch;
    for (double t = 0.0; t <= t_end + 0.5 * dt; t += dt) {
        ModeCommand cmd = sample_command(cfg, t, latch);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", t);
        os << buf;
        for (int v : cmd.module_levels) os << ',' << v;
        for (ConnectionMode m : cmd.link_modes) os << ',' << to_string(m);
        os << "\n";
    }
}

}  // namespace disep

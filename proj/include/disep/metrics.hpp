#ifndef DISEP_METRICS_HPP
#define DISEP_METRICS_HPP

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "disep/converter_sim.hpp"

// Harmonic analysis (THD, THD+N), efficiency over the steady window, and
// deviation-versus-distance profiling of simulation results.

namespace disep {

struct SpectrumReport {
    double f_fund = 0.0;
    std::vector<double> harmonic_mags;  // peak amplitude of harmonic h at [h-1]
    double rms_total = 0.0;
    int window_periods = 0;
};

// Rectangular-window DFT at exact harmonic bins of f_fund. The samples must
// span an integer number of fundamental periods at uniform rate fs, otherwise
// leakage would corrupt the distortion figures and the call throws.
SpectrumReport spectrum(std::span<const double> samples, double fs, double f_fund,
                        int periods, int h_max = 50);

// sqrt(sum of V_h^2, h = 2..h_max) / V_1.
double thd(const SpectrumReport& report, int h_max = 50);

// All non-fundamental RMS content over the fundamental RMS:
// sqrt(rms^2 - V1^2/2) / (V1/sqrt(2)).
double thd_n(std::span<const double> samples, const SpectrumReport& report);

// energy delivered / (energy delivered + total loss) over the last
// `steady_periods` fundamental periods. Requires a settled result with
// recorded waveforms.
double efficiency(const SimResult& result, int steady_periods = 10);

// Per-distance mean deviation of the steady profile below the supplied
// module: (hop count, supply voltage - mean module voltage at that distance).
std::vector<std::pair<int, double>> deviation_vs_distance(
    std::span<const double> profile, int supply_index);

// CSV: harmonic index, frequency, peak magnitude, dB relative to the
// fundamental.
void write_spectrum_csv(std::ostream& os, const SpectrumReport& report);

}  // namespace disep

#endif

#include "disep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace disep {

SpectrumReport spectrum(std::span<const double> samples, double fs, double f_fund,
                        int periods, int h_max) {
    if (samples.empty()) throw std::invalid_argument("spectrum: empty waveform");
    if (!(fs > 0.0) || !(f_fund > 0.0) || periods < 1)
        throw std::invalid_argument("spectrum: bad sampling description");
    const double n_expected = periods * fs / f_fund;
    const double n = static_cast<double>(samples.size());
    if (std::abs(n - n_expected) > 0.5)
        throw std::invalid_argument(
            "spectrum: waveform must span an integer number of fundamental periods");

    SpectrumReport rep;
    rep.f_fund = f_fund;
    rep.window_periods = periods;

    const std::size_t len = samples.size();
    // Harmonic h of the fundamental sits at DFT bin h * periods; keep below
    // Nyquist.
    const int h_nyq = static_cast<int>(len / (2 * static_cast<std::size_t>(periods)));
    const int h_top = std::min(h_max, h_nyq);
    rep.harmonic_mags.assign(static_cast<std::size_t>(std::max(h_top, 0)), 0.0);

    double sumsq = 0.0;
    for (double x : samples) sumsq += x * x;
    rep.rms_total = std::sqrt(sumsq / n);

    const double w0 = 2.0 * M_PI * periods / n;
    for (int h = 1; h <= h_top; ++h) {
        // Goertzel recurrence for bin h * periods.
        const double w = w0 * h;
        const double coeff = 2.0 * std::cos(w);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (double x : samples) {
            s0 = x + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        const double re = s1 - s2 * std::cos(w);
        const double im = s2 * std::sin(w);
        rep.harmonic_mags[static_cast<std::size_t>(h - 1)] =
            2.0 * std::sqrt(re * re + im * im) / n;
    }
    return rep;
}

double thd(const SpectrumReport& report, int h_max) {
    if (h_max < 2) throw std::invalid_argument("thd: h_max must be >= 2");
    if (report.harmonic_mags.empty() || report.harmonic_mags[0] == 0.0)
        throw std::domain_error("thd: undefined for zero fundamental");
    const int top = std::min<int>(h_max, static_cast<int>(report.harmonic_mags.size()));
    double acc = 0.0;
    for (int h = 2; h <= top; ++h) {
        const double v = report.harmonic_mags[static_cast<std::size_t>(h - 1)];
        acc += v * v;
    }
    return std::sqrt(acc) / report.harmonic_mags[0];
}

double thd_n(std::span<const double> samples, const SpectrumReport& report) {
    if (report.harmonic_mags.empty() || report.harmonic_mags[0] == 0.0)
        throw std::domain_error("thd_n: undefined for zero fundamental");
    double sumsq = 0.0;
    for (double x : samples) sumsq += x * x;
    const double rms2 = sumsq / static_cast<double>(samples.size());
    const double v1 = report.harmonic_mags[0];
    const double residual = std::max(rms2 - 0.5 * v1 * v1, 0.0);
    return std::sqrt(residual) / (v1 / std::sqrt(2.0));
}

double efficiency(const SimResult& result, int steady_periods) {
    if (!result.settled) throw std::runtime_error("efficiency: result not settled");
    if (result.time.empty())
        throw std::invalid_argument("efficiency: run recorded no waveforms");
    const double window = steady_periods / result.f_out;
    const double t_end = result.time.back();
    if (window >= t_end)
        throw std::invalid_argument("efficiency: steady window longer than the run");
    // First sample inside the window.
    const auto it = std::lower_bound(result.time.begin(), result.time.end(),
                                     t_end - window);
    const std::size_t i0 = static_cast<std::size_t>(it - result.time.begin());
    const std::size_t i1 = result.time.size() - 1;
    const double delivered = result.cum_load_j[i1] - result.cum_load_j[i0];
    const double loss = (result.cum_conduction_j[i1] - result.cum_conduction_j[i0]) +
                        (result.cum_switching_j[i1] - result.cum_switching_j[i0]) +
                        (result.cum_parallelization_j[i1] - result.cum_parallelization_j[i0]);
    if (!(delivered > 0.0)) throw std::domain_error("efficiency: no energy delivered");
    return delivered / (delivered + loss);
}

std::vector<std::pair<int, double>> deviation_vs_distance(
    std::span<const double> profile, int supply_index) {
    if (profile.empty() || supply_index < 0 ||
        static_cast<std::size_t>(supply_index) >= profile.size())
        throw std::invalid_argument("deviation_vs_distance: bad profile or supply index");
    const double v_ref = profile[static_cast<std::size_t>(supply_index)];
    const int n = static_cast<int>(profile.size());
    const int d_max = std::max(supply_index, n - 1 - supply_index);
    std::vector<std::pair<int, double>> out;
    for (int d = 0; d <= d_max; ++d) {
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < n; ++j)
            if (std::abs(j - supply_index) == d) {
                sum += v_ref - profile[static_cast<std::size_t>(j)];
                ++count;
            }
        if (count > 0) out.emplace_back(d, sum / count);
    }
    return out;
}

void write_spectrum_csv(std::ostream& os, const SpectrumReport& report) {
    os << "harmonic,f_hz,mag_v,mag_db_rel\n";
    const double v1 = report.harmonic_mags.empty() ? 0.0 : report.harmonic_mags[0];
    char buf[160];
    for (std::size_t h = 0; h < report.harmonic_mags.size(); ++h) {
        const double mag = report.harmonic_mags[h];
        const double db = (v1 > 0.0 && mag > 0.0) ? 20.0 * std::log10(mag / v1) : -300.0;
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.6g\n", h + 1,
                      (static_cast<double>(h) + 1.0) * report.f_fund, mag, db);
        os << buf;
    }
}

}  // namespace disep

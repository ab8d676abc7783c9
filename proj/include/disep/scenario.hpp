#ifndef DISEP_SCENARIO_HPP
#define DISEP_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "disep/converter_sim.hpp"
#include "disep/metrics.hpp"
#include "disep/parallel_dynamics.hpp"

// Scenario documents (JSON), artifact emission, the canonical sweeps, and the
// randomized closed-form-versus-oracle verification batch.

namespace disep {

// Schema or semantic violation in a scenario document; `field` names the
// offending entry.
struct ScenarioError : std::runtime_error {
    ScenarioError(std::string field_, const std::string& msg)
        : std::runtime_error(field_.empty() ? msg : field_ + ": " + msg),
          field(std::move(field_)) {}
    std::string field;
};

struct NotSettledError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArtifactIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricsOptions {
    int h_max = 50;           // harmonics included in THD
    int steady_periods = 10;  // metric window, fundamental periods
    int spectrum_h_max = 50;  // harmonics written to spectrum.csv
};

struct SweepSpec {
    enum class Target { Equilibration, Simulation };
    Target target = Target::Equilibration;
    std::string parameter;
    std::vector<double> grid;  // strictly monotone, non-empty
};

// Standalone two-capacitor loop study (the pre-prototyping analysis).
struct LoopScenario {
    LoopParams params;
    double v1 = 0.0;
    double v2 = 0.0;
};

struct Scenario {
    int schema_version = 1;
    std::string name;
    std::optional<ConverterConfig> converter;
    std::optional<LoopScenario> loop;
    std::optional<SweepSpec> sweep;
    SimOptions sim;
    MetricsOptions metrics;
    double horizon_periods = 30.0;
    std::vector<double> carrier_phases;  // optional modulator override
    std::vector<std::string> outputs;

    ModulatorConfig modulator() const;  // derived from the converter section
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);  // exposed for tests

// Summary of one converter run, also serialized into profile.json.
struct RunSummary {
    bool settled = false;
    std::vector<double> profile_v;
    std::vector<std::pair<int, double>> deviations;
    double efficiency = 0.0;
    double thd = 0.0;
    double thd_n = 0.0;
    double output_fundamental_v = 0.0;
    LossBreakdown loss;
    double energy_delivered_j = 0.0;
    double energy_in_j = 0.0;
};

struct RunOptions {
    std::string out_dir = ".";
    int threads = 0;  // 0 = hardware concurrency
    bool quiet = false;
    int oversample_override = 0;  // 0 = use the scenario value
};

// Executes a non-sweep scenario and writes its artifacts. Throws
// ScenarioError, NotSettledError or ArtifactIoError.
RunSummary run_scenario(const Scenario& sc, const RunOptions& opt, std::ostream& log);

// Executes the scenario's sweep over a worker pool; grid order is preserved
// in the emitted sweep.csv regardless of completion order.
void run_sweep(const Scenario& sc, const RunOptions& opt, std::ostream& log);

// Runs a converter scenario and returns (result, summary) without artifacts;
// shared by run_scenario and the acceptance suite.
std::pair<SimResult, RunSummary> execute_converter(const Scenario& sc,
                                                   int oversample_override = 0);

// Energies over the steady metric window of a settled run.
struct WindowEnergies {
    double delivered_j = 0.0;
    double conduction_j = 0.0;
    double switching_j = 0.0;
    double parallelization_j = 0.0;
    double transitions = 0.0;

    double nonswitching_j() const { return conduction_j + parallelization_j; }
};
WindowEnergies steady_window_energies(const SimResult& result, int periods);

// One point of a switching-rate sweep run with e_sw = 0, used to fit the
// single switching-energy scalar against measured efficiency targets.
struct SweepEnergyPoint {
    double f_carrier = 0.0;
    double delivered_j = 0.0;
    double nonswitching_j = 0.0;
    double transitions = 0.0;
};

// Least-squares fit of the per-device-transition energy against
// (f_carrier, efficiency) targets; each target is matched to the sweep point
// with the nearest carrier frequency.
double calibrate_switching_energy(const std::vector<SweepEnergyPoint>& points,
                                  const std::vector<std::pair<double, double>>& targets);

inline double efficiency_with_e_sw(const SweepEnergyPoint& p, double e_sw) {
    return p.delivered_j / (p.delivered_j + p.nonswitching_j + e_sw * p.transitions);
}

// Randomized closed-form-versus-oracle comparison.
struct OracleReport {
    int cases_per_regime = 0;
    std::uint64_t seed = 0;
    int resistive_cases = 0;
    int inductive_cases = 0;
    int boundary_cases = 0;
    int resampled_draws = 0;  // skipped as too stiff for the fixed-step budget
    double max_voltage_dev = 0.0;   // relative to the initial voltage gap
    double max_energy_dev = 0.0;    // relative to the closed-form loss
    double max_t_end_dev = 0.0;     // inductive only, relative to pi/beta
    double max_boundary_dev = 0.0;  // continuity across the regime boundary
    std::string worst_case;
    bool pass = false;
};

OracleReport verify_oracle(int cases_per_regime, std::uint64_t seed);
void print_oracle_report(std::ostream& os, const OracleReport& rep);

// Default output directory: $DISEP_OUT_DIR when set, else ".".
std::string default_out_dir();

}  // namespace disep

#endif

#include "disep/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace disep {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, const char* key) {
    return base.empty() ? key : base + "." + key;
}

const json& require(const json& j, const std::string& base, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ScenarioError(join_path(base, key), "missing field");
    return *it;
}

double req_num(const json& j, const std::string& base, const char* key) {
    const json& v = require(j, base, key);
    if (!v.is_number()) throw ScenarioError(join_path(base, key), "must be a number");
    return v.get<double>();
}

double opt_num(const json& j, const std::string& base, const char* key, double def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number()) throw ScenarioError(join_path(base, key), "must be a number");
    return it->get<double>();
}

int opt_int(const json& j, const std::string& base, const char* key, int def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number_integer())
        throw ScenarioError(join_path(base, key), "must be an integer");
    return it->get<int>();
}

bool opt_bool(const json& j, const std::string& base, const char* key, bool def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_boolean()) throw ScenarioError(join_path(base, key), "must be a boolean");
    return it->get<bool>();
}

DeviceParams parse_devices(const json& j, const std::string& base) {
    DeviceParams d;
    d.r_ds_on = opt_num(j, base, "r_ds_on", d.r_ds_on);
    d.v_d = opt_num(j, base, "v_d", d.v_d);
    return d;
}

ModuleParams parse_module(const json& j, const std::string& base, ModuleParams def) {
    ModuleParams m = def;
    m.capacitance = opt_num(j, base, "capacitance", m.capacitance);
    m.v_init = opt_num(j, base, "v_init", m.v_init);
    if (auto it = j.find("devices"); it != j.end())
        m.devices = parse_devices(*it, join_path(base, "devices"));
    return m;
}

LinkParams parse_link(const json& j, const std::string& base, LinkParams def) {
    LinkParams l = def;
    l.r_loop = opt_num(j, base, "r_loop", l.r_loop);
    l.l_loop = opt_num(j, base, "l_loop", l.l_loop);
    l.v_d_loop = opt_num(j, base, "v_d_loop", l.v_d_loop);
    l.n_loop_diodes = opt_int(j, base, "n_loop_diodes", l.n_loop_diodes);
    return l;
}

ConverterConfig parse_converter(const json& j, const std::string& base) {
    ConverterConfig cfg;
    cfg.n_modules = opt_int(j, base, "n_modules", 0);

    ModuleParams module_def;
    if (auto it = j.find("module_default"); it != j.end())
        module_def = parse_module(*it, join_path(base, "module_default"), module_def);
    LinkParams link_def;
    if (auto it = j.find("link_default"); it != j.end())
        link_def = parse_link(*it, join_path(base, "link_default"), link_def);

    if (auto it = j.find("modules"); it != j.end()) {
        if (!it->is_array())
            throw ScenarioError(join_path(base, "modules"), "must be an array");
        int idx = 0;
        for (const auto& mj : *it)
            cfg.modules.push_back(parse_module(
                mj, join_path(base, "modules") + "[" + std::to_string(idx++) + "]",
                module_def));
        if (cfg.n_modules == 0) cfg.n_modules = static_cast<int>(cfg.modules.size());
    } else {
        if (cfg.n_modules <= 0)
            throw ScenarioError(join_path(base, "n_modules"),
                                "required when no modules array is given");
        cfg.modules.assign(static_cast<std::size_t>(cfg.n_modules), module_def);
    }
    if (auto it = j.find("v_init"); it != j.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != cfg.n_modules)
            throw ScenarioError(join_path(base, "v_init"),
                                "must be an array of n_modules voltages");
        for (int k = 0; k < cfg.n_modules; ++k)
            cfg.modules[static_cast<std::size_t>(k)].v_init =
                (*it)[static_cast<std::size_t>(k)].get<double>();
    }

    if (auto it = j.find("links"); it != j.end()) {
        if (!it->is_array())
            throw ScenarioError(join_path(base, "links"), "must be an array");
        int idx = 0;
        for (const auto& lj : *it)
            cfg.links.push_back(parse_link(
                lj, join_path(base, "links") + "[" + std::to_string(idx++) + "]",
                link_def));
    } else {
        cfg.links.assign(static_cast<std::size_t>(std::max(cfg.n_modules - 1, 0)),
                         link_def);
    }

    cfg.supply_index = opt_int(j, base, "supply_index", 0);
    cfg.v_supply = req_num(j, base, "v_supply");
    cfg.r_src = opt_num(j, base, "r_src", 0.0);
    cfg.r_load = req_num(j, base, "r_load");
    cfg.f_out = req_num(j, base, "f_out");
    cfg.modulation_index = req_num(j, base, "modulation_index");
    cfg.f_carrier = req_num(j, base, "f_carrier");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(base, e.what());
    }
    return cfg;
}

SweepSpec parse_sweep(const json& j, const std::string& base) {
    SweepSpec sw;
    const json& target = require(j, base, "target");
    const std::string t = target.get<std::string>();
    if (t == "equilibration")
        sw.target = SweepSpec::Target::Equilibration;
    else if (t == "simulation")
        sw.target = SweepSpec::Target::Simulation;
    else
        throw ScenarioError(join_path(base, "target"),
                            "must be \"equilibration\" or \"simulation\"");
    sw.parameter = require(j, base, "parameter").get<std::string>();

    if (auto it = j.find("values"); it != j.end()) {
        for (const auto& v : *it) sw.grid.push_back(v.get<double>());
    } else {
        const double from = req_num(j, base, "from");
        const double to = req_num(j, base, "to");
        const int points = opt_int(j, base, "points", 0);
        if (points < 2) throw ScenarioError(join_path(base, "points"), "must be >= 2");
        const std::string scale = j.value("scale", std::string("linear"));
        for (int k = 0; k < points; ++k) {
            const double u = static_cast<double>(k) / (points - 1);
            if (scale == "log") {
                if (!(from > 0.0) || !(to > 0.0))
                    throw ScenarioError(join_path(base, "scale"),
                                        "log scale needs positive endpoints");
                sw.grid.push_back(from * std::pow(to / from, u));
            } else if (scale == "linear") {
                sw.grid.push_back(from + (to - from) * u);
            } else {
                throw ScenarioError(join_path(base, "scale"),
                                    "must be \"linear\" or \"log\"");
            }
        }
    }
    if (sw.grid.empty()) throw ScenarioError(join_path(base, "values"), "empty grid");
    for (std::size_t k = 1; k < sw.grid.size(); ++k) {
        const bool up = sw.grid[1] > sw.grid[0];
        if ((up && sw.grid[k] <= sw.grid[k - 1]) || (!up && sw.grid[k] >= sw.grid[k - 1]))
            throw ScenarioError(join_path(base, "values"),
                                "grid must be strictly monotone");
    }
    return sw;
}

Scenario parse_scenario_json(const json& j) {
    Scenario sc;
    sc.schema_version = opt_int(j, "", "schema_version", 1);
    sc.name = j.value("name", std::string("scenario"));
    if (auto it = j.find("converter"); it != j.end())
        sc.converter = parse_converter(*it, "converter");
    if (auto it = j.find("loop"); it != j.end()) {
        LoopScenario ls;
        ls.params.c = req_num(*it, "loop", "c");
        ls.params.r = req_num(*it, "loop", "r");
        ls.params.l = opt_num(*it, "loop", "l", ls.params.l);
        ls.params.v_d = req_num(*it, "loop", "v_d");
        ls.v1 = req_num(*it, "loop", "v1");
        ls.v2 = req_num(*it, "loop", "v2");
        try {
            ls.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("loop", e.what());
        }
        sc.loop = ls;
    }
    if (auto it = j.find("sim"); it != j.end()) {
        const json& s = *it;
        sc.horizon_periods = opt_num(s, "sim", "horizon_periods", sc.horizon_periods);
        sc.sim.oversample = opt_int(s, "sim", "oversample", sc.sim.oversample);
        sc.sim.load_coupled = opt_bool(s, "sim", "load_coupled", sc.sim.load_coupled);
        sc.sim.load_coupling_share =
            opt_num(s, "sim", "load_coupling_share", sc.sim.load_coupling_share);
        sc.sim.e_sw = opt_num(s, "sim", "e_sw", sc.sim.e_sw);
        sc.sim.transitions_per_mode_change = opt_int(
            s, "sim", "transitions_per_mode_change", sc.sim.transitions_per_mode_change);
        sc.sim.sample_stride = opt_int(s, "sim", "sample_stride", sc.sim.sample_stride);
        sc.sim.record_module_traces =
            opt_bool(s, "sim", "record_module_traces", sc.sim.record_module_traces);
        sc.sim.record_link_traces =
            opt_bool(s, "sim", "record_link_traces", sc.sim.record_link_traces);
    }
    if (auto it = j.find("metrics"); it != j.end()) {
        sc.metrics.h_max = opt_int(*it, "metrics", "h_max", sc.metrics.h_max);
        sc.metrics.steady_periods =
            opt_int(*it, "metrics", "steady_periods", sc.metrics.steady_periods);
        sc.metrics.spectrum_h_max =
            opt_int(*it, "metrics", "spectrum_h_max", sc.metrics.spectrum_h_max);
    }
    if (auto it = j.find("modulator"); it != j.end()) {
        if (auto ph = it->find("carrier_phases"); ph != it->end())
            for (const auto& v : *ph) sc.carrier_phases.push_back(v.get<double>());
    }
    if (auto it = j.find("sweep"); it != j.end()) sc.sweep = parse_sweep(*it, "sweep");
    if (auto it = j.find("outputs"); it != j.end())
        for (const auto& v : *it) sc.outputs.push_back(v.get<std::string>());
    return sc;
}

}  // namespace

ModulatorConfig Scenario::modulator() const {
    if (!converter) throw ScenarioError("converter", "scenario has no converter section");
    ModulatorConfig m;
    m.n_modules = converter->n_modules;
    m.f_carrier = converter->f_carrier;
    m.f_out = converter->f_out;
    m.modulation_index = converter->modulation_index;
    m.carrier_phases = carrier_phases;
    return m;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactIoError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("JSON parse error: ") + e.what());
    }
    try {
        return parse_scenario_json(j);
    } catch (const json::exception& e) {
        throw ScenarioError("", std::string("schema error: ") + e.what());
    }
}

namespace {

std::ofstream open_artifact(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ArtifactIoError("cannot create output directory: " + dir);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream os(path);
    if (!os) throw ArtifactIoError("cannot open artifact for writing: " + path);
    return os;
}

bool wants(const Scenario& sc, const std::string& name) {
    if (sc.outputs.empty()) return true;
    for (const auto& o : sc.outputs)
        if (o == name) return true;
    return false;
}

void write_waveforms_csv(std::ostream& os, const SimResult& r) {
    os << "t_s,v_out_v,i_out_a\n";
    char buf[120];
    for (std::size_t k = 0; k < r.time.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", r.time[k], r.v_out[k],
                      r.i_out[k]);
        os << buf;
    }
}

void write_modules_csv(std::ostream& os, const SimResult& r) {
    os << "t_s";
    for (int j = 0; j < r.n_modules; ++j) os << ",v_mod_" << j << "_v";
    os << "\n";
    char buf[48];
    for (std::size_t k = 0; k < r.time.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.12g", r.time[k]);
        os << buf;
        for (int j = 0; j < r.n_modules; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.12g",
                          r.module_traces[static_cast<std::size_t>(j)][k]);
            os << buf;
        }
        os << "\n";
    }
}

void write_links_csv(std::ostream& os, const SimResult& r) {
    os << "t_s";
    for (int j = 0; j + 1 < r.n_modules; ++j) os << ",i_link_" << j << "_a";
    os << "\n";
    char buf[48];
    for (std::size_t k = 0; k < r.time.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.12g", r.time[k]);
        os << buf;
        for (int j = 0; j + 1 < r.n_modules; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.12g",
                          r.link_traces[static_cast<std::size_t>(j)][k]);
            os << buf;
        }
        os << "\n";
    }
}

json losses_json(const ConverterConfig& cfg, const SimResult& r) {
    double stored_start = 0.0, stored_end = 0.0;
    for (int j = 0; j < cfg.n_modules; ++j) {
        const double c = cfg.modules[static_cast<std::size_t>(j)].capacitance;
        stored_start += 0.5 * c * cfg.modules[static_cast<std::size_t>(j)].v_init *
                        cfg.modules[static_cast<std::size_t>(j)].v_init;
        stored_end += 0.5 * c * r.final_v_caps[static_cast<std::size_t>(j)] *
                      r.final_v_caps[static_cast<std::size_t>(j)];
    }
    json j;
    j["schema_version"] = 1;
    j["conduction_j"] = r.loss.conduction_j;
    j["switching_j"] = r.loss.switching_j;
    j["parallelization_j"] = r.loss.parallelization_j;
    j["transition_count"] = r.loss.transition_count;
    j["energy_delivered_j"] = r.energy_delivered_j;
    j["energy_in_j"] = r.energy_in_j;
    j["stored_start_j"] = stored_start;
    j["stored_end_j"] = stored_end;
    j["link_peak_current_a"] = r.link_peak_current;
    return j;
}

}  // namespace

std::pair<SimResult, RunSummary> execute_converter(const Scenario& sc,
                                                   int oversample_override) {
    if (!sc.converter) throw ScenarioError("converter", "scenario has no converter section");
    SimOptions opt = sc.sim;
    if (oversample_override > 0) opt.oversample = oversample_override;
    const ConverterConfig& cfg = *sc.converter;
    const double horizon = sc.horizon_periods / cfg.f_out;
    SimResult result = run(cfg, sc.modulator(), horizon, opt);

    RunSummary sum;
    sum.settled = result.settled;
    sum.loss = result.loss;
    sum.energy_delivered_j = result.energy_delivered_j;
    sum.energy_in_j = result.energy_in_j;
    if (result.settled) {
        sum.profile_v = steady_state_profile(result, sc.metrics.steady_periods);
        sum.deviations = deviation_vs_distance(sum.profile_v, cfg.supply_index);
        sum.efficiency = efficiency(result, sc.metrics.steady_periods);
        if (!result.v_out.empty()) {
            const double fs = 1.0 / result.sample_dt;
            const std::size_t n_window = static_cast<std::size_t>(
                std::llround(sc.metrics.steady_periods * fs / cfg.f_out));
            if (n_window <= result.v_out.size()) {
                std::span<const double> window(
                    result.v_out.data() + (result.v_out.size() - n_window), n_window);
                const SpectrumReport rep =
                    spectrum(window, fs, cfg.f_out, sc.metrics.steady_periods,
                             std::max(sc.metrics.h_max, sc.metrics.spectrum_h_max));
                sum.thd = thd(rep, sc.metrics.h_max);
                sum.thd_n = thd_n(window, rep);
                sum.output_fundamental_v = rep.harmonic_mags.empty() ? 0.0
                                                                     : rep.harmonic_mags[0];
            }
        }
    }
    return {std::move(result), std::move(sum)};
}

RunSummary run_scenario(const Scenario& sc, const RunOptions& opt, std::ostream& log) {
    auto [result, sum] = execute_converter(sc, opt.oversample_override);
    const ConverterConfig& cfg = *sc.converter;

    if (wants(sc, "waveforms.csv")) {
        auto os = open_artifact(opt.out_dir, "waveforms.csv");
        write_waveforms_csv(os, result);
    }
    if (wants(sc, "modules.csv") && !result.module_traces.empty()) {
        auto os = open_artifact(opt.out_dir, "modules.csv");
        write_modules_csv(os, result);
    }
    if (wants(sc, "links.csv") && !result.link_traces.empty()) {
        auto os = open_artifact(opt.out_dir, "links.csv");
        write_links_csv(os, result);
    }
    if (wants(sc, "losses.json")) {
        auto os = open_artifact(opt.out_dir, "losses.json");
        os << losses_json(cfg, result).dump(2) << "\n";
    }
    if (wants(sc, "modes.csv")) {
        auto os = open_artifact(opt.out_dir, "modes.csv");
        write_command_csv(os, sc.modulator(), 1.0 / cfg.f_out, result.dt);
    }

    if (!result.settled)
        throw NotSettledError("simulation did not settle within " +
                              std::to_string(sc.horizon_periods) + " fundamental periods");

    if (wants(sc, "profile.json")) {
        json j;
        j["schema_version"] = 1;
        j["settled"] = sum.settled;
        j["profile_v"] = sum.profile_v;
        json devs = json::array();
        for (const auto& [d, v] : sum.deviations)
            devs.push_back({{"distance", d}, {"deviation_v", v}});
        j["deviations"] = devs;
        j["efficiency"] = sum.efficiency;
        j["thd"] = sum.thd;
        j["thd_n"] = sum.thd_n;
        j["output_fundamental_v"] = sum.output_fundamental_v;
        j["f_out_hz"] = cfg.f_out;
        j["window_periods"] = sc.metrics.steady_periods;
        auto os = open_artifact(opt.out_dir, "profile.json");
        os << j.dump(2) << "\n";
    }
    if (wants(sc, "spectrum.csv") && !result.v_out.empty()) {
        const double fs = 1.0 / result.sample_dt;
        const std::size_t n_window = static_cast<std::size_t>(
            std::llround(sc.metrics.steady_periods * fs / cfg.f_out));
        if (n_window <= result.v_out.size()) {
            std::span<const double> window(
                result.v_out.data() + (result.v_out.size() - n_window), n_window);
            const SpectrumReport rep = spectrum(window, fs, cfg.f_out,
                                                sc.metrics.steady_periods,
                                                sc.metrics.spectrum_h_max);
            auto os = open_artifact(opt.out_dir, "spectrum.csv");
            write_spectrum_csv(os, rep);
        }
    }

    if (!opt.quiet) {
        log << "scenario " << sc.name << ": settled=" << (sum.settled ? "yes" : "no")
            << "\n";
        log << "  module voltages (V):";
        for (double v : sum.profile_v) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), " %.2f", v);
            log << buf;
        }
        log << "\n";
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "  efficiency %.4f  thd %.4f  thd+n %.4f  fundamental %.1f V\n",
                      sum.efficiency, sum.thd, sum.thd_n, sum.output_fundamental_v);
        log << buf;
        std::snprintf(buf, sizeof(buf),
                      "  losses (J): conduction %.4g  switching %.4g  parallelization %.4g\n",
                      sum.loss.conduction_j, sum.loss.switching_j,
                      sum.loss.parallelization_j);
        log << buf;
    }
    return sum;
}

namespace {

void apply_parameter(Scenario& sc, const std::string& param, double v) {
    auto need_loop = [&]() -> LoopScenario& {
        if (!sc.loop) throw ScenarioError("loop", "sweep parameter needs a loop section");
        return *sc.loop;
    };
    auto need_conv = [&]() -> ConverterConfig& {
        if (!sc.converter)
            throw ScenarioError("converter", "sweep parameter needs a converter section");
        return *sc.converter;
    };
    if (param == "loop.l") need_loop().params.l = v;
    else if (param == "loop.r") need_loop().params.r = v;
    else if (param == "loop.c") need_loop().params.c = v;
    else if (param == "loop.v_d") need_loop().params.v_d = v;
    else if (param == "converter.f_carrier") need_conv().f_carrier = v;
    else if (param == "converter.modulation_index") need_conv().modulation_index = v;
    else if (param == "converter.r_load") need_conv().r_load = v;
    else if (param == "converter.links.l_loop") {
        for (auto& l : need_conv().links) l.l_loop = v;
    } else if (param == "converter.links.r_loop") {
        for (auto& l : need_conv().links) l.r_loop = v;
    } else if (param == "converter.links.v_d_loop") {
        for (auto& l : need_conv().links) l.v_d_loop = v;
    } else if (param == "sim.e_sw") {
        sc.sim.e_sw = v;
    } else {
        throw ScenarioError("sweep.parameter", "unsupported parameter path: " + param);
    }
}

struct SimSweepRow {
    double value = 0.0;
    bool settled = false;
    double efficiency = 0.0, thd = 0.0;
    double delivered_j = 0.0, conduction_j = 0.0, switching_j = 0.0,
           parallelization_j = 0.0, transitions = 0.0;
};

}  // namespace

WindowEnergies steady_window_energies(const SimResult& result, int periods) {
    if (result.time.empty())
        throw std::invalid_argument("steady_window_energies: no recorded samples");
    const double window = periods / result.f_out;
    const double t_end = result.time.back();
    if (window >= t_end)
        throw std::invalid_argument("steady_window_energies: window exceeds run");
    const auto it =
        std::lower_bound(result.time.begin(), result.time.end(), t_end - window);
    const std::size_t i0 = static_cast<std::size_t>(it - result.time.begin());
    const std::size_t i1 = result.time.size() - 1;
    WindowEnergies w;
    w.delivered_j = result.cum_load_j[i1] - result.cum_load_j[i0];
    w.conduction_j = result.cum_conduction_j[i1] - result.cum_conduction_j[i0];
    w.switching_j = result.cum_switching_j[i1] - result.cum_switching_j[i0];
    w.parallelization_j =
        result.cum_parallelization_j[i1] - result.cum_parallelization_j[i0];
    w.transitions = result.cum_transitions[i1] - result.cum_transitions[i0];
    return w;
}

double calibrate_switching_energy(const std::vector<SweepEnergyPoint>& points,
                                  const std::vector<std::pair<double, double>>& targets) {
    if (points.empty() || targets.empty())
        throw std::invalid_argument("calibrate_switching_energy: empty inputs");
    // Match each target to the nearest sweep point in carrier frequency.
    std::vector<std::pair<const SweepEnergyPoint*, double>> matched;
    for (const auto& [f, eta] : targets) {
        const SweepEnergyPoint* best = &points[0];
        for (const auto& p : points)
            if (std::abs(p.f_carrier - f) < std::abs(best->f_carrier - f)) best = &p;
        matched.emplace_back(best, eta);
    }
    auto objective = [&](double e) {
        double acc = 0.0;
        for (const auto& [p, eta] : matched) {
            const double d = efficiency_with_e_sw(*p, e) - eta;
            acc += d * d;
        }
        return acc;
    };
    // Bracket: each target alone gives an exact e; search around their span.
    double hi = 0.0;
    for (const auto& [p, eta] : matched) {
        const double exact =
            (p->delivered_j / eta - p->delivered_j - p->nonswitching_j) /
            std::max(p->transitions, 1.0);
        hi = std::max(hi, 2.0 * std::max(exact, 0.0));
    }
    if (hi == 0.0) return 0.0;
    // Golden-section minimization on [0, hi].
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = objective(c), fd = objective(d);
    for (int iter = 0; iter < 200; ++iter) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = objective(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = objective(d);
        }
    }
    return 0.5 * (a + b);
}

void run_sweep(const Scenario& sc, const RunOptions& opt, std::ostream& log) {
    if (!sc.sweep) throw ScenarioError("sweep", "scenario has no sweep section");
    const SweepSpec& sw = *sc.sweep;
    const std::size_t n_points = sw.grid.size();

    if (sw.target == SweepSpec::Target::Equilibration) {
        if (!sc.loop) throw ScenarioError("loop", "equilibration sweep needs a loop section");
        auto os = open_artifact(opt.out_dir, "sweep.csv");
        os << sw.parameter
           << ",regime,delta_v_inf_v,energy_loss_j,energy_loss_ch2b_j,i_peak_a,t_end_s\n";
        char buf[240];
        for (double v : sw.grid) {
            Scenario point = sc;
            apply_parameter(point, sw.parameter, v);
            const LoopScenario& ls = *point.loop;
            const EquilibrationOutcome out = equilibrate(ls.params, ls.v1, ls.v2);
            const Regime reg = classify_regime(ls.params);
            const double ch2b = energy_loss_ch2b(ls.params.c, ls.v1, ls.v2);
            std::snprintf(buf, sizeof(buf), "%.12g,%s,%.12g,%.12g,%.12g,%.12g,%.12g\n", v,
                          reg.resistive() ? "resistive" : "inductive", out.delta_v_inf,
                          out.energy_loss, ch2b, out.i_peak, out.t_end);
            os << buf;
        }
        if (!opt.quiet)
            log << "sweep " << sc.name << ": " << n_points << " equilibration points\n";
        return;
    }

    if (!sc.converter)
        throw ScenarioError("converter", "simulation sweep needs a converter section");
    std::vector<SimSweepRow> rows(n_points);
    std::vector<std::string> errors(n_points);
    std::atomic<std::size_t> next{0};
    const unsigned n_threads = opt.threads > 0
                                   ? static_cast<unsigned>(opt.threads)
                                   : std::max(1u, std::thread::hardware_concurrency());

    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n_points) return;
            try {
                Scenario point = sc;
                point.sim.record_module_traces = false;
                point.sim.record_link_traces = false;
                apply_parameter(point, sw.parameter, sw.grid[k]);
                auto [result, sum] = execute_converter(point, opt.oversample_override);
                SimSweepRow row;
                row.value = sw.grid[k];
                row.settled = sum.settled;
                row.efficiency = sum.efficiency;
                row.thd = sum.thd;
                if (sum.settled) {
                    const WindowEnergies w =
                        steady_window_energies(result, point.metrics.steady_periods);
                    row.delivered_j = w.delivered_j;
                    row.conduction_j = w.conduction_j;
                    row.switching_j = w.switching_j;
                    row.parallelization_j = w.parallelization_j;
                    row.transitions = w.transitions;
                }
                rows[k] = row;
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned tix = 0; tix < std::min<std::size_t>(n_threads, n_points); ++tix)
        pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (std::size_t k = 0; k < n_points; ++k)
        if (!errors[k].empty())
            throw ScenarioError("sweep", "point " + std::to_string(k) + " (" +
                                             std::to_string(sw.grid[k]) +
                                             ") failed: " + errors[k]);

    auto os = open_artifact(opt.out_dir, "sweep.csv");
    os << sw.parameter
       << ",settled,efficiency,thd,delivered_j,conduction_j,switching_j,"
          "parallelization_j,transitions\n";
    char buf[280];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.12g,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%g\n",
                      row.value, row.settled ? 1 : 0, row.efficiency, row.thd,
                      row.delivered_j, row.conduction_j, row.switching_j,
                      row.parallelization_j, row.transitions);
        os << buf;
    }
    if (!opt.quiet)
        log << "sweep " << sc.name << ": " << n_points << " simulation points\n";
}

std::string default_out_dir() {
    const char* env = std::getenv("DISEP_OUT_DIR");
    return env && *env ? env : ".";
}

}  // namespace disep

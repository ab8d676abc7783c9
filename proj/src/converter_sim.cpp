#include "disep/converter_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace disep {

namespace {

// Mode used for the half-weight terminal boundary of the first module; its
// level inserts the capacitor at the string end, a zero level leaves a
// bypass-like path there.
ConnectionMode end_mode(int level) {
    if (level > 0) return ConnectionMode::SeriesPlus;
    if (level < 0) return ConnectionMode::SeriesMinus;
    return ConnectionMode::BypassMinus;
}

// Sum of conduction drops along the string path: the n-1 real links at full
// weight plus the two terminal connections at half weight each.
double string_drop(const ConverterConfig& cfg, const ModeCommand& cmd, int dir,
                   double mag) {
    const int n = cfg.n_modules;
    double d = 0.5 * conduction_drop(end_mode(cmd.module_levels[0]), dir, mag,
                                     cfg.modules[0].devices);
    for (int j = 1; j < n; ++j)
        d += conduction_drop(cmd.link_modes[static_cast<std::size_t>(j - 1)], dir, mag,
                             cfg.modules[static_cast<std::size_t>(j)].devices);
    d += 0.5 * conduction_drop(ConnectionMode::BypassMinus, dir, mag,
                               cfg.modules[static_cast<std::size_t>(n - 1)].devices);
    return d;
}

// Solves i * r_load + drops(|i|) = v_string for the signed string current.
// The left side is strictly increasing in |i|, so a fixed bisection count
// gives a deterministic solution; below the total diode threshold the string
// does not conduct.
double solve_string_current(const ConverterConfig& cfg, const ModeCommand& cmd,
                            double v_string) {
    if (v_string == 0.0) return 0.0;
    const int dir = v_string > 0.0 ? 1 : -1;
    const double vs = std::abs(v_string);
    const double tiny = 1e-12;
    if (tiny * cfg.r_load + string_drop(cfg, cmd, dir, tiny) >= vs) return 0.0;
    double lo = tiny, hi = vs / cfg.r_load;
    for (int iter = 0; iter < 52; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid * cfg.r_load + string_drop(cfg, cmd, dir, mid) < vs)
            lo = mid;
        else
            hi = mid;
    }
    return dir * 0.5 * (lo + hi);
}

// Inner integration step requirement for one link's loop (series capacitor
// combination of the two adjacent modules).
double loop_inner_dt(const ConverterConfig& cfg, int k) {
    const auto& link = cfg.links[static_cast<std::size_t>(k)];
    const double c1 = cfg.modules[static_cast<std::size_t>(k)].capacitance;
    const double c2 = cfg.modules[static_cast<std::size_t>(k + 1)].capacitance;
    const double c_ser = c1 * c2 / (c1 + c2);
    const double l = link.l_loop, r = link.r_loop;
    const double disc = r * r - 4.0 * l / c_ser;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        const double fast = (r + s) / (2.0 * l);
        const double slow = std::max((r - s) / (2.0 * l), 2.0 / (r * c_ser + 2.0 * l / r));
        return std::min(1.4 / fast, 1.0 / (64.0 * slow));
    }
    const double rate = std::sqrt(1.0 / (l * c_ser));
    const double omega = std::sqrt(1.0 / (l * c_ser) - r * r / (4.0 * l * l));
    return std::min(1.4 / rate, 2.0 * M_PI / omega / 64.0);
}

struct StepWorkspace {
    std::vector<double> y, dy, k1, k2, k3, k4, tmp;
};

// Derivative of the coupled state [v_caps..., loop currents..., E_loop_diss,
// E_src_in, E_src_diss] under a frozen mode command and string current.
struct CoupledOde {
    const ConverterConfig& cfg;
    const SimOptions& opt;
    const std::vector<int>& levels;
    const std::vector<LinkLoopState>& loops;
    double i_out;

    void operator()(const std::vector<double>& y, std::vector<double>& dy) const {
        const int n = cfg.n_modules;
        const int nl = n - 1;
        std::fill(dy.begin(), dy.end(), 0.0);
        for (int j = 0; j < n; ++j)
            dy[static_cast<std::size_t>(j)] =
                -levels[static_cast<std::size_t>(j)] * i_out /
                cfg.modules[static_cast<std::size_t>(j)].capacitance;
        if (cfg.r_src > 0.0) {
            const int s = cfg.supply_index;
            const double i_src = (cfg.v_supply - y[static_cast<std::size_t>(s)]) / cfg.r_src;
            dy[static_cast<std::size_t>(s)] +=
                i_src / cfg.modules[static_cast<std::size_t>(s)].capacitance;
            dy[static_cast<std::size_t>(n + nl + 1)] = cfg.v_supply * i_src;
            dy[static_cast<std::size_t>(n + nl + 2)] = cfg.r_src * i_src * i_src;
        }
        for (int k = 0; k < nl; ++k) {
            const auto& loop = loops[static_cast<std::size_t>(k)];
            if (!loop.conducting) continue;
            const auto& link = cfg.links[static_cast<std::size_t>(k)];
            const int don = loop.direction > 0 ? k : k + 1;
            const int rec = loop.direction > 0 ? k + 1 : k;
            const double il = y[static_cast<std::size_t>(n + k)];
            const double v_d = link.effective_v_d(
                cfg.modules[static_cast<std::size_t>(k + 1)].devices);
            double forcing = y[static_cast<std::size_t>(don)] -
                             y[static_cast<std::size_t>(rec)] - v_d - link.r_loop * il;
            if (opt.load_coupled)
                forcing -= opt.load_coupling_share * link.r_loop * i_out * loop.direction;
            dy[static_cast<std::size_t>(n + k)] = forcing / link.l_loop;
            dy[static_cast<std::size_t>(don)] -=
                il / cfg.modules[static_cast<std::size_t>(don)].capacitance;
            dy[static_cast<std::size_t>(rec)] +=
                il / cfg.modules[static_cast<std::size_t>(rec)].capacitance;
            dy[static_cast<std::size_t>(n + nl)] +=
                link.r_loop * il * il + v_d * std::abs(il);
        }
    }
};

void rk4_vec(std::vector<double>& y, double dt, const CoupledOde& f, StepWorkspace& ws) {
    const std::size_t m = y.size();
    ws.k1.resize(m); ws.k2.resize(m); ws.k3.resize(m); ws.k4.resize(m); ws.tmp.resize(m);
    f(y, ws.k1);
    for (std::size_t j = 0; j < m; ++j) ws.tmp[j] = y[j] + 0.5 * dt * ws.k1[j];
    f(ws.tmp, ws.k2);
    for (std::size_t j = 0; j < m; ++j) ws.tmp[j] = y[j] + 0.5 * dt * ws.k2[j];
    f(ws.tmp, ws.k3);
    for (std::size_t j = 0; j < m; ++j) ws.tmp[j] = y[j] + dt * ws.k3[j];
    f(ws.tmp, ws.k4);
    for (std::size_t j = 0; j < m; ++j)
        y[j] += dt / 6.0 * (ws.k1[j] + 2.0 * ws.k2[j] + 2.0 * ws.k3[j] + ws.k4[j]);
}

void apply_command(SimState& st, const ModeCommand& cmd, const ConverterConfig& cfg,
                   const SimOptions& opt) {
    const int nl = cfg.n_modules - 1;
    const bool first = st.modes.link_modes.empty();
    for (int k = 0; k < nl; ++k) {
        const ConnectionMode nw = cmd.link_modes[static_cast<std::size_t>(k)];
        if (!first && nw == st.modes.link_modes[static_cast<std::size_t>(k)]) continue;
        auto& loop = st.active_loops[static_cast<std::size_t>(k)];
        if (!first) {
            st.loss_acc.transition_count[static_cast<std::size_t>(k)] +=
                opt.transitions_per_mode_change;
            st.loss_acc.switching_j += opt.e_sw * opt.transitions_per_mode_change;
            if (loop.conducting) {
                // Residual magnetization has nowhere to go once the loop opens.
                st.loss_acc.parallelization_j +=
                    0.5 * cfg.links[static_cast<std::size_t>(k)].l_loop * loop.i * loop.i;
            }
        }
        loop.conducting = false;
        loop.i = 0.0;
        loop.direction = nw == ConnectionMode::ParallelMinus  ? 1
                         : nw == ConnectionMode::ParallelPlus ? -1
                                                              : 0;
    }
    st.modes = cmd;
}

void step_impl(SimState& st, const ModeCommand& cmd, double dt,
               const ConverterConfig& cfg, const SimOptions& opt, StepWorkspace& ws,
               std::vector<double>* link_peak) {
    const int n = cfg.n_modules;
    const int nl = n - 1;
    if (dt > 1.0 / (20.0 * cfg.f_carrier) * (1.0 + 1e-9))
        throw std::invalid_argument("step: dt must be <= carrier period / 20");

    apply_command(st, cmd, cfg, opt);

    // Engagement / re-engagement: a parallel link conducts whenever its diode
    // is forward biased; otherwise the mode degrades to bypass.
    double inner_dt_req = dt;
    for (int k = 0; k < nl; ++k) {
        auto& loop = st.active_loops[static_cast<std::size_t>(k)];
        if (loop.direction == 0) continue;
        if (!loop.conducting) {
            const int don = loop.direction > 0 ? k : k + 1;
            const int rec = loop.direction > 0 ? k + 1 : k;
            const double v_d = cfg.links[static_cast<std::size_t>(k)].effective_v_d(
                cfg.modules[static_cast<std::size_t>(k + 1)].devices);
            if (st.v_caps[static_cast<std::size_t>(don)] >
                st.v_caps[static_cast<std::size_t>(rec)] + v_d) {
                loop.conducting = true;
                loop.i = 0.0;
            }
        }
        if (loop.conducting) inner_dt_req = std::min(inner_dt_req, loop_inner_dt(cfg, k));
    }

    double v_string = 0.0;
    for (int j = 0; j < n; ++j)
        v_string += cmd.module_levels[static_cast<std::size_t>(j)] *
                    st.v_caps[static_cast<std::size_t>(j)];
    const double i_out = solve_string_current(cfg, cmd, v_string);

    // Coupled integration of capacitors and conducting loops.
    const int n_inner = static_cast<int>(std::ceil(dt / inner_dt_req));
    const double h = dt / n_inner;
    ws.y.resize(static_cast<std::size_t>(n + nl + 3));
    for (int j = 0; j < n; ++j) ws.y[static_cast<std::size_t>(j)] = st.v_caps[static_cast<std::size_t>(j)];
    for (int k = 0; k < nl; ++k)
        ws.y[static_cast<std::size_t>(n + k)] = st.active_loops[static_cast<std::size_t>(k)].i;
    ws.y[static_cast<std::size_t>(n + nl)] = 0.0;
    ws.y[static_cast<std::size_t>(n + nl + 1)] = 0.0;
    ws.y[static_cast<std::size_t>(n + nl + 2)] = 0.0;

    CoupledOde ode{cfg, opt, cmd.module_levels, st.active_loops, i_out};
    for (int s = 0; s < n_inner; ++s) {
        rk4_vec(ws.y, h, ode, ws);
        for (int k = 0; k < nl; ++k) {
            auto& loop = st.active_loops[static_cast<std::size_t>(k)];
            if (!loop.conducting) continue;
            double& il = ws.y[static_cast<std::size_t>(n + k)];
            if (il <= 0.0) {
                // Diode cutoff; residual below the resolution of the inner step.
                il = 0.0;
                loop.conducting = false;
            }
            if (link_peak && il > (*link_peak)[static_cast<std::size_t>(k)])
                (*link_peak)[static_cast<std::size_t>(k)] = il;
        }
    }

    for (int j = 0; j < n; ++j) st.v_caps[static_cast<std::size_t>(j)] = ws.y[static_cast<std::size_t>(j)];
    for (int k = 0; k < nl; ++k) {
        st.active_loops[static_cast<std::size_t>(k)].i = ws.y[static_cast<std::size_t>(n + k)];
        st.link_currents[static_cast<std::size_t>(k)] = st.active_loops[static_cast<std::size_t>(k)].i;
    }
    st.loss_acc.parallelization_j += ws.y[static_cast<std::size_t>(n + nl)];
    st.energy_in_j += ws.y[static_cast<std::size_t>(n + nl + 1)];
    st.loss_acc.conduction_j += ws.y[static_cast<std::size_t>(n + nl + 2)];

    // Ideal clamp: restore the supplied module and account for the charge the
    // source pushed, including the abrupt-reconnection residue.
    if (cfg.r_src == 0.0) {
        const int s = cfg.supply_index;
        const double c_s = cfg.modules[static_cast<std::size_t>(s)].capacitance;
        const double dv = cfg.v_supply - st.v_caps[static_cast<std::size_t>(s)];
        st.energy_in_j += cfg.v_supply * c_s * dv;
        st.loss_acc.parallelization_j += 0.5 * c_s * dv * dv;
        st.v_caps[static_cast<std::size_t>(s)] = cfg.v_supply;
    }

    const double mag = std::abs(i_out);
    if (mag > 0.0) {
        const int dir = i_out > 0.0 ? 1 : -1;
        st.loss_acc.conduction_j += string_drop(cfg, cmd, dir, mag) * mag * dt;
    }
    st.energy_load_j += i_out * i_out * cfg.r_load * dt;
    st.i_out = i_out;
    st.t += dt;

    double v_ref = std::max(cfg.v_supply, 1.0);
    for (const auto& m : cfg.modules) v_ref = std::max(v_ref, m.v_init);
    for (double v : st.v_caps)
        if (!(std::abs(v) <= opt.max_voltage_factor * v_ref))
            throw std::runtime_error(
                "converter_sim: capacitor voltage blew up (configuration error)");
}

}  // namespace

SimState make_initial_state(const ConverterConfig& cfg) {
    cfg.validate();
    SimState st;
    st.v_caps.reserve(static_cast<std::size_t>(cfg.n_modules));
    for (const auto& m : cfg.modules) st.v_caps.push_back(m.v_init);
    st.link_currents.assign(static_cast<std::size_t>(cfg.n_modules - 1), 0.0);
    st.active_loops.assign(static_cast<std::size_t>(cfg.n_modules - 1), LinkLoopState{});
    st.loss_acc.transition_count.assign(static_cast<std::size_t>(cfg.n_modules - 1), 0);
    return st;
}

SimState step(SimState state, const ModeCommand& command, double dt,
              const ConverterConfig& cfg, const SimOptions& opt) {
    StepWorkspace ws;
    step_impl(state, command, dt, cfg, opt, ws, nullptr);
    return state;
}

SimResult run(const ConverterConfig& cfg, const ModulatorConfig& mod, double horizon,
              const SimOptions& opt) {
    cfg.validate();
    mod.validate();
    if (mod.n_modules != cfg.n_modules || mod.f_carrier != cfg.f_carrier ||
        mod.f_out != cfg.f_out || mod.modulation_index != cfg.modulation_index)
        throw std::invalid_argument("run: converter and modulator configs disagree");
    if (opt.oversample < 20)
        throw std::invalid_argument("run: oversample must be >= 20");
    if (!(horizon > 0.0)) throw std::invalid_argument("run: horizon must be > 0");

    const int n = cfg.n_modules;
    const int nl = n - 1;
    const double dt = 1.0 / (cfg.f_carrier * opt.oversample);
    const long n_steps = static_cast<long>(std::ceil(horizon / dt));
    const double t_period = 1.0 / cfg.f_out;

    SimResult res;
    res.n_modules = n;
    res.supply_index = cfg.supply_index;
    res.v_supply = cfg.v_supply;
    res.f_out = cfg.f_out;
    res.r_load = cfg.r_load;
    res.dt = dt;
    res.sample_dt = dt * opt.sample_stride;
    res.link_peak_current.assign(static_cast<std::size_t>(nl), 0.0);
    if (opt.record_module_traces) res.module_traces.assign(static_cast<std::size_t>(n), {});
    if (opt.record_link_traces) res.link_traces.assign(static_cast<std::size_t>(nl), {});

    SimState st = make_initial_state(cfg);
    LatchState latch;
    StepWorkspace ws;

    // Per-fundamental-period accumulators of module voltages.
    std::vector<double> period_sum(static_cast<std::size_t>(n), 0.0);
    double period_time = 0.0;
    long period_index = 0;

    for (long step_i = 0; step_i < n_steps; ++step_i) {
        const double t0 = step_i * dt;
        const ModeCommand cmd = sample_command(mod, t0, latch);

        const long p = static_cast<long>(std::floor(t0 / t_period));
        if (p != period_index) {
            if (period_time > 0.0) {
                std::vector<double> means(static_cast<std::size_t>(n));
                for (int j = 0; j < n; ++j) means[static_cast<std::size_t>(j)] =
                    period_sum[static_cast<std::size_t>(j)] / period_time;
                res.period_means.push_back(std::move(means));
            }
            std::fill(period_sum.begin(), period_sum.end(), 0.0);
            period_time = 0.0;
            period_index = p;
        }
        for (int j = 0; j < n; ++j)
            period_sum[static_cast<std::size_t>(j)] += st.v_caps[static_cast<std::size_t>(j)] * dt;
        period_time += dt;

        step_impl(st, cmd, dt, cfg, opt, ws, &res.link_peak_current);

        if ((step_i + 1) % opt.sample_stride == 0) {
            if (opt.record_waveforms) {
                res.time.push_back(st.t);
                res.i_out.push_back(st.i_out);
                res.v_out.push_back(st.i_out * cfg.r_load);
                res.cum_load_j.push_back(st.energy_load_j);
                res.cum_conduction_j.push_back(st.loss_acc.conduction_j);
                res.cum_switching_j.push_back(st.loss_acc.switching_j);
                res.cum_parallelization_j.push_back(st.loss_acc.parallelization_j);
                res.cum_supply_j.push_back(st.energy_in_j);
                long trans = 0;
                for (long c : st.loss_acc.transition_count) trans += c;
                res.cum_transitions.push_back(static_cast<double>(trans));
            }
            if (opt.record_module_traces)
                for (int j = 0; j < n; ++j)
                    res.module_traces[static_cast<std::size_t>(j)].push_back(
                        st.v_caps[static_cast<std::size_t>(j)]);
            if (opt.record_link_traces)
                for (int k = 0; k < nl; ++k)
                    res.link_traces[static_cast<std::size_t>(k)].push_back(
                        st.link_currents[static_cast<std::size_t>(k)]);
        }
    }
    if (period_time > 0.5 * t_period) {
        std::vector<double> means(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j)
            means[static_cast<std::size_t>(j)] = period_sum[static_cast<std::size_t>(j)] / period_time;
        res.period_means.push_back(std::move(means));
    }

    res.loss = st.loss_acc;
    res.energy_delivered_j = st.energy_load_j;
    res.energy_in_j = st.energy_in_j;
    res.final_v_caps = st.v_caps;

    if (res.period_means.size() >= 2) {
        const auto& a = res.period_means[res.period_means.size() - 2];
        const auto& b = res.period_means.back();
        res.settled = true;
        for (int j = 0; j < n; ++j) {
            const double scale = std::max(std::abs(a[static_cast<std::size_t>(j)]), 1e-9);
            if (std::abs(b[static_cast<std::size_t>(j)] - a[static_cast<std::size_t>(j)]) / scale >=
                1e-3) {
                res.settled = false;
                break;
            }
        }
    }
    return res;
}

std::vector<double> steady_state_profile(const SimResult& result, int k_periods) {
    if (!result.settled)
        throw std::runtime_error("steady_state_profile: simulation did not settle");
    if (k_periods < 1 || static_cast<std::size_t>(k_periods) > result.period_means.size())
        throw std::invalid_argument("steady_state_profile: bad period count");
    std::vector<double> profile(static_cast<std::size_t>(result.n_modules), 0.0);
    const std::size_t first = result.period_means.size() - static_cast<std::size_t>(k_periods);
    for (std::size_t p = first; p < result.period_means.size(); ++p)
        for (int j = 0; j < result.n_modules; ++j)
            profile[static_cast<std::size_t>(j)] += result.period_means[p][static_cast<std::size_t>(j)];
    for (double& v : profile) v /= k_periods;
    return profile;
}

}  // namespace disep

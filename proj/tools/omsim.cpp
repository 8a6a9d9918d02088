#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "omsim/analytic.hpp"
#include "omsim/config.hpp"
#include "omsim/csvio.hpp"
#include "omsim/fitting.hpp"
#include "omsim/grid.hpp"
#include "omsim/linsolve.hpp"
#include "omsim/tdoracle.hpp"
#include "omsim/types.hpp"

namespace {

using namespace omsim;

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_numeric = 2;
constexpr int exit_unstable = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    bool no_timestamp = false;
    int jobs = 1;
};

void add_common(CLI::App* app, CommonOpts& o) {
    app->add_option("--config", o.config_path, "configuration file")->required();
    app->add_option("--out", o.out_dir, "output directory");
    app->add_option("--seed", o.seed, "RNG seed for stochastic runs");
    app->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp metadata line");
    app->add_option("--jobs", o.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
}

Config load_config(const CommonOpts& o) {
    Config cfg = parse_config_file(o.config_path);
    require_valid(cfg.device);
    auto problems = validate_probe(cfg.probe, cfg.device);
    auto np = validate_noise(cfg.noise);
    problems.insert(problems.end(), np.begin(), np.end());
    if (cfg.filter.gain < 0) problems.push_back("feedback gain must be non-negative");
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += p + "\n";
        throw ConfigError(msg, 0);
    }
    return cfg;
}

CsvOptions csv_opts(const CommonOpts& o) { return CsvOptions{!o.no_timestamp}; }

std::string out_path(const CommonOpts& o, const std::string& name) {
    std::filesystem::create_directories(o.out_dir);
    return (std::filesystem::path(o.out_dir) / name).string();
}

FrequencyGrid grid_for(const Config& cfg, const linsolve::StabilityResult& st) {
    return default_grid(std::abs(st.omega_eff), std::max(st.gamma_eff, cfg.device.gamma),
                        cfg.grid);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mx;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mx);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

int cmd_spectrum(const CommonOpts& o) {
    Config cfg = load_config(o);
    auto st = linsolve::stability(cfg.device, cfg.probe, cfg.filter);
    if (!st.stable) {
        std::fprintf(stderr,
                     "configuration unstable: gamma_eff/2pi = %.6g Hz < 0; "
                     "increase feedback gain or change phase\n",
                     rad_to_hz(st.gamma_eff));
        return exit_unstable;
    }
    FrequencyGrid grid = grid_for(cfg, st);
    auto transfer = linsolve::solve_closed_loop(cfg.device, cfg.probe, cfg.filter, grid);
    auto sx = linsolve::displacement_spectrum(transfer, cfg.noise);
    auto so = linsolve::output_spectrum(transfer, cfg.noise);
    write_spectrum_csv(sx, cfg, out_path(o, "displacement.csv"), csv_opts(o));
    write_spectrum_csv(so, cfg, out_path(o, "heterodyne.csv"), csv_opts(o));
    std::printf("wrote displacement.csv, heterodyne.csv (gamma_eff/2pi = %.6g Hz)\n",
                rad_to_hz(st.gamma_eff));
    return exit_ok;
}

struct SweepRow {
    double value = 0;
    double omega_eff_hz = 0, gamma_eff_hz = 0;
    double stable = 0;
    double area_lower = 0, area_upper = 0;
    double n_thermal = 0, n_backaction = 0, n_feedback = 0, n_total = 0;
};

SweepRow sweep_point(const Config& base, const std::string& variable, double value) {
    Config cfg = base;
    if (variable == "phase")
        cfg.filter.phase = deg_to_rad(value);
    else if (variable == "gain")
        cfg.filter.gain = hz_to_rad(value);
    else if (variable == "detuning")
        cfg.probe.detuning = hz_to_rad(value);
    else if (variable == "power")
        cfg.probe.coupling = effective_coupling(cfg.device.g0, value);  // value = n_c
    else if (variable == "feedback_detuning") {
        if (!cfg.chain) throw std::runtime_error("feedback_detuning sweep needs chain_* keys");
        FeedbackChain ch = *cfg.chain;
        ch.detuning_f = hz_to_rad(value);
        auto red = analytic::feedback_chain_reduce(cfg.device, ch);
        cfg.filter.gain = red.gain;
        cfg.filter.phase = red.phase;
    } else
        throw std::runtime_error("unknown sweep variable " + variable);

    SweepRow row;
    row.value = value;
    auto st = linsolve::stability(cfg.device, cfg.probe, cfg.filter);
    row.omega_eff_hz = rad_to_hz(st.omega_eff);
    row.gamma_eff_hz = rad_to_hz(st.gamma_eff);
    row.stable = st.stable ? 1 : 0;
    if (!st.stable) {
        double nan = std::nan("");
        row.area_lower = row.area_upper = nan;
        row.n_thermal = row.n_backaction = row.n_feedback = row.n_total = nan;
        return row;
    }
    FrequencyGrid grid = grid_for(cfg, st);
    auto transfer = linsolve::solve_closed_loop(cfg.device, cfg.probe, cfg.filter, grid);
    auto sx = linsolve::displacement_spectrum(transfer, cfg.noise);
    auto sp = linsolve::momentum_spectrum(transfer, cfg.noise);
    auto so = linsolve::output_spectrum(transfer, cfg.noise);
    row.n_total = linsolve::occupation_numeric(sx, sp);

    // analytic breakdown where the closed forms apply (resonant probing)
    if (std::abs(cfg.probe.detuning) < 1e-9 * cfg.device.kappa) {
        try {
            auto b = analytic::occupation_resonant(cfg.device, cfg.probe.coupling, cfg.filter,
                                                   cfg.noise);
            row.n_thermal = b.n_thermal;
            row.n_backaction = b.n_backaction;
            row.n_feedback = b.n_feedback;
        } catch (const std::exception&) {
            row.n_thermal = row.n_backaction = row.n_feedback = std::nan("");
        }
    } else {
        row.n_thermal = row.n_backaction = row.n_feedback = std::nan("");
    }

    auto area = [&](double sign) {
        double w0 = sign * std::abs(st.omega_eff);
        double span = 10.0 * st.gamma_eff;
        try {
            auto fit = fitting::fit_lorentzian(so, w0 - span, w0 + span);
            return fit.area;
        } catch (const std::exception&) {
            return std::nan("");
        }
    };
    row.area_lower = area(+1.0);  // lab lower sideband maps to +omega
    row.area_upper = area(-1.0);
    return row;
}

int cmd_sweep(const CommonOpts& o, const std::string& variable, double start, double stop,
              std::size_t steps) {
    Config cfg = load_config(o);
    if (steps < 2 && start != stop) throw ConfigError("sweep needs steps >= 2", 0);
    if (!(std::isfinite(start) && std::isfinite(stop)))
        throw ConfigError("sweep range must be finite", 0);
    std::size_t n = (start == stop) ? 1 : steps;
    std::vector<SweepRow> rows(n);
    parallel_for(n, o.jobs, [&](std::size_t i) {
        double v = (n == 1) ? start
                            : start + (stop - start) * static_cast<double>(i) /
                                          static_cast<double>(n - 1);
        rows[i] = sweep_point(cfg, variable, v);
    });
    std::vector<std::vector<double>> table;
    for (const auto& r : rows)
        table.push_back({r.value, r.omega_eff_hz, r.gamma_eff_hz, r.stable, r.area_lower,
                         r.area_upper, r.n_thermal, r.n_backaction, r.n_feedback, r.n_total});
    write_table_csv({"value", "omega_eff_hz", "gamma_eff_hz", "stable", "area_lower",
                     "area_upper", "n_thermal", "n_backaction", "n_feedback", "n_total"},
                    table, cfg, out_path(o, "sweep.csv"), csv_opts(o));
    std::printf("wrote sweep.csv (%zu points, variable = %s)\n", n, variable.c_str());
    return exit_ok;
}

int cmd_occupation(const CommonOpts& o) {
    Config cfg = load_config(o);
    auto st = linsolve::stability(cfg.device, cfg.probe, cfg.filter);
    if (!st.stable) {
        std::fprintf(stderr, "configuration unstable: gamma_eff/2pi = %.6g Hz\n",
                     rad_to_hz(st.gamma_eff));
        return exit_unstable;
    }
    FrequencyGrid grid = grid_for(cfg, st);
    auto transfer = linsolve::solve_closed_loop(cfg.device, cfg.probe, cfg.filter, grid);
    auto sx = linsolve::displacement_spectrum(transfer, cfg.noise);
    auto sp = linsolve::momentum_spectrum(transfer, cfg.noise);
    double n_num = linsolve::occupation_numeric(sx, sp);
    std::vector<std::string> cols = {"gamma_eff_hz", "omega_eff_hz", "n_numeric"};
    std::vector<double> row = {rad_to_hz(st.gamma_eff), rad_to_hz(st.omega_eff), n_num};
    if (std::abs(cfg.probe.detuning) < 1e-9 * cfg.device.kappa && cfg.probe.coupling > 0) {
        auto b = analytic::occupation_resonant(cfg.device, cfg.probe.coupling, cfg.filter,
                                               cfg.noise);
        cols.insert(cols.end(), {"n_thermal", "n_backaction", "n_feedback", "n_analytic",
                                 "cooperativity"});
        row.insert(row.end(),
                   {b.n_thermal, b.n_backaction, b.n_feedback, b.n_total, b.cooperativity});
    }
    write_table_csv(cols, {row}, cfg, out_path(o, "occupation.csv"), csv_opts(o));
    std::printf("n_m (numeric) = %.6g, gamma_eff/2pi = %.6g Hz\n", n_num,
                rad_to_hz(st.gamma_eff));
    return exit_ok;
}

int cmd_stability_map(const CommonOpts& o, double ph0, double ph1, std::size_t nph,
                      double g0, double g1, std::size_t ng) {
    Config cfg = load_config(o);
    std::vector<std::vector<double>> table(nph * ng);
    parallel_for(nph * ng, o.jobs, [&](std::size_t idx) {
        std::size_t i = idx / ng, j = idx % ng;
        double ph = nph == 1 ? ph0
                             : ph0 + (ph1 - ph0) * static_cast<double>(i) /
                                         static_cast<double>(nph - 1);
        double g = ng == 1
                       ? g0
                       : g0 + (g1 - g0) * static_cast<double>(j) / static_cast<double>(ng - 1);
        FeedbackFilter f{hz_to_rad(g), deg_to_rad(ph)};
        auto st = linsolve::stability(cfg.device, cfg.probe, f);
        table[idx] = {ph, g, st.stable ? 1.0 : 0.0, rad_to_hz(st.gamma_eff)};
    });
    write_table_csv({"phase_deg", "gain_hz", "stable", "gamma_eff_hz"}, table, cfg,
                    out_path(o, "stability_map.csv"), csv_opts(o));
    std::printf("wrote stability_map.csv (%zu points)\n", nph * ng);
    return exit_ok;
}

int cmd_calibrate(const CommonOpts& o) {
    Config cfg = load_config(o);
    const OpmDevice& dev = cfg.device;

    // forward-model power calibration at Delta = omega_m: gamma_opt vs n_c
    std::vector<double> powers, gopts;
    for (double nc : {2e6, 4e6, 6e6, 8e6, 1e7}) {
        double G = effective_coupling(dev.g0, nc);
        powers.push_back(nc);
        gopts.push_back(analytic::blue_sideband_rates(dev, G, FeedbackFilter{}).gamma_opt);
    }
    auto pcal = fitting::calibrate_power(powers, gopts, dev);

    // gain calibration at resonance, optimal phase, weak feedback
    FeedbackFilter opt_f{0, analytic::optimal_phase(dev.kappa, dev.omega_m)};
    double G = cfg.probe.coupling > 0 ? cfg.probe.coupling : hz_to_rad(427e3);
    std::vector<double> gains, widths;
    for (double g : {1.0, 2.0, 3.0, 4.0}) {
        double A0 = g * hz_to_rad(5e3);
        widths.push_back(dev.gamma + analytic::gamma_fb(G, A0, dev.kappa, dev.omega_m));
        gains.push_back(g);
    }
    auto gcal = fitting::calibrate_gain(gains, widths, dev.gamma);

    std::vector<std::string> cols = {"P_coeff", "L_coeff", "G_rsb_first_hz", "A0_per_unit_hz"};
    std::vector<double> row = {pcal.P_coeff, gcal.L_coeff, rad_to_hz(pcal.G_rsb.front()),
                               rad_to_hz(fitting::gain_to_A0(gcal, 1.0, G, dev))};
    if (cfg.chain) {
        auto red = analytic::feedback_chain_reduce(dev, *cfg.chain);
        cols.insert(cols.end(),
                    {"chain_A0_hz", "chain_phase_deg", "chain_D", "chain_A", "chain_B"});
        row.insert(row.end(), {rad_to_hz(red.gain), rad_to_deg(red.phase), red.interference,
                               red.amp_upper, red.amp_lower});
    }
    write_table_csv(cols, {row}, cfg, out_path(o, "calibrate.csv"), csv_opts(o));
    std::printf("P_coeff = %.6g, L_coeff = %.6g\n", pcal.P_coeff, gcal.L_coeff);
    return exit_ok;
}

int cmd_oracle_compare(const CommonOpts& o, double duration, double thermal_scale) {
    Config cfg = load_config(o);
    auto st = linsolve::stability(cfg.device, cfg.probe, cfg.filter);
    if (!st.stable) {
        std::fprintf(stderr, "configuration unstable; oracle comparison needs a stable loop\n");
        return exit_unstable;
    }
    double needed = 100.0 / st.gamma_eff;
    if (duration < needed) {
        std::fprintf(stderr,
                     "oracle run too short for 5%% tolerance: need duration >= %.4g s "
                     "(100 / gamma_eff), got %.4g s\n",
                     needed, duration);
        return exit_numeric;
    }

    FrequencyGrid grid = grid_for(cfg, st);
    auto transfer = linsolve::solve_closed_loop(cfg.device, cfg.probe, cfg.filter, grid);
    auto sx = linsolve::displacement_spectrum(transfer, cfg.noise);
    auto sp = linsolve::momentum_spectrum(transfer, cfg.noise);
    double n_freq = linsolve::occupation_numeric(sx, sp);

    NoiseBudget oracle_noise = cfg.noise;
    oracle_noise.bath_occupation *= thermal_scale;  // test hook
    auto sim_cfg = tdoracle::make_config(cfg.device, cfg.filter, duration, o.seed,
                                         10.0 / st.gamma_eff);
    auto ts = tdoracle::simulate(cfg.device, cfg.probe, cfg.filter, oracle_noise, sim_cfg);
    double n_time = tdoracle::occupation_estimate(ts);

    // linewidth: fit the x periodogram against the frequency-domain width.
    // Segment long enough that window broadening stays below the tolerance,
    // short enough that several segments average down the noise.
    std::size_t seg = static_cast<std::size_t>(150.0 / st.gamma_eff / ts.dt);
    seg = std::min(seg, ts.x.size() / 8);
    double lw_time = std::nan(""), lw_dev = std::nan("");
    if (seg > 64) {
        try {
            auto pg = tdoracle::periodogram(ts.x, ts.dt, seg);
            auto fit = fitting::fit_lorentzian(pg, st.omega_eff - 10 * st.gamma_eff,
                                               st.omega_eff + 10 * st.gamma_eff);
            lw_time = fit.fwhm;
            lw_dev = std::abs(lw_time - st.gamma_eff) / st.gamma_eff;
        } catch (const std::exception&) {
            // under-resolved periodogram: report occupation only
        }
    }

    double occ_dev = std::abs(n_time - n_freq) / (n_freq + 0.5);
    bool pass = occ_dev < 0.05 && (!std::isfinite(lw_dev) || lw_dev < 0.05);

    write_table_csv({"n_freq", "n_time", "occ_rel_dev", "gamma_eff_hz", "lw_time_hz",
                     "lw_rel_dev", "pass"},
                    {{n_freq, n_time, occ_dev, rad_to_hz(st.gamma_eff), rad_to_hz(lw_time),
                      lw_dev, pass ? 1.0 : 0.0}},
                    cfg, out_path(o, "oracle_compare.csv"), csv_opts(o));
    std::printf("occupation: freq %.5g vs time %.5g (dev %.3g)\n", n_freq, n_time, occ_dev);
    if (std::isfinite(lw_dev))
        std::printf("linewidth: freq %.5g Hz vs time %.5g Hz (dev %.3g)\n",
                    rad_to_hz(st.gamma_eff), rad_to_hz(lw_time), lw_dev);
    std::printf("%s\n", pass ? "PASS" : "FAIL: occupation"
                                        " or linewidth outside 5% tolerance");
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedback-cooled electromechanics simulator"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string sweep_var = "gain";
    double sweep_start = 0, sweep_stop = 0;
    std::size_t sweep_steps = 2;
    double ph0 = 0, ph1 = 360, g0 = 0, g1 = 0;
    std::size_t nph = 2, ng = 2;
    double duration = 1.0, thermal_scale = 1.0;

    auto* sc_spectrum = app.add_subcommand("spectrum", "displacement and heterodyne spectra");
    add_common(sc_spectrum, o);
    auto* sc_sweep = app.add_subcommand("sweep", "sweep one variable, one CSV row per point");
    add_common(sc_sweep, o);
    sc_sweep->add_option("--variable", sweep_var,
                         "phase|gain|detuning|power|feedback_detuning");
    sc_sweep->add_option("--start", sweep_start, "range start (user units)")->required();
    sc_sweep->add_option("--stop", sweep_stop, "range stop (user units)")->required();
    sc_sweep->add_option("--steps", sweep_steps, "number of points");
    auto* sc_occ = app.add_subcommand("occupation", "occupation breakdown");
    add_common(sc_occ, o);
    auto* sc_map = app.add_subcommand("stability-map", "stability over (phase, gain)");
    add_common(sc_map, o);
    sc_map->add_option("--phase-start", ph0, "deg");
    sc_map->add_option("--phase-stop", ph1, "deg");
    sc_map->add_option("--phase-steps", nph, "");
    sc_map->add_option("--gain-start", g0, "Hz");
    sc_map->add_option("--gain-stop", g1, "Hz")->required();
    sc_map->add_option("--gain-steps", ng, "");
    auto* sc_cal = app.add_subcommand("calibrate", "forward-model calibration report");
    add_common(sc_cal, o);
    auto* sc_oracle = app.add_subcommand("oracle-compare",
                                         "frequency- vs time-domain cross check");
    add_common(sc_oracle, o);
    sc_oracle->add_option("--duration", duration, "simulated seconds");
    sc_oracle->add_option("--thermal-scale", thermal_scale,
                          "scale the oracle thermal correlator (negative-control hook)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sc_spectrum->parsed()) return cmd_spectrum(o);
        if (sc_sweep->parsed())
            return cmd_sweep(o, sweep_var, sweep_start, sweep_stop, sweep_steps);
        if (sc_occ->parsed()) return cmd_occupation(o);
        if (sc_map->parsed()) return cmd_stability_map(o, ph0, ph1, nph, g0, g1, ng);
        if (sc_cal->parsed()) return cmd_calibrate(o);
        if (sc_oracle->parsed()) return cmd_oracle_compare(o, duration, thermal_scale);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numeric;
    }
    return exit_ok;
}

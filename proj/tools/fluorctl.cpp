// Command-line front end: deterministic simulation / analysis runs driven by
// JSON configs, producing CSV/JSON artifacts.

#include "fluor/contextual.hpp"
#include "fluor/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;
using namespace fluor;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "base RNG seed (overrides config)");
    cmd->add_option("--threads", opts.threads, "worker thread count (0 = hardware)");
    cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

std::size_t resolve_threads(const CommonOpts& opts) {
    if (opts.threads != 0) return opts.threads;
    if (const char* env = std::getenv("FLUOR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 0;
}

json load_config(const CommonOpts& opts, std::initializer_list<const char*> allowed) {
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cannot open config: " + opts.config_path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    if (!cfg.contains("schema-version")) throw ConfigError("config missing schema-version");
    if (cfg["schema-version"].get<int>() != 1) {
        throw ConfigError("unsupported schema-version (expected 1)");
    }
    for (const auto& [key, value] : cfg.items()) {
        (void)value;
        if (key == "schema-version") continue;
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) { ok = true; break; }
        }
        if (!ok) throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

template <typename T>
T get_req(const json& cfg, const char* key) {
    if (!cfg.contains(key)) throw ConfigError(std::string("config missing key: ") + key);
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
T get_opt(const json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

MeasurementParams parse_params(const json& cfg) {
    if (!cfg.contains("params")) throw ConfigError("config missing key: params");
    const json& p = cfg.at("params");
    for (const auto& [key, value] : p.items()) {
        (void)value;
        if (key != "gamma1" && key != "gamma_phi" && key != "eta" && key != "dt") {
            throw ConfigError("unknown params key: " + key);
        }
    }
    MeasurementParams out;
    out.gamma1 = get_opt(p, "gamma1", 1.0); // rates in units of gamma1 by default
    out.gamma_phi = get_opt(p, "gamma_phi", 0.0);
    out.eta = get_opt(p, "eta", 1.0);
    out.dt = get_req<double>(p, "dt");
    try {
        out.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

BlochState parse_state(const json& cfg, const char* key) {
    if (!cfg.contains(key)) throw ConfigError(std::string("config missing key: ") + key);
    const json& s = cfg.at(key);
    BlochState out{get_req<double>(s, "u"), get_req<double>(s, "x"), get_req<double>(s, "y")};
    if (!is_physical(out)) throw ConfigError(std::string(key) + ": state outside the Bloch ball");
    return out;
}

std::uint64_t resolve_seed(const CommonOpts& opts, const json& cfg) {
    if (opts.seed) return *opts.seed;
    return get_opt<std::uint64_t>(cfg, "seed", 1);
}

Scheme parse_scheme(const json& cfg) {
    try {
        return scheme_from_string(get_opt<std::string>(cfg, "scheme", "ito"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

Ensemble run_ensemble(const json& cfg, const CommonOpts& opts) {
    const MeasurementParams params = parse_params(cfg);
    const BlochState s0 = parse_state(cfg, "initial");
    const auto n_steps = get_req<std::size_t>(cfg, "n_steps");
    const auto n_traj = get_req<std::size_t>(cfg, "n_trajectories");
    if (n_steps == 0) throw ConfigError("n_steps must be positive");
    if (n_traj == 0) throw ConfigError("n_trajectories must be positive");
    return simulate_ensemble(s0, params, parse_scheme(cfg), n_steps, n_traj,
                             resolve_seed(opts, cfg), resolve_threads(opts));
}

int cmd_simulate(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"params", "initial", "scheme", "n_steps",
                                        "n_trajectories", "seed", "save_members"});
    const Ensemble e = run_ensemble(cfg, opts);
    const auto max_save = get_opt<std::size_t>(cfg, "save_members", SIZE_MAX);
    write_ensemble(std::filesystem::path(opts.out_dir) / "ensemble", e, max_save);
    if (!opts.quiet) {
        std::cout << "wrote " << std::min(max_save, e.members.size())
                  << " trajectories to " << opts.out_dir << "/ensemble\n";
    }
    return 0;
}

int cmd_average(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"params", "initial", "scheme", "n_steps",
                                        "n_trajectories", "seed"});
    const Ensemble e = run_ensemble(cfg, opts);
    write_stats_csv(std::filesystem::path(opts.out_dir) / "stats.csv", ensemble_stats(e));
    if (!opts.quiet) std::cout << "wrote " << opts.out_dir << "/stats.csv\n";
    return 0;
}

int cmd_mlp(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"params", "initial", "final", "total_time",
                                        "step", "initial_momenta", "seed"});
    const MeasurementParams params = parse_params(cfg);
    const BlochState s0 = parse_state(cfg, "initial");
    if (!cfg.contains("final")) throw ConfigError("config missing key: final");
    const json& fin = cfg.at("final");
    FinalCondition target;
    if (fin.contains("u")) target.u = fin.at("u").get<double>();
    if (fin.contains("x")) target.x = fin.at("x").get<double>();
    if (fin.contains("y")) target.y = fin.at("y").get<double>();
    const auto total_time = get_req<double>(cfg, "total_time");
    if (total_time <= 0.0) throw ConfigError("total_time must be positive");

    MlpBvpOptions bvp;
    bvp.step = get_opt(cfg, "step", bvp.step);
    if (cfg.contains("initial_momenta")) {
        const auto mom = cfg.at("initial_momenta").get<std::vector<double>>();
        if (mom.size() != 3) throw ConfigError("initial_momenta must have 3 entries");
        bvp.initial_momenta = {mom[0], mom[1], mom[2]};
    }

    const MlpBvpResult result = solve_mlp_bvp(s0, target, total_time, params, bvp);
    write_mlp_csv(std::filesystem::path(opts.out_dir) / "mlp_path.csv", result.path);
    json manifest;
    manifest["schema-version"] = 1;
    manifest["energy"] = result.energy;
    manifest["residual"] = result.residual;
    manifest["converged"] = result.converged;
    manifest["newton_iterations"] = result.newton_iterations;
    std::ofstream mf(std::filesystem::path(opts.out_dir) / "mlp_manifest.json");
    mf << manifest.dump(2) << '\n';
    if (!result.converged) {
        std::cerr << "two-point solve did not converge; residual = "
                  << format_sig(result.residual) << '\n';
        return kExitNumeric;
    }
    if (!opts.quiet) {
        std::cout << "wrote " << opts.out_dir << "/mlp_path.csv (E = "
                  << format_sig(result.energy) << ")\n";
    }
    return 0;
}

int cmd_mlp_ideal(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"theta0", "thetaf", "total_time", "n_steps",
                                        "gamma1", "energies", "theta_min", "theta_max",
                                        "n_portrait_points"});
    const auto theta0 = get_req<double>(cfg, "theta0");
    const auto thetaf = get_req<double>(cfg, "thetaf");
    const auto gamma1 = get_opt(cfg, "gamma1", 1.0);
    const auto n_steps = get_opt<std::size_t>(cfg, "n_steps", 4000);

    IdealPath path;
    if (theta0 == thetaf) {
        path.times = {0.0};
        path.points = {{theta0, 0.0}};
        path.readout_i = {ideal_mlp_readout(theta0, 0.0, gamma1)};
        path.converged = true;
    } else {
        const double total_time = cfg.contains("total_time")
            ? get_req<double>(cfg, "total_time")
            : ideal_time_zero_energy(theta0, thetaf, gamma1);
        if (total_time <= 0.0) throw ConfigError("total_time must be positive");
        path = solve_ideal_bvp(theta0, thetaf, total_time, gamma1, n_steps);
    }
    write_ideal_path_csv(std::filesystem::path(opts.out_dir) / "ideal_path.csv", path);

    if (cfg.contains("energies")) {
        const auto energies = cfg.at("energies").get<std::vector<double>>();
        const auto tmin = get_opt(cfg, "theta_min", 0.0);
        const auto tmax = get_opt(cfg, "theta_max", M_PI - 1e-6);
        const auto npts = get_opt<std::size_t>(cfg, "n_portrait_points", 400);
        std::vector<double> labels;
        std::vector<std::vector<IdealPhasePoint>> contours;
        for (double e : energies) {
            for (bool upper : {false, true}) {
                labels.push_back(e);
                contours.push_back(ideal_energy_contour(e, tmin, tmax, npts, upper, gamma1));
            }
        }
        write_phase_portrait_csv(std::filesystem::path(opts.out_dir) / "phase_portrait.csv",
                                 labels, contours);
    }
    if (!path.converged) {
        std::cerr << "ideal two-point solve did not converge; residual = "
                  << format_sig(path.residual) << '\n';
        return kExitNumeric;
    }
    if (!opts.quiet) std::cout << "wrote " << opts.out_dir << "/ideal_path.csv\n";
    return 0;
}

int cmd_correlate(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"params", "initial", "scheme", "n_steps",
                                        "n_trajectories", "seed", "pairs", "times"});
    const Ensemble e = run_ensemble(cfg, opts);
    if (!cfg.contains("pairs")) throw ConfigError("config missing key: pairs");
    if (!cfg.contains("times")) throw ConfigError("config missing key: times");
    const auto times = cfg.at("times").get<std::vector<double>>();
    if (times.empty()) throw ConfigError("times must be nonempty");

    json report;
    report["schema-version"] = 1;
    report["pairs"] = json::array();
    for (const auto& pr : cfg.at("pairs")) {
        const auto names = pr.get<std::vector<std::string>>();
        if (names.size() != 2) throw ConfigError("each pair must have 2 entries");
        Var a, b;
        try {
            a = var_from_string(names[0]);
            b = var_from_string(names[1]);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(ex.what());
        }
        const CovarianceGrid ana = analytic_cov_grid(a, b, times, e.initial, e.params);
        const CovarianceGrid emp = empirical_cov_grid(e, a, b, times);

        json meta;
        meta["pair"] = ana.pair;
        meta["s0"] = {{"u", e.initial.u}, {"x", e.initial.x}, {"y", e.initial.y}};
        meta["params"] = {{"gamma1", e.params.gamma1}, {"gamma_phi", e.params.gamma_phi},
                          {"eta", e.params.eta}, {"dt", e.params.dt}};
        meta["N"] = e.members.size();
        meta["scheme"] = to_string(e.scheme);
        const std::string tag = names[0] + "_" + names[1];
        const auto out = std::filesystem::path(opts.out_dir);
        write_cov_grid_csv(out / ("cov_" + tag + "_analytic.csv"), ana, meta.dump(2));
        write_cov_grid_csv(out / ("cov_" + tag + "_empirical.csv"), emp, meta.dump(2));

        double max_pull = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            for (std::size_t j = 0; j < times.size(); ++j) {
                const double se = emp.stderr_[i][j];
                if (se > 0.0) {
                    max_pull = std::max(max_pull,
                                        std::abs(ana.value[i][j] - emp.value[i][j]) / se);
                }
            }
        }
        report["pairs"].push_back({{"pair", ana.pair}, {"max_abs_pull", max_pull}});
        if (!opts.quiet) {
            std::cout << ana.pair << ": max |analytic - MC| / SE = "
                      << format_sig(max_pull) << '\n';
        }
    }
    std::ofstream rf(std::filesystem::path(opts.out_dir) / "correlate_report.json");
    rf << report.dump(2) << '\n';
    return 0;
}

int cmd_sme(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"operators", "fluorescence", "initial",
                                        "dt", "n_steps", "seed", "exact_sampling",
                                        "compare_trajectories"});
    OperatorSet ops;
    try {
        if (cfg.contains("operators")) {
            ops = operator_set_from_json(cfg.at("operators").dump());
        } else if (cfg.contains("fluorescence")) {
            const json& f = cfg.at("fluorescence");
            ops = fluorescence_operator_set(get_opt(f, "gamma1", 1.0),
                                            get_opt(f, "gamma_phi", 0.0),
                                            get_opt(f, "eta", 1.0));
        } else {
            throw ConfigError("config needs either 'operators' or 'fluorescence'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    Eigen::MatrixXcd rho0;
    if (cfg.contains("initial") && cfg.at("initial").is_object()) {
        rho0 = to_density(parse_state(cfg, "initial"));
    } else {
        throw ConfigError("config missing key: initial (Bloch state object)");
    }
    if (rho0.rows() != ops.dim()) throw ConfigError("initial state dimension mismatch");

    const auto dt = get_req<double>(cfg, "dt");
    const auto n_steps = get_req<std::size_t>(cfg, "n_steps");
    const bool exact = get_opt(cfg, "exact_sampling", true);
    const std::uint64_t seed = resolve_seed(opts, cfg);

    const SmeTrajectory traj = simulate_sme(rho0, ops, dt, n_steps, seed, exact);
    write_sme_csv(std::filesystem::path(opts.out_dir) / "sme_traj.csv", traj);

    json manifest;
    manifest["schema-version"] = 1;
    manifest["seed"] = seed;
    manifest["dt"] = dt;
    manifest["n_steps"] = n_steps;
    manifest["exact_sampling"] = exact;
    manifest["operators"] = json::parse(operator_set_to_json(ops));

    // optional cross-check of the fluorescence specialization against the
    // Bloch-coordinate exact scheme: compare ensemble means of u
    if (cfg.contains("compare_trajectories") && cfg.contains("fluorescence")) {
        const auto n_cmp = cfg.at("compare_trajectories").get<std::size_t>();
        const json& f = cfg.at("fluorescence");
        MeasurementParams mp;
        mp.gamma1 = get_opt(f, "gamma1", 1.0);
        mp.gamma_phi = get_opt(f, "gamma_phi", 0.0);
        mp.eta = get_opt(f, "eta", 1.0);
        mp.dt = dt;
        const BlochState s0 = parse_state(cfg, "initial");
        double mean_sme = 0.0;
        for (std::size_t k = 0; k < n_cmp; ++k) {
            const SmeTrajectory t2 = simulate_sme(rho0, ops, dt, n_steps, seed + 1000 + k, exact);
            mean_sme += 2.0 * t2.states.back()(0, 0).real();
        }
        mean_sme /= static_cast<double>(n_cmp);
        const Ensemble e = simulate_ensemble(s0, mp, Scheme::Exact, n_steps, n_cmp,
                                             seed + 2000, resolve_threads(opts));
        double mean_bloch = 0.0;
        for (const auto& tr : e.members) mean_bloch += tr.states.back().u;
        mean_bloch /= static_cast<double>(n_cmp);
        manifest["compare"] = {{"final_mean_u_sme", mean_sme},
                               {"final_mean_u_bloch", mean_bloch}};
        if (!opts.quiet) {
            std::cout << "final <u>: sme " << format_sig(mean_sme) << " vs bloch "
                      << format_sig(mean_bloch) << '\n';
        }
    }
    std::ofstream mf(std::filesystem::path(opts.out_dir) / "sme_manifest.json");
    mf << manifest.dump(2) << '\n';
    if (!opts.quiet) std::cout << "wrote " << opts.out_dir << "/sme_traj.csv\n";
    return 0;
}

int cmd_cv_reconstruct(const CommonOpts& opts) {
    const json cfg = load_config(opts, {"state", "epsilon", "targets", "n_samples", "seed"});
    const BlochState s = parse_state(cfg, "state");
    const auto epsilon = get_req<double>(cfg, "epsilon");
    if (epsilon <= 0.0 || epsilon >= 1.0) throw ConfigError("epsilon must lie in (0, 1)");
    const auto n_samples = get_req<std::size_t>(cfg, "n_samples");
    if (n_samples == 0) throw ConfigError("n_samples must be positive");
    const auto target_names = get_req<std::vector<std::string>>(cfg, "targets");

    Rng rng(resolve_seed(opts, cfg));
    json report;
    report["schema-version"] = 1;
    report["results"] = json::array();
    for (const std::string& name : target_names) {
        PauliTarget target;
        try {
            target = pauli_from_string(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        const Reconstruction rec = reconstruct_from_state(s, epsilon, target, n_samples, rng);
        report["results"].push_back({{"target", name},
                                     {"N", rec.n},
                                     {"epsilon", epsilon},
                                     {"estimate", rec.estimate},
                                     {"stderr", rec.stderr_},
                                     {"truth_if_known", true_expectation(s, target)}});
        if (!opts.quiet) {
            std::cout << name << " = " << format_sig(rec.estimate) << " +- "
                      << format_sig(rec.stderr_) << " (truth "
                      << format_sig(true_expectation(s, target)) << ")\n";
        }
    }
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream rf(std::filesystem::path(opts.out_dir) / "cv_report.json");
    rf << report.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusive quantum trajectories of a fluorescing qubit"};
    app.require_subcommand(1);

    struct Entry {
        CLI::App* cmd;
        CommonOpts opts;
        int (*run)(const CommonOpts&);
    };
    std::vector<Entry> entries;
    entries.reserve(8); // option bindings point into the vector; no reallocation
    const auto add = [&](const char* name, const char* desc, int (*run)(const CommonOpts&)) {
        entries.push_back({app.add_subcommand(name, desc), {}, run});
        add_common(entries.back().cmd, entries.back().opts);
    };
    add("simulate", "simulate a monitored ensemble and write member CSVs", cmd_simulate);
    add("average", "ensemble means/variances over time", cmd_average);
    add("mlp", "most likely path between boundary states (shooting solve)", cmd_mlp);
    add("mlp-ideal", "ideal-case (theta, p_theta) path and phase portrait", cmd_mlp_ideal);
    add("correlate", "analytic vs Monte Carlo covariance grids", cmd_correlate);
    add("sme", "general stochastic master equation trajectory", cmd_sme);
    add("cv-reconstruct", "observable reconstruction from outcome statistics",
        cmd_cv_reconstruct);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    for (const Entry& entry : entries) {
        if (!entry.cmd->parsed()) continue;
        try {
            return entry.run(entry.opts);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::exception& e) {
            std::cerr << "numeric failure: " << e.what() << '\n';
            return kExitNumeric;
        }
    }
    return kExitConfig;
}

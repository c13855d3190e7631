#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "cli_io.hpp"
#include "windtrade/calib.hpp"
#include "windtrade/errors.hpp"
#include "windtrade/impact.hpp"
#include "windtrade/mc.hpp"
#include "windtrade/rng.hpp"

using namespace windtrade;
using cli::fmt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFit = 3;
constexpr int kExitCfl = 4;

// Nearest-neighbour tolerance between forecast target and production sample.
constexpr double kAlignToleranceSeconds = 300.0;

std::ofstream open_out(const std::string& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    return out;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

LatentParams read_latent(const std::string& file) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(file, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(file, e.line(), e.message());
    }
    try {
        return {tree.get<double>("latent.nu_x"), tree.get<double>("latent.x_min"), tree.get<double>("latent.x_max")};
    } catch (const boost::property_tree::ptree_error& e) {
        throw ParseError(file, 0, e.what());
    }
}

struct FitProductionArgs {
    std::string data;
    double rated_kw = 0.0;
    std::size_t subsample = 1;
    std::string out;
};

int fit_production_cmd(const FitProductionArgs& a) {
    const auto records = cli::read_production_csv(a.data);
    if (records.empty()) throw ParseError(a.data, 1, "no data rows");
    std::vector<double> values;
    values.reserve(records.size());
    std::size_t clamped = 0;
    for (const auto& r : records) values.push_back(cli::normalize_power(r.power_kw, a.rated_kw, clamped));
    if (clamped > 0) warn(std::to_string(clamped) + " power values outside [0, rated] were clamped");

    const ProductionSample sample(std::move(values), a.subsample);
    const auto fit = fit_production(sample);
    for (const auto& w : fit.warnings) warn(w);
    const auto lat = to_latent(fit.law);
    const auto at = atoms(fit.law);

    auto out = open_out(a.out);
    out << "[production]\n"
        << "mu = " << fmt(fit.law.mu()) << "\nnu = " << fmt(fit.law.nu()) << "\nzeta = " << fmt(fit.law.zeta())
        << "\np0 = " << fmt(at.p0) << "\np1 = " << fmt(at.p1) << "\n\n[latent]\n"
        << "nu_x = " << fmt(lat.nu_x()) << "\nx_min = " << fmt(lat.x_min()) << "\nx_max = " << fmt(lat.x_max())
        << "\n\n[fit]\n"
        << "objective = " << fmt(fit.objective) << "\niterations = " << fit.iterations
        << "\nconverged = " << (fit.converged ? "true" : "false") << "\nsamples = " << sample.size()
        << "\nclamped = " << clamped << "\nrated_power_kw = " << fmt(a.rated_kw) << '\n';
    return 0;
}

struct FitThetaArgs {
    std::string forecasts;
    std::string production;
    std::string params;
    double rated_kw = 0.0;
    std::string mode = "parametric";
    std::string out;
    double bucket_hours = 0.25;
    std::size_t min_count = 30;
    std::optional<double> tau_star_hours;
    std::uint64_t seed = 0;
};

int fit_theta_cmd(const FitThetaArgs& a) {
    const auto lat = read_latent(a.params);
    const auto forecasts = cli::read_forecast_csv(a.forecasts);
    const auto production = cli::read_production_csv(a.production);
    std::size_t dropped = 0;
    std::size_t clamped = 0;
    const auto pairs =
        cli::align_forecasts(forecasts, production, a.rated_kw, kAlignToleranceSeconds, dropped, clamped);
    if (dropped > 0) warn(std::to_string(dropped) + " forecasts had no production sample within 5 minutes");
    if (clamped > 0) warn(std::to_string(clamped) + " forecast or production values were clamped to [0, 1]");
    if (pairs.empty()) throw FitError("degenerate sample: no forecast could be matched with production");

    const auto est = error_variances_from_data(pairs, {a.bucket_hours, a.min_count});
    for (const auto& w : est.warnings) warn(w);
    const ForecastErrorModel phi(lat);
    const double var = phi.unconditional_variance();
    for (std::size_t i = 0; i < est.targets.horizons.size(); ++i) {
        if (est.targets.variances[i] >= var) {
            warn("error variance at horizon " + fmt(est.targets.horizons[i]) +
                 " h reaches Var[f_prod]; theta capped at nu_x^2");
        }
    }

    if (a.mode == "nonparametric") {
        const double T = est.targets.horizons.back();
        const auto s = fit_theta_nonparametric(lat, est.targets, T);
        auto table = open_out(a.out);
        table << "horizon_hours,theta\n";
        for (double h : est.targets.horizons) table << fmt(h) << ',' << fmt(s(T - h)) << '\n';
        return 0;
    }
    if (a.mode != "parametric") throw ParseError("--mode", 0, "expected parametric or nonparametric");
    ThetaFitOptions opts;
    opts.tau_star = a.tau_star_hours;
    opts.seed = a.seed;
    const auto fit = fit_theta_parametric(lat, est.targets, opts);
    if (!fit.converged) warn("theta fit did not converge");
    auto out = open_out(a.out);
    out << "[forecast]\n"
        << "model = parametric\n"
        << "sigma0_per_sqrt_hour = " << fmt(fit.params.sigma0) << "\neta_per_hour = " << fmt(fit.params.eta)
        << "\njump_b = " << fmt(fit.params.b) << "\ntau_star_hours = " << fmt(fit.params.tau_star) << "\n\n[fit]\n"
        << "objective = " << fmt(fit.objective) << "\nconverged = " << (fit.converged ? "true" : "false")
        << "\npairs = " << pairs.size() << "\nhorizons = " << est.targets.horizons.size() << '\n';
    return 0;
}

std::string axis_line(const std::string& name, const std::vector<double>& v) {
    std::string s = "axis " + name + " =";
    for (double x : v) s += ' ' + fmt(x);
    return s + '\n';
}

struct SolveArgs {
    std::string config;
    std::string policy = "hjb";
    std::string out_grid;
    std::string out_policy;
};

int solve_cmd(const SolveArgs& a) {
    const auto cfg = cli::load_config(a.config);
    const auto policy = parse_policy(a.policy);
    const auto spec = cli::make_spec(cfg, policy);
    const auto open_manifest = [&] {
        auto m = open_out(a.out_grid + ".manifest");
        m << "format = WTTENSOR little-endian float64 row-major\n";
        return m;
    };

    if (policy == Policy::Hjb) {
        const ImpactParams ip(spec.gamma, spec.drift, spec.penalty);
        const auto sol = solve_hjb(ip, spec.latent, spec.schedule, spec.hjb);
        const std::vector<std::uint64_t> dims{sol.slices(), sol.phi_grid().size(), sol.y_grid().size()};
        const std::vector<double> w(sol.values().begin(), sol.values().end());
        cli::write_tensor(a.out_grid, dims, w);
        auto manifest = open_manifest();
        manifest << "policy = hjb\nvalue_file = " << a.out_grid << "\nvalue_dims = t phi x\n";
        if (!a.out_policy.empty()) {
            cli::write_tensor(a.out_policy, dims, sol.policy());
            manifest << "policy_file = " << a.out_policy << "\npolicy_dims = t phi x\n";
        }
        manifest << "time_unit = hours\nsubsteps = " << sol.substeps() << '\n'
                 << axis_line("t", sol.t_grid()) << axis_line("phi", sol.phi_grid())
                 << axis_line("x", sol.x_grid());
        return 0;
    }
    if (policy == Policy::Thresholds) {
        const auto tables = solve_xi_thresholds(spec.penalty, spec.latent, spec.schedule, spec.grid, spec.drift,
                                                spec.thresholds);
        std::vector<double> xi;
        for (std::size_t k = 0; k < tables.stages(); ++k) {
            const auto& row = tables.table(k);
            xi.insert(xi.end(), row.begin(), row.end());
        }
        cli::write_tensor(a.out_grid, {tables.stages(), tables.log_x().size()}, xi);
        std::vector<double> x(tables.log_x().size());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::exp(tables.log_x()[j]);
        const std::vector<double> update_times(tables.times().begin(), tables.times().end() - 1);
        auto manifest = open_manifest();
        manifest << "policy = thresholds\nvalue_file = " << a.out_grid << "\nvalue_dims = k x\n"
                 << "time_unit = hours\n"
                 << axis_line("k", update_times) << axis_line("x", x);
        return 0;
    }
    throw ParseError("--policy", 0, "solve supports hjb and thresholds");
}

struct SimulateArgs {
    std::string config;
    std::string policy = "hjb";
    std::optional<std::size_t> n_paths;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int simulate_cmd(const SimulateArgs& a) {
    const auto cfg = cli::load_config(a.config);
    auto spec = cli::make_spec(cfg, parse_policy(a.policy));
    if (a.n_paths) spec.n_paths = *a.n_paths;
    if (a.seed) spec.seed = *a.seed;
    const auto result = run_experiment(spec);
    if (result.phi_max_hits > 0) warn(std::to_string(result.phi_max_hits) + " paths reached phi_max");
    {
        auto out = open_out(a.out);
        write_path_csv(out, result);
    }
    auto summary = open_out(a.out + ".summary");
    summary << "policy = " << a.policy << "\nseed = " << spec.seed << "\nunit = EUR\n";
    write_summary(summary, result.summary);
    summary << "phi_max_hits = " << result.phi_max_hits << '\n';
    std::cout << a.policy << ": mean " << fmt(result.summary.mean) << " EUR, se " << fmt(result.summary.se)
              << ", median " << fmt(result.summary.median) << '\n';
    return 0;
}

struct SynthProductionArgs {
    double nu_x = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n = 100000;
    double rated_kw = 1000.0;
    std::uint64_t seed = 0;
    std::string start = "2020-01-01T00:00:00Z";
    std::string out;
};

int synth_production_cmd(const SynthProductionArgs& a) {
    const LatentParams lat(a.nu_x, a.x_min, a.x_max);
    const double t0 = cli::parse_timestamp(a.start);
    auto rng = substream(a.seed, 0, StreamTag::Synthetic);
    auto out = open_out(a.out);
    out << "timestamp,power\n";
    for (std::size_t i = 0; i < a.n; ++i) {
        out << cli::format_timestamp(t0 + 600.0 * static_cast<double>(i)) << ',' << fmt(a.rated_kw * sample(lat, rng))
            << '\n';
    }
    return 0;
}

struct SynthForecastArgs {
    std::string params;
    double sigma0 = 0.040113;
    double eta = 0.004423;
    double b = 0.308817;
    double tau_star = 120.0;
    std::size_t targets = 2000;
    double max_horizon = 72.0;
    double horizon_step = 1.0;
    double rated_kw = 1000.0;
    std::uint64_t seed = 0;
    std::string start = "2020-01-01T00:00:00Z";
    std::string out_forecasts;
    std::string out_production;
};

// Targets every 30 minutes; each target has one latent path observed at
// horizons horizon_step, 2 horizon_step, ... max_horizon. Production rows
// every 10 minutes; rows that are not targets are independent draws.
int synth_forecasts_cmd(const SynthForecastArgs& a) {
    const auto lat = read_latent(a.params);
    const std::size_t n_h = static_cast<std::size_t>(std::floor(a.max_horizon / a.horizon_step + 1e-9));
    if (n_h < 1) throw DomainError("synth-forecasts: max horizon below the horizon step");
    const double H = std::max(a.tau_star, a.max_horizon) + a.horizon_step;
    const auto schedule = ThetaSchedule::parametric({a.sigma0, a.eta, a.b, a.tau_star}, H, lat.variance());
    std::vector<double> grid{0.0};
    for (std::size_t k = n_h; k >= 1; --k) grid.push_back(H - a.horizon_step * static_cast<double>(k));
    grid.push_back(H);
    const ForecastSimulator sim(lat, schedule, grid, a.seed);

    const double t0 = cli::parse_timestamp(a.start) + 3600.0 * a.max_horizon;
    auto fc = open_out(a.out_forecasts);
    fc << "issue_time,target_time,forecast\n";
    std::vector<double> realized(a.targets);
    ForecastPath path;
    for (std::size_t i = 0; i < a.targets; ++i) {
        sim.fill(i, path);
        const double target = t0 + 1800.0 * static_cast<double>(i);
        for (std::size_t k = 1; k + 1 < path.times.size(); ++k) {
            const double h = H - path.times[k];
            fc << cli::format_timestamp(target - 3600.0 * h) << ',' << cli::format_timestamp(target) << ','
               << fmt(a.rated_kw * path.f_values[k]) << '\n';
        }
        realized[i] = path.realized();
    }

    auto rng = substream(a.seed, 0, StreamTag::Synthetic);
    auto prod = open_out(a.out_production);
    prod << "timestamp,power\n";
    for (std::size_t i = 0; i < 3 * a.targets; ++i) {
        const double v = i % 3 == 0 ? realized[i / 3] : sample(lat, rng);
        prod << cli::format_timestamp(t0 + 600.0 * static_cast<double>(i)) << ',' << fmt(a.rated_kw * v) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrate wind production and forecast models; solve and simulate selling strategies"};
    app.require_subcommand(1);

    FitProductionArgs fp;
    auto* fit_prod = app.add_subcommand("fit-production", "Fit the production law to a power time series");
    fit_prod->add_option("--data", fp.data, "CSV with header timestamp,power (kW)")->required();
    fit_prod->add_option("--rated-power", fp.rated_kw, "Rated power in kW")->required()->check(CLI::PositiveNumber);
    fit_prod->add_option("--subsample", fp.subsample, "Keep every n-th observation")->check(CLI::PositiveNumber);
    fit_prod->add_option("--out", fp.out, "Output INI file")->required();

    FitThetaArgs ft;
    auto* fit_theta = app.add_subcommand("fit-theta", "Fit the remaining-variance schedule to forecast errors");
    fit_theta->add_option("--forecasts", ft.forecasts, "CSV with header issue_time,target_time,forecast (kW)")
        ->required();
    fit_theta->add_option("--production", ft.production, "CSV with header timestamp,power (kW)")->required();
    fit_theta->add_option("--params", ft.params, "Output of fit-production")->required();
    fit_theta->add_option("--rated-power", ft.rated_kw, "Rated power in kW")->required()->check(CLI::PositiveNumber);
    fit_theta->add_option("--mode", ft.mode, "parametric or nonparametric")
        ->check(CLI::IsMember({"parametric", "nonparametric"}));
    fit_theta->add_option("--out", ft.out, "INI (parametric) or horizon_hours,theta CSV (nonparametric)")
        ->required();
    fit_theta->add_option("--bucket-hours", ft.bucket_hours, "Horizon bucket width in hours")
        ->check(CLI::PositiveNumber);
    fit_theta->add_option("--min-count", ft.min_count, "Minimum pairs per horizon bucket");
    fit_theta->add_option("--tau-star-hours", ft.tau_star_hours, "Fix the horizon beyond which theta is capped");
    fit_theta->add_option("--seed", ft.seed, "Seed for the multi-start search");

    SolveArgs sv;
    auto* solve = app.add_subcommand("solve", "Solve for the hjb value function or the threshold tables");
    solve->add_option("--config", sv.config, "Run configuration (INI)")->required();
    solve->add_option("--policy", sv.policy, "hjb or thresholds")->check(CLI::IsMember({"hjb", "thresholds"}));
    solve->add_option("--out-grid", sv.out_grid, "Value tensor file; a .manifest is written alongside")
        ->required();
    solve->add_option("--out-policy", sv.out_policy, "Trading-rate tensor file (hjb only)");

    SimulateArgs sm;
    auto* simulate = app.add_subcommand("simulate", "Simulate a policy and record realized penalties");
    simulate->add_option("--config", sm.config, "Run configuration (INI)")->required();
    simulate->add_option("--policy", sm.policy, "exact, no_forecast, thresholds, hjb, buy_sell or never_trade")
        ->check(CLI::IsMember({"exact", "no_forecast", "thresholds", "hjb", "buy_sell", "never_trade"}));
    simulate->add_option("--n-paths", sm.n_paths, "Overrides simulation.n_paths")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sm.seed, "Overrides simulation.seed");
    simulate->add_option("--out", sm.out, "Per-path CSV; a .summary is written alongside")->required();

    SynthProductionArgs spa;
    auto* synth_prod = app.add_subcommand("synth-production", "Write a synthetic production series");
    synth_prod->add_option("--nu-x", spa.nu_x)->required();
    synth_prod->add_option("--x-min", spa.x_min)->required();
    synth_prod->add_option("--x-max", spa.x_max)->required();
    synth_prod->add_option("--n", spa.n, "Number of 10-minute samples");
    synth_prod->add_option("--rated-power", spa.rated_kw, "Rated power in kW")->check(CLI::PositiveNumber);
    synth_prod->add_option("--seed", spa.seed);
    synth_prod->add_option("--start", spa.start, "First timestamp (UTC)");
    synth_prod->add_option("--out", spa.out)->required();

    SynthForecastArgs sfa;
    auto* synth_fc = app.add_subcommand("synth-forecasts", "Write synthetic forecasts and matching production");
    synth_fc->add_option("--params", sfa.params, "INI with a [latent] section")->required();
    synth_fc->add_option("--sigma0", sfa.sigma0, "per sqrt hour");
    synth_fc->add_option("--eta", sfa.eta, "per hour");
    synth_fc->add_option("--b", sfa.b);
    synth_fc->add_option("--tau-star-hours", sfa.tau_star);
    synth_fc->add_option("--targets", sfa.targets, "Number of half-hourly target times");
    synth_fc->add_option("--max-horizon-hours", sfa.max_horizon);
    synth_fc->add_option("--horizon-step-hours", sfa.horizon_step)->check(CLI::PositiveNumber);
    synth_fc->add_option("--rated-power", sfa.rated_kw)->check(CLI::PositiveNumber);
    synth_fc->add_option("--seed", sfa.seed);
    synth_fc->add_option("--start", sfa.start);
    synth_fc->add_option("--out-forecasts", sfa.out_forecasts)->required();
    synth_fc->add_option("--out-production", sfa.out_production)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*fit_prod) return fit_production_cmd(fp);
        if (*fit_theta) return fit_theta_cmd(ft);
        if (*solve) return solve_cmd(sv);
        if (*simulate) return simulate_cmd(sm);
        if (*synth_prod) return synth_production_cmd(spa);
        if (*synth_fc) return synth_forecasts_cmd(sfa);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFit;
    } catch (const CflError& e) {
        std::cerr << "error: " << e.what() << "\nsuggestion: " << e.suggestion() << '\n';
        return kExitCfl;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}

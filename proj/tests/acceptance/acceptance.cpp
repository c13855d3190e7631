#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "windtrade/calib.hpp"
#include "windtrade/dist.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/frictionless.hpp"
#include "windtrade/impact.hpp"
#include "windtrade/mc.hpp"
#include "windtrade/rng.hpp"

using namespace windtrade;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

LatentParams plant_latent(std::size_t i) {
    const auto& p = oracle::kPlants[i];
    return {p.nu_x, p.x_min, p.x_max};
}

std::string describe(std::initializer_list<std::pair<const char*, double>> items) {
    std::ostringstream os;
    os.precision(4);
    bool first = true;
    for (const auto& [name, value] : items) {
        os << (first ? "" : ", ") << name << ' ' << value;
        first = false;
    }
    return os.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Reference market-impact instance in day units.
constexpr double kGammaDays = 4800.0 / 576.0;

ImpactParams reference_params(double gamma = kGammaDays) {
    return {gamma, DriftCurve::constant(-0.2, 6.0), PenaltyFunction::quadratic(200.0)};
}

ThetaSchedule reference_schedule(double total_vol) {
    return ThetaSchedule::constant_volatility(total_vol / std::sqrt(6.0), 6.0, plant_latent(0).variance());
}

Outcome parameter_map() {
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto d = from_latent(plant_latent(i));
        const auto& row = oracle::kPlants[i];
        worst = std::max({worst, std::abs(d.mu() - row.mu), std::abs(d.nu() - row.nu), std::abs(d.zeta() - row.zeta)});
    }
    return {worst < 1e-4, describe({{"max abs error", worst}})};
}

Outcome calibration_round_trip() {
    double worst_prod = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& p = oracle::kPlants[i];
        auto rng = substream(100 + i, 0, StreamTag::Test);
        std::normal_distribution<double> normal;
        std::vector<double> draws(100000);
        for (auto& y : draws) y = std::clamp(p.zeta + std::exp(p.mu + p.nu * normal(rng)), 0.0, 1.0);
        const auto fit = fit_production(ProductionSample(std::move(draws)));
        worst_prod = std::max({worst_prod, std::abs(fit.law.mu() - p.mu), std::abs(fit.law.nu() - p.nu),
                               std::abs(fit.law.zeta() - p.zeta)});
    }

    const auto lat = plant_latent(0);
    const ForecastErrorModel phi(lat);
    const ThetaSchedule::Parametric truth{oracle::kSigma0, oracle::kEta, oracle::kJumpB, 120.0};
    std::vector<double> h;
    std::vector<double> v;
    for (double x = 1.0; x <= 144.0; x += 2.0) {
        h.push_back(x);
        v.push_back(phi(x >= truth.tau_star ? lat.variance() : std::min(parametric_theta(truth, x), lat.variance())));
    }
    const auto fit = fit_theta_parametric(lat, VarianceTargets(h, v));
    const double worst_theta = std::max({std::abs(fit.params.sigma0 / truth.sigma0 - 1.0),
                                         std::abs(fit.params.eta / truth.eta - 1.0),
                                         std::abs(fit.params.b / truth.b - 1.0)});
    return {worst_prod < 0.05 && worst_theta < 0.10,
            describe({{"production max abs error", worst_prod}, {"theta max rel error", worst_theta}})};
}

Outcome forecast_consistency() {
    const auto lat = plant_latent(0);
    const double horizon = 144.0;
    const auto s = ThetaSchedule::parametric({oracle::kSigma0, oracle::kEta, oracle::kJumpB, 120.0}, horizon,
                                             lat.variance());
    const auto grid = uniform_grid(0.0, horizon, 24);
    const std::size_t n = 100'000;
    const ForecastSimulator sim(lat, s, grid, 5);
    const ForecastErrorModel phi(lat);

    std::vector<oracle::MeanSe> increments(grid.size() - 1);
    std::vector<oracle::MeanSe> sq_errors(grid.size() - 1);
    std::vector<double> terminal(n);
    bool in_range = true;
    ForecastPath p;
    for (std::size_t i = 0; i < n; ++i) {
        sim.fill(i, p);
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            increments[k].add(p.f_values[k + 1] - p.f_values[k]);
            const double e = p.f_values[k] - p.realized();
            sq_errors[k].add(e * e);
        }
        for (double f : p.f_values) in_range = in_range && f >= 0.0 && f <= 1.0;
        terminal[i] = p.realized();
    }
    double worst_martingale = 0.0;
    double worst_variance = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        worst_martingale = std::max(worst_martingale, std::abs(increments[k].mean()) / increments[k].se());
        const double se = sq_errors[k].se();
        const double gap = std::abs(sq_errors[k].mean() - phi(s(grid[k])));
        worst_variance = std::max(worst_variance, se > 0.0 ? gap / se : (gap < 1e-12 ? 0.0 : 1e9));
    }
    const auto d = from_latent(lat);
    const auto [p0, p1] = atoms(d);
    const double ks = oracle::ks_distance(
        terminal, [&](double y) { return cdf(d, y); },
        [&](double y) { return y <= 0.0 ? 0.0 : (y >= 1.0 ? 1.0 - p1 : cdf(d, y)); });
    return {in_range && worst_martingale < 3.0 && worst_variance < 3.0 && ks < 0.005,
            describe({{"max |mean increment|/se", worst_martingale},
                      {"max |variance gap|/se", worst_variance},
                      {"KS", ks}})};
}

Outcome error_variance_shape() {
    const auto lat = plant_latent(0);
    const ForecastErrorModel phi(lat);
    const double at_zero = std::abs(phi(0.0));
    const double at_cap = std::abs(phi(lat.variance()) - variance_fprod(lat));
    bool increasing = true;
    double prev = phi(0.0);
    for (int i = 1; i <= 50; ++i) {
        const double v = phi(lat.variance() * i / 50.0);
        increasing = increasing && v > prev;
        prev = v;
    }
    return {at_zero < 1e-8 && at_cap < 1e-8 && increasing,
            describe({{"|phi(0)|", at_zero}, {"|phi(cap) - Var|", at_cap}, {"strictly increasing", increasing}})};
}

Outcome frictionless_closed_forms() {
    auto rng = substream(51, 0, StreamTag::Test);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const double T = 1.0 + 9.0 * u01(rng);
        const double a = -0.5 + 0.7 * u01(rng);
        const double b = 0.5 * u01(rng);
        const double c = 0.5 + 2.5 * u01(rng);
        const double kappa = 1.0 + 499.0 * u01(rng);
        const double F = u01(rng);
        const auto& row = oracle::kPlants[inst % 3];
        const TruncatedLogNormal law(row.mu, row.nu, row.zeta);
        const DriftCurve drift([=](double s) { return a + b * std::cos(c * s); }, T);
        const auto pen = PenaltyFunction::quadratic(kappa);
        auto remaining = [=](double t) { return a * (T - t) + b / c * (std::sin(c * T) - std::sin(c * t)); };

        double r_min = 0.0;
        for (int i = 0; i <= 1000; ++i) r_min = std::min(r_min, remaining(T * i / 1000.0));
        auto grid_min = [&](const std::function<double(double)>& obj, double q_hi) {
            double best_q = 0.0;
            double best = obj(0.0);
            for (double q = 0.0; q <= q_hi; q += 0.01) {
                if (const double v = obj(q); v < best) best = v, best_q = q;
            }
            for (double q = std::max(0.0, best_q - 0.02); q <= best_q + 0.02; q += 1e-4) best = std::min(best, obj(q));
            return best;
        };
        const double q_hi = 1.0 + std::abs(r_min) / kappa + 0.5;
        auto shortfall = [&](double gap) { return gap < 0.0 ? 0.5 * kappa * gap * gap : 0.0; };
        const double brute_exact = grid_min([&](double q) { return q * r_min + shortfall(F - q); }, q_hi);
        worst = std::max(worst, std::abs(exact_forecast_plan(pen, drift, F).value - brute_exact));

        const AveragedPenalty avg(pen, ProductionLaw::from(law));
        auto expected_pen = [&](double q) {
            return 0.5 * kappa * oracle::tln_shortfall_sq(q, law.mu(), law.nu(), law.zeta());
        };
        const double brute_nf = grid_min([&](double q) { return q * r_min + expected_pen(q); }, q_hi);
        worst = std::max(worst, std::abs(no_forecast_plan(avg, drift).value - brute_nf));
    }

    double worst_example = 0.0;
    for (double kappa : {1.0, 3.5, 200.0}) {
        const AveragedPenalty avg(PenaltyFunction::quadratic(kappa), ProductionLaw::uniform());
        for (double x = -1.5; x <= 0.5; x += 0.05) {
            const double expected = x < -0.5 ? 0.5 * kappa * (x * x + 1.0 / 12.0) : kappa / 6.0 * std::pow(0.5 - x, 3);
            worst_example = std::max(worst_example, std::abs(avg.value(x) - expected) / std::max(1.0, kappa));
        }
        for (double z = -2.0 * kappa; z < 0.0; z += kappa / 20.0) {
            const double expected = z < -0.5 * kappa ? z / kappa : 0.5 - std::sqrt(-2.0 * z / kappa);
            worst_example = std::max(worst_example, std::abs(avg.inverse_derivative(z) - expected));
        }
    }
    return {worst < 1e-4 && worst_example < 1e-10,
            describe({{"max brute-force gap", worst}, {"max uniform example error", worst_example}})};
}

Outcome threshold_equation() {
    const auto lat = plant_latent(0);
    const double kappa = 200.0;
    const auto pen = PenaltyFunction::quadratic(kappa);
    const auto drift = DriftCurve::constant(-0.2, 6.0);
    const auto sched = reference_schedule(0.66);
    const auto times = uniform_grid(0.0, 6.0, 8);

    const auto tables = solve_xi_thresholds(pen, lat, sched, times, drift);
    const std::size_t n = tables.stages();
    const ForecastSimulator sim(lat, sched, times, 52);
    std::vector<oracle::MeanSe> residual(n);
    ForecastPath path;
    std::vector<double> xi(n);
    for (std::size_t p = 0; p < 100000; ++p) {
        sim.fill(p, path);
        for (std::size_t k = 0; k < n; ++k) xi[k] = tables.xi(k, path.x_values[k]);
        double running = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            running = std::max(running, xi[k]);
            const double r = kappa * std::min(path.realized() - running, 0.0) - tables.remaining_drift(k);
            residual[k].add(xi[k] > 0.0 ? r : 0.0);
        }
    }
    double worst_residual = 0.0;
    for (const auto& r : residual) worst_residual = std::max(worst_residual, std::abs(r.mean()) / r.se());

    const auto capped = ThetaSchedule::constant_volatility(0.3, 6.0, lat.variance());
    const auto single = solve_xi_thresholds(pen, lat, capped, {0.0, 6.0}, drift);
    const auto nf = no_forecast_plan(AveragedPenalty(pen, ProductionLaw::from(from_latent(lat))), drift);
    const double nf_gap = std::abs(single.xi(0, 1.0) - nf.block);

    const auto frozen = ThetaSchedule::constant_volatility(0.0, 6.0, lat.variance());
    const auto exact_tables = solve_xi_thresholds(pen, lat, frozen, times, drift);
    double exact_gap = 0.0;
    for (std::size_t i = 0; i < exact_tables.log_x().size(); ++i) {
        const double f = lat.curve()(std::exp(exact_tables.log_x()[i]));
        exact_gap = std::max(exact_gap, std::abs(exact_tables.table(0)[i] - exact_forecast_plan(pen, drift, f).block));
    }
    return {worst_residual < 3.0 && nf_gap < 1e-6 && exact_gap < 1e-6,
            describe({{"max |residual|/se", worst_residual}, {"n=1 gap", nf_gap}, {"theta=0 gap", exact_gap}})};
}

Outcome impact_closed_forms() {
    double worst = 0.0;
    bool behaviour = true;
    {
        const auto ip = reference_params(4800.0);
        const double F = 0.5;
        const auto plan = pontryagin_plan(ip, F);
        const double closed = F - (-0.2 * 36.0 / 2.0 + 4800.0 * F) / (200.0 * 6.0 + 4800.0);
        worst = std::max(worst, std::abs(plan.terminal_position - closed));
        const auto& r = plan.rates;
        for (std::size_t i = 1; i + 1 < r.size(); ++i) behaviour = behaviour && std::abs(r[i + 1] - 2.0 * r[i] + r[i - 1]) < 1e-14;
        behaviour = behaviour && plan.stop_time == 6.0 && r.back() >= 0.0 && r.front() > r.back();
    }
    {
        const double g = 1.0;
        const double k = 200.0;
        const double mu = -0.2;
        const double T = 6.0;
        const double F = 0.1;
        const ImpactParams ip(g, DriftCurve::constant(mu, T), PenaltyFunction::quadratic(k));
        const auto plan = pontryagin_plan(ip, F);
        const double A = mu * T * T / 2.0 + g * F;
        const double closed = F - mu / (k * k) * (g + k * T) -
                              std::sqrt(mu * mu / std::pow(k, 4) * (g + k * T) * (g + k * T) - 2.0 * mu / (k * k) * A);
        worst = std::max(worst, std::abs(plan.terminal_position - closed));
        const double t_star = -g / k + std::sqrt((T + g / k) * (T + g / k) - 2.0 / mu * A);
        const double dt = plan.times[1] - plan.times[0];
        behaviour = behaviour && A < 0.0 && std::abs(plan.stop_time - t_star) <= dt;
        for (std::size_t i = 0; i < plan.rates.size(); ++i) {
            if (plan.times[i] > t_star + dt) behaviour = behaviour && plan.rates[i] == 0.0;
        }
        const double lambda = (mu * g + std::sqrt(mu * mu * g * g - 2.0 * mu * k * g * (k * F - mu * T))) / (g * k);
        for (double t : {0.0, 0.5, 1.0}) {
            behaviour = behaviour && std::abs(plan.rate(t) - (lambda + mu / g * t)) < 1e-7 * std::abs(lambda);
        }
    }
    return {worst < 1e-8 && behaviour, describe({{"max terminal-position error", worst}, {"rate shape ok", behaviour}})};
}

Outcome pde_validation() {
    const auto lat = plant_latent(0);
    const auto frozen = ThetaSchedule::constant_volatility(0.0, 6.0, lat.variance());
    const auto ip_fast = reference_params(4800.0);
    const auto sol0 = solve_hjb(ip_fast, lat, frozen);
    const double start_gap = std::abs(sol0.value(0, 0.0, 1.0) / pontryagin_plan(ip_fast, lat.curve()(1.0)).value - 1.0);
    // Reported, not asserted: the relative gap grows as the value tends to zero.
    const auto x = sol0.x_grid();
    double worst_rel = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double f = lat.curve()(x[j]);
        if (f < 0.1) continue;
        worst_rel = std::max(worst_rel, std::abs(sol0.w(0, 0, j) / pontryagin_plan(ip_fast, f).value - 1.0));
    }

    std::vector<double> w;
    for (std::size_t m : {1, 2, 4}) {
        HjbGrid grid;
        grid.t_nodes = 30 * m + 1;
        grid.phi_nodes = 50 * m + 1;
        grid.y_nodes = 50 * m + 1;
        grid.keep_history = false;
        w.push_back(solve_hjb(ip_fast, lat, frozen, grid).value(0, 0.0, 1.0));
    }
    const double ratio = (w[0] - w[1]) / (w[1] - w[2]);

    const auto ip = reference_params();
    const auto s = reference_schedule(0.66);
    const auto sol = solve_hjb(ip, lat, s);
    HjbGrid fine;
    fine.t_nodes = 241;
    fine.phi_nodes = 301;
    fine.y_nodes = 301;
    fine.keep_history = false;
    const double w0 = sol.value(0, 0.0, 1.0);
    const double grid_tol = 2.0 * std::abs(solve_hjb(ip, lat, s, fine).value(0, 0.0, 1.0) - w0);
    const auto paths = simulate_paths(lat, s, uniform_grid(0.0, 6.0, 600), 10000, 21);
    oracle::MeanSe mc;
    for (const auto& o : simulate_policy(sol, paths, ip)) mc.add(o.total());
    const bool agree = std::abs(mc.mean() - w0) < 3.0 * mc.se() + grid_tol;
    return {start_gap < 0.02 && ratio > 1.6 && ratio < 2.5 && agree,
            describe({{"sigma=0 rel gap at x=1", start_gap},
                      {"max rel gap for F >= 0.1", worst_rel},
                      {"refinement ratio", ratio},
                      {"w(0,0,1)", w0},
                      {"MC mean", mc.mean()},
                      {"MC se", mc.se()},
                      {"grid tol", grid_tol}})};
}

ExperimentSpec impact_spec(Policy policy, double vol) {
    const auto lat = plant_latent(0);
    return ExperimentSpec{lat,   reference_schedule(vol), DriftCurve::constant(-0.2, 6.0),
                          PenaltyFunction::quadratic(200.0), kGammaDays, policy, 4000, 3,
                          uniform_grid(0.0, 6.0, 240)};
}

Outcome quality_figure() {
    const auto c = compare({impact_spec(Policy::Hjb, 0.66), impact_spec(Policy::BuySell, 0.66)}, 3);
    auto low_spec = impact_spec(Policy::Hjb, 0.33);
    low_spec.seed = 3;
    const auto low = run_experiment(low_spec);
    const double high_mean = c.results[0].summary.mean;
    const auto& d = c.differences[0];  // hjb - buy_sell
    const bool pass = low.summary.mean < high_mean && low.summary.median < 0.0 && d.mean - 3.0 * d.se > 0.0;
    return {pass, describe({{"mean 33%", low.summary.mean},
                            {"mean 66%", high_mean},
                            {"median 33%", low.summary.median},
                            {"hjb - buy_sell", d.mean},
                            {"paired se", d.se}})};
}

Outcome first_order_condition() {
    const auto lat = plant_latent(0);
    const auto ip = reference_params();
    const auto s = reference_schedule(0.66);
    const auto times = uniform_grid(0.0, 6.0, 600);
    const auto paths = simulate_paths(lat, s, times, 10000, 77);
    const BuySellStrategy st(ip, times);
    const double kappa = ip.penalty.kappa();
    std::vector<ImpactOutcome> runs;
    runs.reserve(paths.size());
    for (const auto& p : paths) runs.push_back(st.run(p));
    double worst = 0.0;
    for (std::size_t probe : {0, 120, 240, 360, 480}) {
        oracle::MeanSe m;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const auto& o = runs[i];
            m.add(ip.gamma * o.rates[probe] + ip.drift.remaining(times[probe]) -
                  kappa * (paths[i].realized() - o.plan.positions.back()));
        }
        worst = std::max(worst, std::abs(m.mean()) / m.se());
    }
    return {worst < 3.0, describe({{"max |residual|/se", worst}})};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const std::string& cli) {
    int checked = 0;
    int same = 0;
    auto expect_same = [&](const std::string& a, const std::string& b) {
        ++checked;
        same += (a == b && !a.empty()) ? 1 : 0;
    };

    for (auto policy : {Policy::Exact, Policy::NoForecast, Policy::Thresholds, Policy::Hjb, Policy::BuySell,
                        Policy::NeverTrade}) {
        auto spec = impact_spec(policy, 0.66);
        spec.n_paths = 300;
        if (policy == Policy::Thresholds) spec.grid = uniform_grid(0.0, 6.0, 8);
        std::ostringstream a;
        std::ostringstream b;
        write_path_csv(a, run_experiment(spec));
        write_summary(a, run_experiment(spec).summary);
        write_path_csv(b, run_experiment(spec));
        write_summary(b, run_experiment(spec).summary);
        expect_same(a.str(), b.str());
    }
    {
        std::vector<double> draws(20000);
        auto rng = substream(9, 0, StreamTag::Test);
        const auto lat = plant_latent(1);
        for (auto& y : draws) y = sample(lat, rng);
        const auto f1 = fit_production(ProductionSample(draws));
        const auto f2 = fit_production(ProductionSample(draws));
        expect_same(describe({{"", f1.law.mu()}, {"", f1.law.nu()}, {"", f1.law.zeta()}}) + std::to_string(f1.objective),
                    describe({{"", f2.law.mu()}, {"", f2.law.nu()}, {"", f2.law.zeta()}}) + std::to_string(f2.objective));
    }

    if (!cli.empty()) {
        const auto dir = std::filesystem::temp_directory_path() / "windtrade_acceptance";
        std::filesystem::create_directories(dir);
        const auto config = dir / "config.ini";
        std::ofstream(config) << "[plant]\nrated_power_kw = 1000\ndelivery_hours = 1\nnu_x = 0.6602\n"
                                 "x_min = 0.46129\nx_max = 3.94322\n[horizon]\nhorizon_hours = 144\nsteps = 240\n"
                                 "[forecast]\nmodel = constant_volatility\ntotal_volatility = 0.66\n"
                                 "[market]\nmu_eur_per_mwh_per_hour = -0.008333333333333333\n"
                                 "penalty_p_eur_per_mwh2 = 100\ngamma_eur_h_per_mwh2 = 200\n"
                                 "[hjb]\nt_nodes = 61\nphi_nodes = 76\ny_nodes = 76\n"
                                 "[thresholds]\nupdates = 8\n[simulation]\nn_paths = 300\nseed = 4\n";
        const std::string c = "\"" + cli + "\" ";
        auto twice = [&](const std::string& args_a, const std::string& args_b,
                         const std::vector<std::pair<std::string, std::string>>& outputs) {
            const bool ok = std::system((c + args_a + " > /dev/null 2>&1").c_str()) == 0 &&
                            std::system((c + args_b + " > /dev/null 2>&1").c_str()) == 0;
            for (const auto& [a, b] : outputs) expect_same(ok ? slurp(dir / a) : "", ok ? slurp(dir / b) : "");
        };
        const auto d = dir.string() + "/";
        const auto prod = [&](const char* o) {
            return "synth-production --nu-x 0.6602 --x-min 0.46129 --x-max 3.94322 --n 20000 --seed 2 --out " + d + o;
        };
        twice(prod("prod_a.csv"), prod("prod_b.csv"), {{"prod_a.csv", "prod_b.csv"}});
        const auto fitp = [&](const char* o) {
            return "fit-production --data " + d + "prod_a.csv --rated-power 1000 --out " + d + o;
        };
        twice(fitp("fit_a.ini"), fitp("fit_b.ini"), {{"fit_a.ini", "fit_b.ini"}});
        const auto fc = [&](const char* f, const char* p) {
            return "synth-forecasts --params " + d + "fit_a.ini --targets 400 --seed 3 --out-forecasts " + d + f +
                   " --out-production " + d + p;
        };
        twice(fc("fc_a.csv", "fp_a.csv"), fc("fc_b.csv", "fp_b.csv"), {{"fc_a.csv", "fc_b.csv"}, {"fp_a.csv", "fp_b.csv"}});
        const auto th = [&](const char* mode, const char* o) {
            return "fit-theta --forecasts " + d + "fc_a.csv --production " + d + "fp_a.csv --params " + d +
                   "fit_a.ini --rated-power 1000 --bucket-hours 1 --tau-star-hours 120 --mode " + mode + " --out " +
                   d + o;
        };
        twice(th("parametric", "th_a.ini"), th("parametric", "th_b.ini"), {{"th_a.ini", "th_b.ini"}});
        twice(th("nonparametric", "th_a.csv"), th("nonparametric", "th_b.csv"), {{"th_a.csv", "th_b.csv"}});
        const auto solve = [&](const char* policy, const char* o) {
            return std::string("solve --config ") + config.string() + " --policy " + policy + " --out-grid " + d + o +
                   " --out-policy " + d + o + ".rate";
        };
        twice(solve("hjb", "w_a.bin"), solve("hjb", "w_b.bin"), {{"w_a.bin", "w_b.bin"}, {"w_a.bin.rate", "w_b.bin.rate"}});
        twice(solve("thresholds", "xi_a.bin"), solve("thresholds", "xi_b.bin"), {{"xi_a.bin", "xi_b.bin"}});
        for (const char* policy : {"exact", "no_forecast", "thresholds", "hjb", "buy_sell", "never_trade"}) {
            const auto sim = [&](const char* tag) {
                return "simulate --config " + config.string() + " --policy " + policy + " --seed 8 --out " + d +
                       policy + tag + ".csv";
            };
            const std::string a = std::string(policy) + "_a.csv";
            const std::string b = std::string(policy) + "_b.csv";
            twice(sim("_a"), sim("_b"), {{a, b}, {a + ".summary", b + ".summary"}});
        }
    }
    return {checked > 0 && same == checked,
            std::to_string(same) + "/" + std::to_string(checked) + " outputs identical" +
                (cli.empty() ? " (library only; pass --cli to include the tool)" : "")};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    }
    const std::vector<Criterion> criteria{
        {1, "parameter-map fidelity", 1.0, parameter_map},
        {2, "calibration round trip", 120.0, calibration_round_trip},
        {3, "forecast-model consistency", 120.0, forecast_consistency},
        {4, "error-variance monotonicity and endpoints", 60.0, error_variance_shape},
        {5, "frictionless closed forms", 600.0, frictionless_closed_forms},
        {6, "discrete-update threshold equation", 600.0, threshold_equation},
        {7, "impact closed forms", 60.0, impact_closed_forms},
        {8, "PDE validation", 900.0, pde_validation},
        {9, "forecast-quality ordering", 900.0, quality_figure},
        {10, "buy/sell first-order condition", 600.0, first_order_condition},
        {11, "determinism", 900.0, [&] { return determinism(cli); }},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = o.pass && secs < c.budget_s;
        failures += pass ? 0 : 1;
        std::printf("%s %2d %s: %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs, c.budget_s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}

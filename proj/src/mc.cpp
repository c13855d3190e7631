#include "windtrade/mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "windtrade/errors.hpp"
#include "windtrade/law.hpp"

namespace windtrade {

namespace {

constexpr std::array<std::pair<Policy, std::string_view>, 6> kPolicyNames{{
    {Policy::Exact, "exact"},
    {Policy::NoForecast, "no_forecast"},
    {Policy::Thresholds, "thresholds"},
    {Policy::Hjb, "hjb"},
    {Policy::BuySell, "buy_sell"},
    {Policy::NeverTrade, "never_trade"},
}};

bool uses_impact(Policy p) { return p == Policy::Hjb || p == Policy::BuySell || p == Policy::NeverTrade; }

PathRecord record(double realized, double sold, double drift_loss, double impact, double volume) {
    return {realized, sold, drift_loss, impact, volume, drift_loss + impact + volume};
}

PathRecord frictionless_record(const TradePlan& plan, const ExperimentSpec& spec, double realized) {
    const auto c = frictionless_cost(plan, spec.drift, spec.penalty, realized);
    return record(realized, plan.final_position() + plan.terminal_lump, c.drift_loss, 0.0, c.volume_penalty);
}

PathRecord impact_record(const ImpactOutcome& o, double realized) {
    return record(realized, o.plan.final_position(), o.drift_loss, o.impact_cost, o.volume_penalty);
}

}  // namespace

std::string_view policy_name(Policy p) {
    for (const auto& [policy, name] : kPolicyNames) {
        if (policy == p) return name;
    }
    throw DomainError("unknown policy");
}

Policy parse_policy(std::string_view name) {
    for (const auto& [policy, n] : kPolicyNames) {
        if (n == name) return policy;
    }
    throw DomainError("unknown policy '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
    if (n_paths < 1) throw DomainError("experiment: n_paths must be at least 1");
    if (histogram_bins < 1) throw DomainError("experiment: histogram needs at least one bin");
    const double T = drift.horizon();
    if (std::abs(schedule.horizon() - T) > 1e-12 * std::max(1.0, T)) {
        throw DomainError("experiment: schedule and drift horizons differ");
    }
    if (grid.size() < 2) throw DomainError("experiment: time grid needs at least two points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw DomainError("experiment: time grid must be strictly ascending");
    }
    if (grid.front() < 0.0 || std::abs(grid.back() - T) > 1e-12 * std::max(1.0, T)) {
        throw DomainError("experiment: time grid must lie in [0, T] and end at T");
    }
    if (uses_impact(policy) && !(gamma > 0.0)) throw DomainError("experiment: gamma must be positive");
    if ((policy == Policy::Hjb || policy == Policy::BuySell) && grid.front() != 0.0) {
        throw DomainError("experiment: impact policies trade from t = 0");
    }
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

PenaltySummary summarize(std::span<const double> totals, std::size_t bins) {
    if (totals.empty()) throw DomainError("summarize: no values");
    if (bins < 1) throw DomainError("summarize: need at least one bin");
    PenaltySummary s;
    s.n = totals.size();
    const double n = static_cast<double>(s.n);
    s.mean = pairwise_sum(totals) / n;
    std::vector<double> dev(totals.size());
    std::transform(totals.begin(), totals.end(), dev.begin(), [&](double x) { return (x - s.mean) * (x - s.mean); });
    s.se = s.n > 1 ? std::sqrt(pairwise_sum(dev) / (n - 1.0) / n) : 0.0;

    std::vector<double> sorted(totals.begin(), totals.end());
    std::sort(sorted.begin(), sorted.end());
    s.median = quantile_sorted(sorted, 0.5);
    s.q05 = quantile_sorted(sorted, 0.05);
    s.q25 = quantile_sorted(sorted, 0.25);
    s.q75 = quantile_sorted(sorted, 0.75);
    s.q95 = quantile_sorted(sorted, 0.95);

    double lo = sorted.front();
    double hi = sorted.back();
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    s.bin_edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        s.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    }
    s.bin_edges.back() = hi;
    s.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double x : sorted) {
        const auto b = std::min(static_cast<std::size_t>((x - lo) / width), bins - 1);
        ++s.counts[b];
    }
    return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const double T = spec.drift.horizon();
    const ForecastSimulator sim(spec.latent, spec.schedule, spec.grid, spec.seed);
    ExperimentResult out;
    out.paths.reserve(spec.n_paths);
    ForecastPath path;

    switch (spec.policy) {
        case Policy::Exact:
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                const auto plan = exact_forecast_plan(spec.penalty, spec.drift, path.realized());
                out.paths.push_back(frictionless_record(plan.plan, spec, path.realized()));
            }
            break;
        case Policy::NoForecast: {
            const AveragedPenalty avg(spec.penalty, ProductionLaw::from(from_latent(spec.latent)));
            const auto nf = no_forecast_plan(avg, spec.drift);
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                out.paths.push_back(frictionless_record(nf.plan_for(path.realized(), T), spec, path.realized()));
            }
            break;
        }
        case Policy::Thresholds: {
            const auto tables =
                solve_xi_thresholds(spec.penalty, spec.latent, spec.schedule, spec.grid, spec.drift, spec.thresholds);
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                out.paths.push_back(
                    frictionless_record(apply_threshold_policy(tables, path), spec, path.realized()));
            }
            break;
        }
        case Policy::Hjb: {
            const ImpactParams ip(spec.gamma, spec.drift, spec.penalty);
            const auto sol = solve_hjb(ip, spec.latent, spec.schedule, spec.hjb);
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                const auto o = simulate_policy(sol, std::span<const ForecastPath>(&path, 1), ip).front();
                out.phi_max_hits += o.hit_phi_max ? 1 : 0;
                out.paths.push_back(impact_record(o, path.realized()));
            }
            break;
        }
        case Policy::BuySell: {
            const ImpactParams ip(spec.gamma, spec.drift, spec.penalty);
            const BuySellStrategy st(ip, spec.grid);
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                out.paths.push_back(impact_record(st.run(path), path.realized()));
            }
            break;
        }
        case Policy::NeverTrade:
            for (std::size_t i = 0; i < spec.n_paths; ++i) {
                sim.fill(i, path);
                out.paths.push_back(record(path.realized(), 0.0, 0.0, 0.0, spec.penalty.u(path.realized())));
            }
            break;
    }

    std::vector<double> totals(out.paths.size());
    std::transform(out.paths.begin(), out.paths.end(), totals.begin(), [](const PathRecord& r) { return r.total; });
    out.summary = summarize(totals, spec.histogram_bins);
    return out;
}

Comparison compare(std::vector<ExperimentSpec> specs, std::uint64_t seed) {
    if (specs.empty()) throw DomainError("compare: no experiments");
    const double T = specs.front().drift.horizon();
    for (const auto& s : specs) {
        if (std::abs(s.drift.horizon() - T) > 1e-12 * std::max(1.0, T)) {
            throw DomainError("compare: experiments have different horizons");
        }
        if (s.n_paths != specs.front().n_paths) throw DomainError("compare: experiments have different path counts");
    }
    Comparison c;
    for (auto& s : specs) {
        s.seed = seed;
        c.results.push_back(run_experiment(s));
    }
    const std::size_t n = specs.front().n_paths;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < c.results.size(); ++i) {
        for (std::size_t j = i + 1; j < c.results.size(); ++j) {
            for (std::size_t k = 0; k < n; ++k) d[k] = c.results[i].paths[k].total - c.results[j].paths[k].total;
            const auto s = summarize(d, 1);
            c.differences.push_back({i, j, s.mean, s.se});
        }
    }
    return c;
}

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_path_csv(std::ostream& out, const ExperimentResult& r) {
    out << "path,realized,sold,drift_loss,impact_cost,volume_penalty,total\n";
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
        const auto& p = r.paths[i];
        out << i << ',' << num(p.realized) << ',' << num(p.sold) << ',' << num(p.drift_loss) << ','
            << num(p.impact_cost) << ',' << num(p.volume_penalty) << ',' << num(p.total) << '\n';
    }
}

void write_summary(std::ostream& out, const PenaltySummary& s) {
    out << "n = " << s.n << '\n';
    out << "mean = " << num(s.mean) << '\n';
    out << "se = " << num(s.se) << '\n';
    out << "median = " << num(s.median) << '\n';
    out << "q05 = " << num(s.q05) << '\n';
    out << "q25 = " << num(s.q25) << '\n';
    out << "q75 = " << num(s.q75) << '\n';
    out << "q95 = " << num(s.q95) << '\n';
    out << "bin_edges =";
    for (double e : s.bin_edges) out << ' ' << num(e);
    out << "\ncounts =";
    for (auto c : s.counts) out << ' ' << c;
    out << '\n';
}

}  // namespace windtrade

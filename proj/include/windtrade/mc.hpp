#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "windtrade/drift.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/frictionless.hpp"
#include "windtrade/impact.hpp"
#include "windtrade/penalty.hpp"

namespace windtrade {

/// exact, no_forecast and thresholds trade without market impact and may sell
/// any positive remainder at the horizon; hjb, buy_sell and never_trade pay
/// the impact cost and have no terminal sale.
enum class Policy { Exact, NoForecast, Thresholds, Hjb, BuySell, NeverTrade };

std::string_view policy_name(Policy p);
/// Accepts the names returned by policy_name. Throws DomainError otherwise.
Policy parse_policy(std::string_view name);

struct ExperimentSpec {
    LatentParams latent;
    ThetaSchedule schedule;
    DriftCurve drift;
    PenaltyFunction penalty;
    double gamma = 1.0;
    Policy policy = Policy::NeverTrade;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    /// Simulation grid from 0 to the horizon. For thresholds every point but
    /// the last is an update time.
    std::vector<double> grid;
    ThresholdConfig thresholds{};
    HjbGrid hjb{};
    std::size_t histogram_bins = 50;

    /// Throws DomainError when the pieces do not fit together.
    void validate() const;
};

struct PathRecord {
    double realized;  ///< F_T
    double sold;      ///< phi_T including any terminal sale
    double drift_loss;
    double impact_cost;
    double volume_penalty;
    double total;
};

struct PenaltySummary {
    std::size_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    double median = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
};

struct ExperimentResult {
    PenaltySummary summary;
    std::vector<PathRecord> paths;
    std::size_t phi_max_hits = 0;  ///< hjb paths that reached the top of the phi grid
};

/// Sum by recursive halving; the result does not depend on how the input
/// was produced, only on its order.
double pairwise_sum(std::span<const double> v);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

PenaltySummary summarize(std::span<const double> totals, std::size_t bins = 50);

/// Deterministic given spec.seed: path i always uses the same substream.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct PairedDifference {
    std::size_t first;
    std::size_t second;
    double mean;  ///< mean of total(first) - total(second)
    double se;    ///< paired standard error
};

struct Comparison {
    std::vector<ExperimentResult> results;
    std::vector<PairedDifference> differences;  ///< every pair i < j
};

/// Runs every spec with the common seed so that path i sees the same
/// randomness under every policy. Horizons and path counts must agree.
Comparison compare(std::vector<ExperimentSpec> specs, std::uint64_t seed);

/// CSV with header path,realized,sold,drift_loss,impact_cost,volume_penalty,total.
void write_path_csv(std::ostream& out, const ExperimentResult& r);
/// key = value lines.
void write_summary(std::ostream& out, const PenaltySummary& s);

}  // namespace windtrade

#pragma once

#include <cstddef>
#include <vector>

#include "windtrade/drift.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/law.hpp"
#include "windtrade/penalty.hpp"

namespace windtrade {

/// Cumulative sold quantity as a right-continuous step function. positions[i]
/// is held on [times[i], times[i+1]); the position before times[0] is zero.
/// The last entry is the position at the horizon, before terminal_lump is sold.
struct TradePlan {
    std::vector<double> times;
    std::vector<double> positions;
    double terminal_lump = 0.0;

    double final_position() const { return positions.back(); }
};

/// Throws DomainError unless times are ascending, positions are nonnegative and
/// nondecreasing and the lump is nonnegative.
void validate_plan(const TradePlan& plan);

struct FrictionlessCost {
    double drift_loss;      ///< integral of phi_t mu_t
    double volume_penalty;  ///< u-bar(F_T - phi_T)
    double total() const { return drift_loss + volume_penalty; }
};

/// Realized objective of a plan without market impact.
FrictionlessCost frictionless_cost(const TradePlan& plan, const DriftCurve& d, const PenaltyFunction& p,
                                   double realized);

struct ExactPlan {
    TradePlan plan;
    double value;
    double t_star;
    double block;  ///< quantity sold at t_star (zero when the sale waits for T)
};

/// Optimal plan when F_T is known from the start.
ExactPlan exact_forecast_plan(const PenaltyFunction& p, const DriftCurve& d, double realized,
                              std::size_t resolution = 2001);

struct NoForecastPlan {
    double t_star;
    double block;
    double value;

    /// Block at t_star, then any positive remainder sold at the horizon.
    TradePlan plan_for(double realized, double horizon) const;
};

/// Optimal plan when nothing beyond the law of F_T is known.
NoForecastPlan no_forecast_plan(const AveragedPenalty& avg, const DriftCurve& d, std::size_t resolution = 2001);

struct ThresholdConfig {
    std::size_t x_nodes = 201;
    std::size_t m_nodes = 801;
    std::size_t hermite_nodes = 64;
    double tail_probability = 1e-5;
    double tolerance = 1e-10;    ///< bisection tolerance on xi
    double xi_max = 0.0;         ///< 0 picks 2 - I(sum of drift increments)
    std::size_t max_doublings = 6;
};

/// Thresholds xi_k(x) of the discrete-update problem, one table per update
/// time t_0 < ... < t_{n-1}; X at t_0 is 1.
class ThresholdTables {
public:
    ThresholdTables(std::vector<double> times, std::vector<double> log_x, std::vector<std::vector<double>> xi,
                    std::vector<double> remaining_drift, double xi_max);

    /// Update times t_0..t_n, the last one being the horizon.
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& log_x() const noexcept { return log_x_; }
    const std::vector<double>& table(std::size_t k) const { return xi_.at(k); }
    std::size_t stages() const noexcept { return xi_.size(); }
    /// Sum of drift increments from t_k to the horizon.
    double remaining_drift(std::size_t k) const { return remaining_drift_.at(k); }
    double xi_max() const noexcept { return xi_max_; }

    /// xi_k at latent level x, linear in log x and clamped at the grid ends.
    double xi(std::size_t k, double x) const;

private:
    std::vector<double> times_;
    std::vector<double> log_x_;
    std::vector<std::vector<double>> xi_;
    std::vector<double> remaining_drift_;
    double xi_max_;
};

/// Backward induction for the thresholds. Requires mu <= 0 on [0, T].
ThresholdTables solve_xi_thresholds(const PenaltyFunction& p, const LatentParams& lat, const ThetaSchedule& s,
                                    std::vector<double> update_times, const DriftCurve& d,
                                    const ThresholdConfig& config = {});

/// Running-maximum policy along a path sampled at the update times; the
/// remainder at the horizon is sold as a lump.
TradePlan apply_threshold_policy(const ThresholdTables& tables, const ForecastPath& path);

}  // namespace windtrade

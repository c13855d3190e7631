#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "windtrade/drift.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/frictionless.hpp"
#include "windtrade/law.hpp"
#include "windtrade/penalty.hpp"

namespace windtrade {

/// Trading problem with quadratic market impact: the cost of a rate psi over
/// dt is gamma psi^2 dt / 2, on top of the drift loss and the volume penalty.
struct ImpactParams {
    ImpactParams(double gamma, DriftCurve drift, PenaltyFunction penalty);

    double gamma;
    DriftCurve drift;
    PenaltyFunction penalty;
};

/// Deterministic sell-only schedule for a known production F_T.
struct PontryaginPlan {
    std::vector<double> times;
    std::vector<double> rates;      ///< psi at each time
    std::vector<double> positions;  ///< phi at each time
    double terminal_position;       ///< root of the fixed-point equation
    double marginal;                ///< u'(F_T - terminal_position)
    double stop_time;               ///< after this time the rate is zero
    double value;                   ///< drift loss + impact cost + penalty

    double gamma;
    DriftCurve drift;

    /// Exact rate (u'(F_T - phi_T) - remaining drift)^+ / gamma.
    double rate(double t) const;
};

/// Solves for the terminal position by bisection on the scalar fixed-point
/// equation, then integrates rate, position and objective on a uniform grid.
PontryaginPlan pontryagin_plan(const ImpactParams& ip, double realized, std::size_t ode_nodes = 2001,
                               double tolerance = 1e-10);

/// Same schedule with u replaced by its average over the production law,
/// targeting E[F_T]. The value is the expected cost.
PontryaginPlan pontryagin_no_forecast_plan(const ImpactParams& ip, const ProductionLaw& law,
                                           std::size_t ode_nodes = 2001, double tolerance = 1e-10);

struct HjbGrid {
    std::size_t t_nodes = 121;
    std::size_t phi_nodes = 151;
    std::size_t y_nodes = 151;
    double phi_max = 1.5;
    double tail_probability = 1e-5;
    double safety = 0.9;               ///< fraction of the monotonicity bound used per sub-step
    std::size_t max_substeps = 2'000'000;
    bool keep_history = true;          ///< store every t slice, not only t = 0
};

/// Value function of the sell-only problem with continuous forecast updates
/// on a (t, phi, y = log x) tensor grid.
class HjbSolution {
public:
    HjbSolution(std::vector<double> t_grid, std::vector<double> phi_grid, std::vector<double> y_grid,
                std::vector<double> w, double gamma, std::size_t substeps);

    const std::vector<double>& t_grid() const noexcept { return t_; }
    const std::vector<double>& phi_grid() const noexcept { return phi_; }
    const std::vector<double>& y_grid() const noexcept { return y_; }
    std::vector<double> x_grid() const;

    /// Number of stored t slices: t_grid().size(), or 1 without history.
    std::size_t slices() const noexcept { return w_.size() / (phi_.size() * y_.size()); }
    /// Raw values, slice-major then phi then y.
    std::span<const double> values() const noexcept { return w_; }
    double w(std::size_t i, std::size_t k, std::size_t j) const { return w_[index(i, k, j)]; }
    /// (-D_phi^+ w / gamma)^+, zero on the last phi node.
    double psi(std::size_t i, std::size_t k, std::size_t j) const;
    /// Full policy tensor in the layout of values().
    std::vector<double> policy() const;

    /// Bilinear in (phi, log x) on slice i; clamped to the grid.
    double value(std::size_t i, double phi, double x) const;
    /// Policy interpolated linearly in t, phi and log x; clamped to the grid.
    double rate(double t, double phi, double x) const;

    double gamma() const noexcept { return gamma_; }
    std::size_t substeps() const noexcept { return substeps_; }

private:
    std::size_t index(std::size_t i, std::size_t k, std::size_t j) const {
        return (i * phi_.size() + k) * y_.size() + j;
    }
    double slice_rate(std::size_t i, double phi, double y) const;

    std::vector<double> t_;
    std::vector<double> phi_;
    std::vector<double> y_;
    std::vector<double> w_;
    double gamma_;
    std::size_t substeps_;
};

/// Explicit monotone finite-difference scheme, marching backward from the
/// horizon with adaptive sub-steps. sigma_t^2 is the decrease of theta over
/// each t-grid interval; X at t = 0 is 1. When theta(T) > 0 the terminal
/// condition averages u(f_prod(x e^{jump}) - phi) over the terminal jump.
/// Throws CflError when the sub-step budget would be exceeded.
HjbSolution solve_hjb(const ImpactParams& ip, const LatentParams& lat, const ThetaSchedule& s,
                      const HjbGrid& grid = {});

/// Realized outcome of one trajectory under a trading rate rule.
struct ImpactOutcome {
    TradePlan plan;             ///< positions sampled at the path times; no terminal lump
    std::vector<double> rates;  ///< rate used on [t_k, t_k+1)
    double drift_loss = 0.0;
    double impact_cost = 0.0;
    double volume_penalty = 0.0;
    bool hit_phi_max = false;

    double total() const { return drift_loss + impact_cost + volume_penalty; }
};

/// Rate as a function of (step index, time, position, latent level).
using RateRule = std::function<double(std::size_t, double, double, double)>;

/// Forward Euler on the path's grid. The drift loss is trapezoidal in time,
/// the impact cost sums psi^2 dt over the steps and the volume penalty is
/// u(F_T - phi_T). With sell_only, negative rates are clipped to zero.
ImpactOutcome run_rate_rule(const RateRule& rule, const ForecastPath& path, const ImpactParams& ip,
                            bool sell_only = true, double phi_max = 0.0);

/// HJB policy along each path. Paths must start at 0, end at the horizon
/// and have no step longer than the HJB t-grid step.
std::vector<ImpactOutcome> simulate_policy(const HjbSolution& sol, std::span<const ForecastPath> paths,
                                           const ImpactParams& ip);

/// Explicit buy-and-sell strategy for a quadratic penalty u = kappa x^2 / 2,
/// obtained from the kappa = 1 formula with gamma and mu divided by kappa.
/// Precomputes the weighted drift integrals on a fixed time grid.
class BuySellStrategy {
public:
    BuySellStrategy(const ImpactParams& ip, std::vector<double> times);

    /// psi = (F_t - phi_t - J(t) / g) / (g + T - t) with g = gamma / kappa.
    double rate(std::size_t step, double forecast, double phi) const;
    ImpactOutcome run(const ForecastPath& path) const;

    const std::vector<double>& times() const noexcept { return times_; }
    /// J(t_k) = integral over [t_k, T] of (g + T - s) mu_s / kappa ds.
    double weighted_drift(std::size_t step) const { return weighted_.at(step); }

private:
    ImpactParams ip_;
    std::vector<double> times_;
    std::vector<double> weighted_;
    double scaled_gamma_;
};

ImpactOutcome buy_sell_plan(const ImpactParams& ip, const ForecastPath& path);

}  // namespace windtrade

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windtrade/dist.hpp"
#include "windtrade/forecast.hpp"

namespace windtrade {

/// Normalized production observations, sorted ascending.
class ProductionSample {
public:
    /// Takes every `stride`-th observation of a time-ordered series, then sorts.
    explicit ProductionSample(std::vector<double> values, std::size_t stride = 1);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<double> values_;
};

/// Largest order statistic F_(k) with k / N <= alpha (k is 1-based).
double empirical_quantile(const ProductionSample& s, double alpha);

struct ProductionFitOptions {
    std::size_t levels = 100;
    std::optional<TruncatedLogNormal> init;
    std::size_t max_iterations = 5000;
    std::size_t restarts = 3;
};

struct ProductionFit {
    TruncatedLogNormal law;
    double objective;
    std::size_t iterations;
    bool converged;
    std::vector<std::string> warnings;
};

/// Sum of squared differences between empirical and model quantiles on the
/// levels P0 + (l - 1) / L * (1 - P1 - P0), l = 1..L, of the candidate law.
/// Levels below 1/N use the smallest order statistic.
double production_objective(const ProductionSample& s, const TruncatedLogNormal& law, std::size_t levels);

/// Throws FitError for a sample with no observation strictly inside (0, 1).
ProductionFit fit_production(const ProductionSample& s, const ProductionFitOptions& options = {});

/// Empirical forecast-error variance per horizon.
struct VarianceTargets {
    std::vector<double> horizons;   ///< strictly ascending
    std::vector<double> variances;  ///< >= 0

    VarianceTargets() = default;
    VarianceTargets(std::vector<double> horizons, std::vector<double> variances);
};

struct ForecastErrorPair {
    double forecast;
    double realized;
    double horizon;
};

struct BucketOptions {
    double width = 0.25;  ///< buckets are centred on multiples of this
    std::size_t min_count = 30;
};

struct VarianceEstimate {
    VarianceTargets targets;
    std::vector<std::size_t> counts;
    std::vector<std::string> warnings;
};

/// Unbiased sample variance of forecast - realized in each horizon bucket.
/// Buckets with fewer than `min_count` pairs are dropped with a warning.
VarianceEstimate error_variances_from_data(std::span<const ForecastErrorPair> pairs,
                                           const BucketOptions& options = {});

/// theta with error_variance(theta) = v; targets at or above the unconditional
/// variance give the cap.
double invert_error_variance(const ForecastErrorModel& phi, double v);

/// Tabulated schedule on t = horizon - h, one knot per target, after a
/// pool-adjacent-violators pass that makes theta nondecreasing in h.
ThetaSchedule fit_theta_nonparametric(const LatentParams& lat, const VarianceTargets& targets, double horizon);

struct ThetaFitOptions {
    std::size_t starts = 8;
    std::uint64_t seed = 0;
    std::optional<double> tau_star;  ///< overrides the data-driven choice
    double default_tau_star = 120.0;
    std::size_t max_iterations = 5000;
};

struct ThetaFit {
    ThetaSchedule::Parametric params;
    double objective;
    bool converged;
};

/// Least-squares fit of (sigma0, eta, b) to the targets. tau_star is the
/// smallest horizon whose target reaches the unconditional variance.
ThetaFit fit_theta_parametric(const LatentParams& lat, const VarianceTargets& targets,
                              const ThetaFitOptions& options = {});

/// The least-squares objective used by fit_theta_parametric.
double theta_objective(const ForecastErrorModel& phi, const VarianceTargets& targets,
                       const ThetaSchedule::Parametric& p);

}  // namespace windtrade

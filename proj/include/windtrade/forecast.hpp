#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "windtrade/dist.hpp"
#include "windtrade/quadrature.hpp"

namespace windtrade {

/// Below this remaining variance the forecast is the power curve itself.
inline constexpr double kThetaZero = 1e-14;

/// Conditional expectation E[f_prod(x * exp(sqrt(theta) N - theta / 2))].
double g(const PowerCurve& curve, double x, double theta);

/// Remaining log-variance theta(t) of the latent wind between t and delivery,
/// including the unpredictable terminal jump variance b^2.
class ThetaSchedule {
public:
    struct Parametric {
        double sigma0;
        double eta;
        double b;
        double tau_star;  ///< theta is the cap for horizons T - t >= tau_star
    };
    struct Tabulated {
        std::vector<double> times;   ///< strictly ascending knots
        std::vector<double> values;  ///< nonincreasing, >= 0
    };

    static ThetaSchedule parametric(Parametric p, double horizon, double cap);
    static ThetaSchedule tabulated(std::vector<double> times, std::vector<double> values, double horizon,
                                   double cap);
    /// sigma^2 (T - t) with no jump; the usual constant-volatility setup.
    static ThetaSchedule constant_volatility(double sigma, double horizon, double cap);

    double operator()(double t) const;

    double horizon() const noexcept { return horizon_; }
    double cap() const noexcept { return cap_; }
    bool is_parametric() const noexcept { return std::holds_alternative<Parametric>(spec_); }
    const Parametric& as_parametric() const { return std::get<Parametric>(spec_); }
    const Tabulated& as_tabulated() const { return std::get<Tabulated>(spec_); }

    /// Time range on which the schedule may be evaluated.
    double first_time() const noexcept;
    double last_time() const noexcept;

private:
    ThetaSchedule(std::variant<Parametric, Tabulated> spec, double horizon, double cap);

    std::variant<Parametric, Tabulated> spec_;
    double horizon_;
    double cap_;
};

inline double theta_at(const ThetaSchedule& s, double t) { return s(t); }

/// Uncapped parametric remaining variance at horizon tau = T - t.
double parametric_theta(const ThetaSchedule::Parametric& p, double tau);

/// Forecast-error variance phi(theta) = E[(F_t - F_T)^2] for a given remaining
/// variance, with the production law fixed.
class ForecastErrorModel {
public:
    explicit ForecastErrorModel(const LatentParams& lat, std::size_t hermite_nodes = 128);

    /// theta is clamped to [0, nu_x^2]; negative theta throws DomainError.
    double operator()(double theta) const;

    const LatentParams& latent() const noexcept { return lat_; }
    double second_moment() const noexcept { return second_moment_; }
    double mean() const noexcept { return mean_; }
    double unconditional_variance() const noexcept { return second_moment_ - mean_ * mean_; }

private:
    LatentParams lat_;
    GaussHermiteRule rule_;
    double second_moment_;
    double mean_;
};

double error_variance(const LatentParams& lat, double theta, std::size_t hermite_nodes = 128);

/// One simulated trajectory of the latent wind and of the forecast.
struct ForecastPath {
    std::vector<double> times;
    std::vector<double> x_values;  ///< X at each time; the last entry includes the jump
    std::vector<double> f_values;  ///< F at each time; the last entry is realized production

    double realized() const { return f_values.back(); }
};

/// Exact simulation of (X, F) on a fixed grid ending at the horizon.
/// Path i uses its own substream keyed by (seed, i), so any subset of paths
/// can be regenerated independently.
class ForecastSimulator {
public:
    ForecastSimulator(const LatentParams& lat, const ThetaSchedule& schedule, std::vector<double> grid,
                      std::uint64_t seed);

    ForecastPath path(std::size_t index) const;

    /// Fills `path` in place, reusing its storage.
    void fill(std::size_t index, ForecastPath& path) const;

    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> theta_on_grid() const noexcept { return theta_; }

private:
    PowerCurve curve_;
    std::vector<double> grid_;
    std::vector<double> theta_;
    std::vector<double> step_sd_;  ///< log-sd of each X increment
    std::uint64_t seed_;
};

std::vector<ForecastPath> simulate_paths(const LatentParams& lat, const ThetaSchedule& schedule,
                                         std::vector<double> grid, std::size_t n_paths, std::uint64_t seed);

/// Uniform grid t_0 = start, ..., t_steps = end.
std::vector<double> uniform_grid(double start, double end, std::size_t steps);

}  // namespace windtrade

#include "windtrade/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windtrade/errors.hpp"
#include "windtrade/normal.hpp"
#include "windtrade/rng.hpp"

namespace windtrade {

namespace {

// Phi(u) - Phi(v) for u >= v without losing digits in the upper tail.
double normal_mass(double u, double v) {
    if (v > 0.0) return normal_cdf(-v) - normal_cdf(-u);
    return normal_cdf(u) - normal_cdf(v);
}

constexpr double kTimeSlack = 1e-9;

// Above this theta / (revealed variance) the integrand of E[g^2] is smooth on
// the scale of the Hermite nodes.
constexpr double kSmoothRatio = 0.1;
constexpr int kKnotPanels = 10;

}  // namespace

double g(const PowerCurve& curve, double x, double theta) {
    if (!(x > 0.0)) throw DomainError("g: x must be positive");
    if (!(theta >= 0.0)) throw DomainError("g: theta must be nonnegative");
    if (theta < kThetaZero) return curve(x);
    const double sd = std::sqrt(theta);
    const double la = std::log(x / curve.x_min());
    const double lb = std::log(x / curve.x_max());
    const double dpa = (la + 0.5 * theta) / sd;
    const double dpb = (lb + 0.5 * theta) / sd;
    const double dma = (la - 0.5 * theta) / sd;
    const double dmb = (lb - 0.5 * theta) / sd;
    // x * P-tilde(a < Y <= b) - a * P(a < Y <= b) + D * P(Y > b), regrouped.
    const double value = (x * normal_mass(dpa, dpb) - curve.x_min() * normal_mass(dma, dmb)) / curve.width() +
                         normal_cdf(dmb);
    return std::clamp(value, 0.0, 1.0);
}

double parametric_theta(const ThetaSchedule::Parametric& p, double tau) {
    const double b2 = p.b * p.b;
    const double s2 = p.sigma0 * p.sigma0;
    if (p.eta == 0.0) return b2 + s2 * tau;
    return b2 + s2 * std::expm1(2.0 * p.eta * tau) / (2.0 * p.eta);
}

ThetaSchedule::ThetaSchedule(std::variant<Parametric, Tabulated> spec, double horizon, double cap)
    : spec_(std::move(spec)), horizon_(horizon), cap_(cap) {
    if (!std::isfinite(horizon)) throw DomainError("ThetaSchedule: horizon must be finite");
    if (!(cap > 0.0)) throw DomainError("ThetaSchedule: variance cap must be positive");
}

ThetaSchedule ThetaSchedule::parametric(Parametric p, double horizon, double cap) {
    if (!(p.sigma0 >= 0.0) || !(p.b >= 0.0) || !std::isfinite(p.eta) || !(p.tau_star > 0.0)) {
        throw DomainError("ThetaSchedule: parametric requires sigma0 >= 0, b >= 0, finite eta, tau_star > 0");
    }
    return ThetaSchedule(p, horizon, cap);
}

ThetaSchedule ThetaSchedule::tabulated(std::vector<double> times, std::vector<double> values, double horizon,
                                       double cap) {
    if (times.empty() || times.size() != values.size()) {
        throw DomainError("ThetaSchedule: tabulated knots and values must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(values[i] >= 0.0)) throw DomainError("ThetaSchedule: tabulated theta must be nonnegative");
        if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("ThetaSchedule: knots must be ascending");
        if (i > 0 && values[i] > values[i - 1] * (1.0 + 1e-12) + 1e-15) {
            throw DomainError("ThetaSchedule: tabulated theta must be nonincreasing in time");
        }
        values[i] = std::min(values[i], cap);
    }
    if (times.back() > horizon + kTimeSlack) throw DomainError("ThetaSchedule: knot beyond the horizon");
    return ThetaSchedule(Tabulated{std::move(times), std::move(values)}, horizon, cap);
}

ThetaSchedule ThetaSchedule::constant_volatility(double sigma, double horizon, double cap) {
    return parametric({sigma, 0.0, 0.0, std::numeric_limits<double>::infinity()}, horizon, cap);
}

double ThetaSchedule::first_time() const noexcept {
    if (const auto* tab = std::get_if<Tabulated>(&spec_)) return tab->times.front();
    return -std::numeric_limits<double>::infinity();
}

double ThetaSchedule::last_time() const noexcept {
    if (const auto* tab = std::get_if<Tabulated>(&spec_)) return tab->times.back();
    return horizon_;
}

double ThetaSchedule::operator()(double t) const {
    if (!(t <= horizon_ + kTimeSlack)) {
        throw DomainError("theta_at: t=" + std::to_string(t) + " beyond horizon " + std::to_string(horizon_));
    }
    if (const auto* p = std::get_if<Parametric>(&spec_)) {
        const double tau = std::max(horizon_ - t, 0.0);
        if (tau >= p->tau_star) return cap_;
        return std::min(parametric_theta(*p, tau), cap_);
    }
    const auto& tab = std::get<Tabulated>(spec_);
    const double lo = tab.times.front();
    const double hi = tab.times.back();
    const double scale = std::max(1.0, std::abs(hi));
    if (t < lo - kTimeSlack * scale || t > hi + kTimeSlack * scale) {
        throw DomainError("theta_at: t=" + std::to_string(t) + " outside tabulated range [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
    }
    if (t <= lo) return tab.values.front();
    if (t >= hi) return tab.values.back();
    const auto it = std::upper_bound(tab.times.begin(), tab.times.end(), t);
    const auto k = static_cast<std::size_t>(it - tab.times.begin());
    const double w = (t - tab.times[k - 1]) / (tab.times[k] - tab.times[k - 1]);
    return std::clamp((1.0 - w) * tab.values[k - 1] + w * tab.values[k], 0.0, cap_);
}

ForecastErrorModel::ForecastErrorModel(const LatentParams& lat, std::size_t hermite_nodes)
    : lat_(lat), rule_(hermite_nodes), second_moment_(second_moment_fprod(lat)), mean_(mean_fprod(lat)) {}

double ForecastErrorModel::operator()(double theta) const {
    if (!(theta >= 0.0)) throw DomainError("error_variance: theta must be nonnegative");
    const double cap = lat_.variance();
    theta = std::min(theta, cap);
    if (theta < kThetaZero) return 0.0;
    const double known = cap - theta;  // log-variance already revealed at t
    const double sd = std::sqrt(known);
    const PowerCurve& curve = lat_.curve();
    auto g2 = [&](double z) {
        const double v = g(curve, std::exp(sd * z - 0.5 * known), theta);
        return v * v;
    };
    double e_g2 = 0.0;
    if (theta >= kSmoothRatio * known) {
        e_g2 = rule_.expectation(g2);
    } else {
        // g(., theta) bends over a width sqrt(theta) around each knot; resolve
        // those windows with narrow panels.
        const double w = std::sqrt(theta / known);
        std::vector<double> cuts;
        for (double knot : {curve.x_min(), curve.x_max()}) {
            const double zc = (std::log(knot) + 0.5 * known) / sd;
            for (int k = -kKnotPanels; k <= kKnotPanels; ++k) cuts.push_back(zc + k * w);
        }
        e_g2 = gaussian_expectation(g2, cuts);
    }
    return std::max(second_moment_ - e_g2, 0.0);
}

double error_variance(const LatentParams& lat, double theta, std::size_t hermite_nodes) {
    return ForecastErrorModel(lat, hermite_nodes)(theta);
}

ForecastSimulator::ForecastSimulator(const LatentParams& lat, const ThetaSchedule& schedule,
                                     std::vector<double> grid, std::uint64_t seed)
    : curve_(lat.curve()), grid_(std::move(grid)), seed_(seed) {
    if (grid_.size() < 2) throw DomainError("simulate_paths: grid needs at least two points");
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (!(grid_[i] > grid_[i - 1])) throw DomainError("simulate_paths: grid must be strictly ascending");
    }
    const double horizon = schedule.horizon();
    if (std::abs(grid_.back() - horizon) > kTimeSlack * std::max(1.0, std::abs(horizon))) {
        throw DomainError("simulate_paths: grid must end at the horizon");
    }
    grid_.back() = horizon;
    theta_.resize(grid_.size());
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) theta_[i] = schedule(grid_[i]);
    // The terminal value is realized production; its remaining variance is zero.
    theta_.back() = 0.0;
    step_sd_.resize(grid_.size() - 1);
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
        const double next = (k + 2 == grid_.size()) ? 0.0 : theta_[k + 1];
        const double dv = theta_[k] - next;
        if (dv < -1e-12) {
            throw DomainError("simulate_paths: theta increases between t=" + std::to_string(grid_[k]) +
                              " and t=" + std::to_string(grid_[k + 1]));
        }
        step_sd_[k] = std::sqrt(std::max(dv, 0.0));
    }
}

void ForecastSimulator::fill(std::size_t index, ForecastPath& path) const {
    const std::size_t n = grid_.size();
    path.times.assign(grid_.begin(), grid_.end());
    path.x_values.resize(n);
    path.f_values.resize(n);
    auto rng = substream(seed_, index, StreamTag::Forecast);
    std::normal_distribution<double> normal;
    double log_x = 0.0;
    path.x_values[0] = 1.0;
    path.f_values[0] = g(curve_, 1.0, theta_[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double sd = step_sd_[k];
        log_x += sd * normal(rng) - 0.5 * sd * sd;
        const double x = std::exp(log_x);
        path.x_values[k + 1] = x;
        path.f_values[k + 1] = (k + 2 == n) ? curve_(x) : g(curve_, x, theta_[k + 1]);
    }
}

ForecastPath ForecastSimulator::path(std::size_t index) const {
    ForecastPath p;
    fill(index, p);
    return p;
}

std::vector<ForecastPath> simulate_paths(const LatentParams& lat, const ThetaSchedule& schedule,
                                         std::vector<double> grid, std::size_t n_paths, std::uint64_t seed) {
    ForecastSimulator sim(lat, schedule, std::move(grid), seed);
    std::vector<ForecastPath> out(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) sim.fill(i, out[i]);
    return out;
}

std::vector<double> uniform_grid(double start, double end, std::size_t steps) {
    if (steps == 0 || !(end > start)) throw DomainError("uniform_grid: need steps >= 1 and end > start");
    std::vector<double> grid(steps + 1);
    const double h = (end - start) / static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) grid[i] = start + h * static_cast<double>(i);
    grid.back() = end;
    return grid;
}

}  // namespace windtrade

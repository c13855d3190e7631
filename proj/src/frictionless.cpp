#include "windtrade/frictionless.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "windtrade/errors.hpp"
#include "windtrade/normal.hpp"
#include "windtrade/quadrature.hpp"

namespace windtrade {

void validate_plan(const TradePlan& plan) {
    if (plan.times.empty() || plan.times.size() != plan.positions.size()) {
        throw DomainError("TradePlan: times and positions must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < plan.times.size(); ++i) {
        if (i > 0 && !(plan.times[i] > plan.times[i - 1])) throw DomainError("TradePlan: times must ascend");
        if (!(plan.positions[i] >= 0.0)) throw DomainError("TradePlan: positions must be nonnegative");
        if (i > 0 && plan.positions[i] < plan.positions[i - 1]) {
            throw DomainError("TradePlan: positions must be nondecreasing");
        }
    }
    if (!(plan.terminal_lump >= 0.0)) throw DomainError("TradePlan: terminal lump must be nonnegative");
}

FrictionlessCost frictionless_cost(const TradePlan& plan, const DriftCurve& d, const PenaltyFunction& p,
                                   double realized) {
    double drift = 0.0;
    for (std::size_t i = 0; i + 1 < plan.times.size(); ++i) {
        drift += plan.positions[i] * d.integral(plan.times[i], plan.times[i + 1]);
    }
    return {drift, p.u(realized - plan.final_position() - plan.terminal_lump)};
}

namespace {

TradePlan block_plan(double t_star, double block, double horizon, double lump) {
    TradePlan plan;
    if (t_star > 0.0) {
        plan.times = {0.0, t_star, horizon};
        plan.positions = {0.0, block, block};
    } else {
        plan.times = {0.0, horizon};
        plan.positions = {block, block};
    }
    plan.terminal_lump = lump;
    return plan;
}

}  // namespace

ExactPlan exact_forecast_plan(const PenaltyFunction& p, const DriftCurve& d, double realized,
                              std::size_t resolution) {
    if (!(realized >= 0.0 && realized <= 1.0)) throw DomainError("exact_forecast_plan: F_T must lie in [0, 1]");
    const double T = d.horizon();
    const DriftMinimum dm = drift_minimum(d, resolution);
    if (dm.m_star < 0.0) {
        const double block = std::max(0.0, realized - p.inv_du(dm.m_star));
        const double lump = std::max(0.0, realized - block);
        return {block_plan(dm.t_star, block, T, lump), realized * dm.m_star - p.v(dm.m_star), dm.t_star, block};
    }
    return {block_plan(T, 0.0, T, realized), p.u(0.0), T, 0.0};
}

TradePlan NoForecastPlan::plan_for(double realized, double horizon) const {
    if (block == 0.0) return block_plan(horizon, 0.0, horizon, realized);
    return block_plan(t_star, block, horizon, std::max(0.0, realized - block));
}

NoForecastPlan no_forecast_plan(const AveragedPenalty& avg, const DriftCurve& d, std::size_t resolution) {
    const DriftMinimum dm = drift_minimum(d, resolution);
    const double mean = avg.law().mean();
    if (dm.m_star < 0.0) {
        const double block = std::max(0.0, mean - avg.inverse_derivative(dm.m_star));
        return {dm.t_star, block, mean * dm.m_star - avg.conjugate(dm.m_star)};
    }
    return {d.horizon(), 0.0, avg.value(mean)};
}

ThresholdTables::ThresholdTables(std::vector<double> times, std::vector<double> log_x,
                                 std::vector<std::vector<double>> xi, std::vector<double> remaining_drift,
                                 double xi_max)
    : times_(std::move(times)),
      log_x_(std::move(log_x)),
      xi_(std::move(xi)),
      remaining_drift_(std::move(remaining_drift)),
      xi_max_(xi_max) {
    if (log_x_.size() < 2) throw DomainError("ThresholdTables: need at least two grid nodes");
    if (times_.size() != xi_.size() + 1 || remaining_drift_.size() != xi_.size()) {
        throw DomainError("ThresholdTables: inconsistent stage count");
    }
}

namespace {

struct LogGridPosition {
    std::size_t j;
    double a;
};

LogGridPosition locate(double y, double lo, double dy, std::size_t n) {
    const double p = std::clamp((y - lo) / dy, 0.0, static_cast<double>(n - 1));
    const auto j = std::min(static_cast<std::size_t>(p), n - 2);
    return {j, p - static_cast<double>(j)};
}

}  // namespace

double ThresholdTables::xi(std::size_t k, double x) const {
    const auto& tab = xi_.at(k);
    const double dy = log_x_[1] - log_x_[0];
    const auto pos = locate(std::log(x), log_x_.front(), dy, log_x_.size());
    return (1.0 - pos.a) * tab[pos.j] + pos.a * tab[pos.j + 1];
}

namespace {

struct BracketFailure : std::runtime_error {
    BracketFailure() : std::runtime_error("threshold bracket failure") {}
};

// H_k(x_i, m) = h_k(x_i, max(m, xi_k(x_i))) on a common linear m grid. Below
// the threshold the value is the remaining drift; the threshold itself acts as
// an extra breakpoint of the piecewise-linear interpolant.
struct StageTable {
    double target = 0.0;
    double dm = 0.0;
    std::size_t m_nodes = 0;
    std::vector<double> xi;
    std::vector<double> values;

    double at(std::size_t i, double m) const {
        if (m < xi[i]) return target;
        const auto j = std::min(static_cast<std::size_t>(m / dm), m_nodes - 2);
        const double* v = values.data() + i * m_nodes;
        const double left = static_cast<double>(j) * dm;
        if (left < xi[i]) {
            const double w = (m - xi[i]) / (left + dm - xi[i]);
            return (1.0 - w) * target + w * v[j + 1];
        }
        const double w = (m - left) / dm;
        return (1.0 - w) * v[j] + w * v[j + 1];
    }
};

class ThresholdSolver {
public:
    ThresholdSolver(const PenaltyFunction& p, const LatentParams& lat, const ThresholdConfig& cfg)
        : p_(p), curve_(lat.curve()), cfg_(cfg), rule_(cfg.hermite_nodes) {}

    void set_grid(double lo, double dy, std::size_t n) {
        lo_ = lo;
        dy_ = dy;
        log_x_.resize(n);
        for (std::size_t i = 0; i < n; ++i) log_x_[i] = lo + dy * static_cast<double>(i);
    }

    const std::vector<double>& log_x() const { return log_x_; }

    // Stage n-1: h(x, m) = E[u-bar'(f(X_T) - m)] with log-variance `delta`.
    StageTable terminal(double delta, double target, double xi_max) const {
        auto h = [&](std::size_t i, double m) {
            const double x = std::exp(log_x_[i]);
            if (delta < kThetaZero) return p_.du_bar(curve_(x) - m);
            const double s = std::sqrt(delta);
            auto z_of = [&](double level) { return (std::log(level / x) + 0.5 * delta) / s; };
            double cuts[3] = {z_of(curve_.x_min()), z_of(curve_.x_max()), 0.0};
            std::size_t n_cuts = 2;
            if (m > 0.0 && m < 1.0) cuts[n_cuts++] = z_of(curve_.x_min() + m * curve_.width());
            return gaussian_expectation(
                [&](double z) { return p_.du_bar(curve_(x * std::exp(s * z - 0.5 * delta)) - m); },
                std::span<const double>(cuts, n_cuts));
        };
        return build(h, target, xi_max);
    }

    // Stage k < n-1: h_k(x, m) = E[H_{k+1}(X', m)], X' = x exp(sqrt(delta) N - delta / 2).
    StageTable intermediate(const StageTable& next, double delta, double target, double xi_max) const {
        const std::size_t n = log_x_.size();
        if (delta < kThetaZero) {
            return build([&](std::size_t i, double m) { return next.at(i, m); }, target, xi_max);
        }
        const double s = std::sqrt(delta);
        const std::size_t q = rule_.size();
        std::vector<LogGridPosition> pos(n * q);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < q; ++r) {
                pos[i * q + r] = locate(log_x_[i] + s * rule_.nodes()[r] - 0.5 * delta, lo_, dy_, n);
            }
        }
        auto h = [&](std::size_t i, double m) {
            double acc = 0.0;
            for (std::size_t r = 0; r < q; ++r) {
                const auto& pr = pos[i * q + r];
                acc += rule_.weights()[r] * ((1.0 - pr.a) * next.at(pr.j, m) + pr.a * next.at(pr.j + 1, m));
            }
            return acc;
        };
        return build(h, target, xi_max);
    }

private:
    template <class H>
    StageTable build(H&& h, double target, double xi_max) const {
        const std::size_t n = log_x_.size();
        const std::size_t mn = std::max<std::size_t>(cfg_.m_nodes, 2);
        StageTable out;
        out.target = target;
        out.m_nodes = mn;
        out.dm = xi_max / static_cast<double>(mn - 1);
        out.xi.resize(n);
        out.values.resize(n * mn);
        for (std::size_t i = 0; i < n; ++i) {
            double xi = 0.0;
            if (h(i, 0.0) > target) {
                if (!(h(i, xi_max) < target)) throw BracketFailure();
                double lo = 0.0;
                double hi = xi_max;
                while (hi - lo > cfg_.tolerance) {
                    const double mid = 0.5 * (lo + hi);
                    (h(i, mid) > target ? lo : hi) = mid;
                }
                xi = 0.5 * (lo + hi);
            }
            out.xi[i] = xi;
            double* v = out.values.data() + i * mn;
            for (std::size_t j = 0; j < mn; ++j) {
                const double m = out.dm * static_cast<double>(j);
                v[j] = m < xi ? target : h(i, m);
            }
        }
        return out;
    }

    const PenaltyFunction& p_;
    PowerCurve curve_;
    ThresholdConfig cfg_;
    GaussHermiteRule rule_;
    double lo_ = 0.0;
    double dy_ = 1.0;
    std::vector<double> log_x_;
};

}  // namespace

ThresholdTables solve_xi_thresholds(const PenaltyFunction& p, const LatentParams& lat, const ThetaSchedule& s,
                                    std::vector<double> update_times, const DriftCurve& d,
                                    const ThresholdConfig& config) {
    const std::size_t n = update_times.size() - (update_times.empty() ? 0 : 1);
    if (n == 0) throw DomainError("solve_xi_thresholds: need at least one update before the horizon");
    const double T = d.horizon();
    for (std::size_t k = 1; k <= n; ++k) {
        if (!(update_times[k] > update_times[k - 1])) {
            throw DomainError("solve_xi_thresholds: update times must be strictly ascending");
        }
    }
    if (update_times.front() < 0.0 || std::abs(update_times.back() - T) > 1e-9 * std::max(1.0, T)) {
        throw DomainError("solve_xi_thresholds: update times must lie in [0, T] and end at T");
    }
    update_times.back() = T;
    if (!d.nonpositive()) throw DomainError("solve_xi_thresholds: positive drift segment");
    if (config.x_nodes < 3 || config.m_nodes < 2) throw DomainError("solve_xi_thresholds: grid too small");

    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) theta[k] = s(update_times[k]);
    std::vector<double> remaining(n);
    double acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        acc += d.integral(update_times[k], update_times[k + 1]);
        remaining[k] = acc;
    }

    // Log-x grid covering X_T (log-variance theta_0, X_{t_0} = 1) and both knots,
    // shifted so that x = 1 is a node.
    const double z = -normal_quantile(config.tail_probability);
    const double sd = std::sqrt(theta[0]);
    double lo = std::min(-0.5 * theta[0] - z * sd, std::log(lat.x_min()) - 0.25);
    double hi = std::max({-0.5 * theta[0] + z * sd, std::log(lat.x_max()) + 0.25, 0.25});
    lo = std::min(lo, -0.25);
    const double dy = (hi - lo) / static_cast<double>(config.x_nodes - 1);
    lo = -std::round(-lo / dy) * dy;

    ThresholdSolver solver(p, lat, config);
    solver.set_grid(lo, dy, config.x_nodes);

    double xi_max = config.xi_max > 0.0 ? config.xi_max : 2.0 - p.inv_du(std::min(remaining[0], 0.0));
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            std::vector<std::vector<double>> xi(n);
            StageTable stage = solver.terminal(theta[n - 1], remaining[n - 1], xi_max);
            xi[n - 1] = stage.xi;
            for (std::size_t k = n - 1; k-- > 0;) {
                stage = solver.intermediate(stage, theta[k] - theta[k + 1], remaining[k], xi_max);
                xi[k] = stage.xi;
            }
            return ThresholdTables(std::move(update_times), solver.log_x(), std::move(xi), std::move(remaining),
                                   xi_max);
        } catch (const BracketFailure&) {
            if (attempt >= config.max_doublings) {
                throw DomainError("solve_xi_thresholds: no root below xi_max = " + std::to_string(xi_max) +
                                  " after doubling; the penalty may be too flat");
            }
            xi_max *= 2.0;
        }
    }
}

TradePlan apply_threshold_policy(const ThresholdTables& tables, const ForecastPath& path) {
    const auto& times = tables.times();
    if (path.times.size() != times.size() || path.x_values.size() != times.size()) {
        throw DomainError("apply_threshold_policy: time-grid mismatch");
    }
    const double slack = 1e-9 * std::max(1.0, times.back());
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(path.times[k] - times[k]) > slack) throw DomainError("apply_threshold_policy: time-grid mismatch");
    }
    TradePlan plan;
    plan.times = times;
    plan.positions.resize(times.size());
    double phi = 0.0;
    for (std::size_t k = 0; k < tables.stages(); ++k) {
        phi = std::max(phi, tables.xi(k, path.x_values[k]));
        plan.positions[k] = phi;
    }
    plan.positions.back() = phi;
    plan.terminal_lump = std::max(0.0, path.realized() - phi);
    return plan;
}

}  // namespace windtrade

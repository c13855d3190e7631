#include "windtrade/drift.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "windtrade/errors.hpp"

namespace windtrade {

DriftCurve::DriftCurve(std::function<double(double)> mu, double horizon) : mu_(std::move(mu)), horizon_(horizon) {
    if (!mu_) throw DomainError("DriftCurve: drift function is empty");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("DriftCurve: horizon must be positive");
}

DriftCurve DriftCurve::constant(double mu, double horizon) {
    if (!std::isfinite(mu)) throw DomainError("DriftCurve: drift must be finite");
    DriftCurve d([mu](double) { return mu; }, horizon);
    d.constant_ = true;
    d.constant_value_ = mu;
    return d;
}

DriftCurve DriftCurve::tabulated(std::vector<double> times, std::vector<double> values) {
    if (times.size() < 2 || times.size() != values.size()) {
        throw DomainError("DriftCurve: need at least two (time, drift) knots");
    }
    if (times.front() != 0.0) throw DomainError("DriftCurve: first knot must be at t = 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw DomainError("DriftCurve: knot times must be strictly ascending");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("DriftCurve: drift must be finite");
    }
    auto interp = [times, values](double t) {
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - times.begin()) - 1;
        const double w = (t - times[j]) / (times[j + 1] - times[j]);
        return (1.0 - w) * values[j] + w * values[j + 1];
    };
    DriftCurve d(interp, times.back());
    d.knots_ = std::move(times);
    d.values_ = std::move(values);
    return d;
}

double DriftCurve::integral(double a, double b) const {
    const double slack = 1e-12 * std::max(1.0, horizon_);
    if (!(a >= -slack && b <= horizon_ + slack && a <= b)) throw DomainError("DriftCurve: bad integration range");
    if (a == b) return 0.0;
    if (constant_) return constant_value_ * (b - a);
    if (!knots_.empty()) {
        // Trapezoid on each linear piece is exact.
        std::vector<double> cuts{a};
        for (double k : knots_) {
            if (k > a && k < b) cuts.push_back(k);
        }
        cuts.push_back(b);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            acc += 0.5 * (mu_(cuts[i]) + mu_(cuts[i + 1])) * (cuts[i + 1] - cuts[i]);
        }
        return acc;
    }
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(mu_, a, b, 15, 1e-11, &err);
}

bool DriftCurve::nonpositive(std::size_t probes) const {
    probes = std::max<std::size_t>(probes, 2);
    const double h = horizon_ / static_cast<double>(probes - 1);
    for (std::size_t i = 0; i < probes; ++i) {
        const double t = std::min(horizon_, h * static_cast<double>(i));
        if (mu_(t) > 0.0) return false;
        if (i + 1 < probes && integral(t, std::min(horizon_, t + h)) > 0.0) return false;
    }
    return true;
}

DriftMinimum drift_minimum(const DriftCurve& d, std::size_t resolution) {
    resolution = std::max<std::size_t>(resolution, 2);
    const double T = d.horizon();
    const double h = T / static_cast<double>(resolution - 1);
    std::vector<double> remaining(resolution, 0.0);
    for (std::size_t j = resolution - 1; j-- > 0;) {
        const double a = h * static_cast<double>(j);
        const double b = j + 2 == resolution ? T : h * static_cast<double>(j + 1);
        remaining[j] = remaining[j + 1] + d.integral(a, b);
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < resolution; ++j) {
        // Accumulated sums of equal integrals can differ in the last bits.
        if (remaining[j] < remaining[best] - 1e-14 * (1.0 + std::abs(remaining[best]))) best = j;
    }
    const double t_star = best + 1 == resolution ? T : h * static_cast<double>(best);
    return {t_star, std::min(0.0, d.remaining(t_star))};
}

}  // namespace windtrade

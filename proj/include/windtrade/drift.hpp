#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace windtrade {

/// Deterministic drift mu_t of the forward price on [0, T].
class DriftCurve {
public:
    /// General drift; integrals use adaptive Gauss-Kronrod quadrature.
    DriftCurve(std::function<double(double)> mu, double horizon);

    static DriftCurve constant(double mu, double horizon);
    /// Piecewise-linear through (times, values); times must start at 0 and
    /// end at the horizon.
    static DriftCurve tabulated(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const { return mu_(t); }
    double horizon() const noexcept { return horizon_; }

    /// Integral of mu over [a, b] with 0 <= a <= b <= T.
    double integral(double a, double b) const;
    double remaining(double t) const { return integral(t, horizon_); }

    /// True when mu <= 0 at every probe point and on every probe interval.
    bool nonpositive(std::size_t probes = 1001) const;

    bool is_constant() const noexcept { return constant_; }
    double constant_value() const noexcept { return constant_value_; }

private:
    std::function<double(double)> mu_;
    double horizon_;
    bool constant_ = false;
    double constant_value_ = 0.0;
    std::vector<double> knots_;   ///< piecewise-linear knots, empty otherwise
    std::vector<double> values_;
};

struct DriftMinimum {
    double t_star;
    double m_star;  ///< integral of mu over [t_star, T]; always <= 0
};

/// Minimizes the remaining drift integral over a uniform grid of `resolution`
/// points on [0, T]. Ties go to the earliest time.
DriftMinimum drift_minimum(const DriftCurve& d, std::size_t resolution = 2001);

}  // namespace windtrade

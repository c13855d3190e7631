#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "windtrade/dist.hpp"
#include "windtrade/penalty.hpp"

namespace windtrade {

/// Law of normalized production as atoms plus a density on (0, 1).
class ProductionLaw {
public:
    static ProductionLaw from(const TruncatedLogNormal& d);
    static ProductionLaw uniform();
    static ProductionLaw point_mass(double c);

    double mean() const noexcept { return mean_; }

    /// E[f(F)]. `kinks` are points in (0, 1) where f is not smooth.
    double expectation(const std::function<double(double)>& f, std::span<const double> kinks = {}) const;

private:
    ProductionLaw(std::vector<std::pair<double, double>> atoms, std::function<double(double)> density);

    std::vector<std::pair<double, double>> atoms_;  ///< (value, probability)
    std::function<double(double)> density_;       ///< empty when purely atomic
    double mean_ = 0.0;
};

/// Penalty averaged over the production law, u~(x) = E[w(F - E[F] + x)],
/// where w is u-bar (free terminal sale of any remainder) or u itself.
class AveragedPenalty {
public:
    AveragedPenalty(PenaltyFunction penalty, ProductionLaw law, bool clipped = true);

    double value(double x) const;
    double derivative(double x) const;
    /// Smallest x with derivative(x) >= z.
    double inverse_derivative(double z) const;
    /// sup_x (x z - value(x)).
    double conjugate(double z) const;

    const ProductionLaw& law() const noexcept { return law_; }
    const PenaltyFunction& penalty() const noexcept { return penalty_; }
    bool clipped() const noexcept { return clipped_; }

private:
    PenaltyFunction penalty_;
    ProductionLaw law_;
    bool clipped_;
};

}  // namespace windtrade

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "windtrade/normal.hpp"

namespace windtrade {

/// Gauss-Hermite rule normalized for expectations of a standard normal:
/// E[f(N)] ~= sum_i w_i f(z_i), with sum_i w_i = 1.
class GaussHermiteRule {
public:
    explicit GaussHermiteRule(std::size_t n);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }

    template <class F>
    double expectation(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
        return acc;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Half-width of the truncated normal support used by piecewise rules.
/// The neglected mass is 2 * Phi(-9) < 3e-19.
inline constexpr double kNormalTruncation = 9.0;

/// E[f(N)] for a standard normal N by composite Gauss-Legendre on
/// [-9, 9]. Panels are split at every breakpoint inside the range, so
/// integrands with kinks at known z-locations are integrated to near machine
/// precision.
template <class F>
double gaussian_expectation(F&& f, std::span<const double> breakpoints, double max_panel = 0.5) {
    using Rule = boost::math::quadrature::gauss<double, 15>;
    std::vector<double> cuts;
    cuts.reserve(breakpoints.size() + 2);
    cuts.push_back(-kNormalTruncation);
    for (double b : breakpoints) {
        if (std::isfinite(b) && b > -kNormalTruncation && b < kNormalTruncation) cuts.push_back(b);
    }
    cuts.push_back(kNormalTruncation);
    std::sort(cuts.begin(), cuts.end());

    auto weighted = [&f](double z) { return f(z) * normal_pdf(z); };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        if (b - a <= 0.0) continue;
        const auto panels = static_cast<std::size_t>(std::ceil((b - a) / max_panel));
        const double h = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = a + h * static_cast<double>(p);
            acc += Rule::integrate(weighted, lo, p + 1 == panels ? b : lo + h);
        }
    }
    return acc;
}

}  // namespace windtrade

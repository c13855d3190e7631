#include "windtrade/law.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "windtrade/errors.hpp"

namespace windtrade {

ProductionLaw::ProductionLaw(std::vector<std::pair<double, double>> atoms, std::function<double(double)> density)
    : atoms_(std::move(atoms)), density_(std::move(density)) {
    mean_ = expectation([](double y) { return y; });
}

ProductionLaw ProductionLaw::from(const TruncatedLogNormal& d) {
    const Atoms a = atoms(d);
    return ProductionLaw({{0.0, a.p0}, {1.0, a.p1}}, [d](double y) { return density(d, y); });
}

ProductionLaw ProductionLaw::uniform() {
    return ProductionLaw({}, [](double) { return 1.0; });
}

ProductionLaw ProductionLaw::point_mass(double c) {
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("ProductionLaw: point mass must lie in [0, 1]");
    return ProductionLaw({{c, 1.0}}, {});
}

double ProductionLaw::expectation(const std::function<double(double)>& f, std::span<const double> kinks) const {
    double acc = 0.0;
    for (const auto& [value, prob] : atoms_) {
        if (prob > 0.0) acc += prob * f(value);
    }
    if (!density_) return acc;
    std::vector<double> cuts{0.0};
    for (double k : kinks) {
        if (k > 0.0 && k < 1.0) cuts.push_back(k);
    }
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    auto weighted = [&](double y) { return f(y) * density_(y); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        double err = 0.0;
        acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(weighted, cuts[i], cuts[i + 1], 15,
                                                                            1e-12, &err);
    }
    return acc;
}

AveragedPenalty::AveragedPenalty(PenaltyFunction penalty, ProductionLaw law, bool clipped)
    : penalty_(std::move(penalty)), law_(std::move(law)), clipped_(clipped) {}

double AveragedPenalty::value(double x) const {
    const double shift = x - law_.mean();
    const double kink = -shift;
    return law_.expectation(
        [&](double y) { return clipped_ ? penalty_.u_bar(y + shift) : penalty_.u(y + shift); }, {&kink, 1});
}

double AveragedPenalty::derivative(double x) const {
    const double shift = x - law_.mean();
    const double kink = -shift;
    return law_.expectation(
        [&](double y) { return clipped_ ? penalty_.du_bar(y + shift) : penalty_.du(y + shift); }, {&kink, 1});
}

double AveragedPenalty::inverse_derivative(double z) const {
    if (clipped_ && z > penalty_.du(0.0)) {
        throw DomainError("averaged penalty: derivative never reaches the requested value");
    }
    double lo = -1.0;
    double hi = 1.0;
    for (int i = 0; derivative(hi) < z; ++i) {
        if (i > 60) throw DomainError("averaged penalty: cannot bracket the inverse derivative");
        hi = 2.0 * hi;
    }
    for (int i = 0; derivative(lo) >= z; ++i) {
        if (i > 60) throw DomainError("averaged penalty: cannot bracket the inverse derivative");
        lo = 2.0 * lo;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (derivative(mid) >= z ? hi : lo) = mid;
    }
    return hi;
}

double AveragedPenalty::conjugate(double z) const {
    const double x = inverse_derivative(z);
    return x * z - value(x);
}

}  // namespace windtrade

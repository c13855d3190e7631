#include "windtrade/penalty.hpp"

#include <cmath>

#include "windtrade/errors.hpp"

namespace windtrade {

PenaltyFunction PenaltyFunction::quadratic(double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("quadratic penalty: kappa must be positive");
    PenaltyFunction p;
    p.kappa_ = kappa;
    return p;
}

PenaltyFunction PenaltyFunction::custom(Fn u, Fn du, Fn inv_du) {
    if (!u || !du || !inv_du) throw DomainError("custom penalty: u, u' and (u')^{-1} are all required");
    PenaltyFunction p;
    p.u_ = std::move(u);
    p.du_ = std::move(du);
    p.inv_du_ = std::move(inv_du);
    return p;
}

double PenaltyFunction::u(double x) const { return kappa_ ? 0.5 * *kappa_ * x * x : u_(x); }

double PenaltyFunction::du(double x) const { return kappa_ ? *kappa_ * x : du_(x); }

double PenaltyFunction::inv_du(double y) const { return kappa_ ? y / *kappa_ : inv_du_(y); }

double PenaltyFunction::v(double y) const {
    if (kappa_) return 0.5 * y * y / *kappa_;
    const double x = inv_du_(y);
    return x * y - u_(x);
}

double PenaltyFunction::kappa() const {
    if (!kappa_) throw DomainError("penalty is not quadratic");
    return *kappa_;
}

}  // namespace windtrade

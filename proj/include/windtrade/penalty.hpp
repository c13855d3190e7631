#pragma once

#include <functional>
#include <optional>

namespace windtrade {

/// Convex cost u on the terminal volume mismatch F_T - phi_T, with its
/// derivative, the inverse I of the derivative and the Fenchel transform v.
class PenaltyFunction {
public:
    using Fn = std::function<double(double)>;

    /// u(x) = kappa x^2 / 2.
    static PenaltyFunction quadratic(double kappa);
    /// User-supplied u, u' and (u')^{-1}; u' must be strictly increasing with u'(0) = 0.
    static PenaltyFunction custom(Fn u, Fn du, Fn inv_du);

    double u(double x) const;
    double du(double x) const;
    double inv_du(double y) const;
    /// v(y) = sup_x (x y - u(x)) = y I(y) - u(I(y)).
    double v(double y) const;

    /// Penalty when a positive remainder can be sold at the horizon for free:
    /// u(x) for x <= 0, u(0) otherwise.
    double u_bar(double x) const { return x <= 0.0 ? u(x) : u(0.0); }
    double du_bar(double x) const { return x <= 0.0 ? du(x) : du(0.0); }

    bool is_quadratic() const noexcept { return kappa_.has_value(); }
    /// Throws DomainError for custom penalties.
    double kappa() const;

private:
    PenaltyFunction() = default;

    std::optional<double> kappa_;
    Fn u_;
    Fn du_;
    Fn inv_du_;
};

}  // namespace windtrade

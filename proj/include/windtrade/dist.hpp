#pragma once

#include <cmath>
#include <random>

namespace windtrade {

/// Stylized power curve: zero below x_min, one above x_max, affine between.
class PowerCurve {
public:
    PowerCurve(double x_min, double x_max);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    double width() const noexcept { return x_max_ - x_min_; }

    double operator()(double x) const noexcept {
        if (x <= x_min_) return 0.0;
        if (x >= x_max_) return 1.0;
        return (x - x_min_) / (x_max_ - x_min_);
    }

private:
    double x_min_;
    double x_max_;
};

inline double f_prod(const PowerCurve& curve, double x) { return curve(x); }

/// Latent description: X log-normal with E[X] = 1, pushed through a power
/// curve. The log-mean is not a free parameter; it is always -nu_x^2 / 2.
class LatentParams {
public:
    LatentParams(double nu_x, double x_min, double x_max);

    double nu_x() const noexcept { return nu_x_; }
    double mu_x() const noexcept { return -0.5 * nu_x_ * nu_x_; }
    double variance() const noexcept { return nu_x_ * nu_x_; }
    double x_min() const noexcept { return curve_.x_min(); }
    double x_max() const noexcept { return curve_.x_max(); }
    const PowerCurve& curve() const noexcept { return curve_; }

private:
    double nu_x_;
    PowerCurve curve_;
};

/// Law of normalized production F = f_prod(X) in the reduced (mu, nu, zeta)
/// form: log(F - zeta) ~ N(mu, nu^2) on (0, 1), with atoms at 0 and 1.
class TruncatedLogNormal {
public:
    TruncatedLogNormal(double mu, double nu, double zeta);

    double mu() const noexcept { return mu_; }
    double nu() const noexcept { return nu_; }
    double zeta() const noexcept { return zeta_; }

private:
    double mu_;
    double nu_;
    double zeta_;
};

struct Atoms {
    double p0;  ///< P[F = 0]
    double p1;  ///< P[F = 1]
};

TruncatedLogNormal from_latent(const LatentParams& lat);

/// Inverse of from_latent under the E[X] = 1 normalization.
/// Throws DomainError when zeta >= 0 (no positive x_min exists).
LatentParams to_latent(const TruncatedLogNormal& d);

/// Density of the absolutely continuous part on (0, 1).
double density(const TruncatedLogNormal& d, double y);

/// P[F <= y]. Includes the atom at zero for y >= 0 and equals 1 for y >= 1.
double cdf(const TruncatedLogNormal& d, double y);

Atoms atoms(const TruncatedLogNormal& d);

/// zeta + exp(mu + nu * Phi^{-1}(alpha)), clamped to [0, 1].
/// Defined for alpha in [P0, 1 - P1]; throws DomainError otherwise.
double quantile(const TruncatedLogNormal& d, double alpha);

/// E[f_prod(X)].
double mean_fprod(const LatentParams& lat);

/// E[f_prod(X)^2] in closed form.
double second_moment_fprod(const LatentParams& lat);

inline double variance_fprod(const LatentParams& lat) {
    const double m = mean_fprod(lat);
    return second_moment_fprod(lat) - m * m;
}

template <class Rng>
double sample(const LatentParams& lat, Rng& rng) {
    std::normal_distribution<double> normal;
    const double x = std::exp(lat.mu_x() + lat.nu_x() * normal(rng));
    return lat.curve()(x);
}

template <class Rng>
double sample(const TruncatedLogNormal& d, Rng& rng) {
    return sample(to_latent(d), rng);
}

}  // namespace windtrade

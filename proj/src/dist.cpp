#include "windtrade/dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windtrade/errors.hpp"
#include "windtrade/normal.hpp"

namespace windtrade {

namespace {

// Tolerance on probability levels at the atom boundaries.
constexpr double kAlphaSlack = 1e-12;

}  // namespace

PowerCurve::PowerCurve(double x_min, double x_max) : x_min_(x_min), x_max_(x_max) {
    if (!(x_min > 0.0) || !(x_max > x_min) || !std::isfinite(x_max)) {
        throw DomainError("PowerCurve requires 0 < x_min < x_max, got x_min=" + std::to_string(x_min) +
                          " x_max=" + std::to_string(x_max));
    }
}

LatentParams::LatentParams(double nu_x, double x_min, double x_max) : nu_x_(nu_x), curve_(x_min, x_max) {
    if (!(nu_x > 0.0) || !std::isfinite(nu_x)) throw DomainError("LatentParams requires nu_x > 0");
}

TruncatedLogNormal::TruncatedLogNormal(double mu, double nu, double zeta) : mu_(mu), nu_(nu), zeta_(zeta) {
    if (!std::isfinite(mu)) throw DomainError("TruncatedLogNormal: mu must be finite");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("TruncatedLogNormal: nu must be positive");
    if (!(zeta < 0.0)) throw DomainError("TruncatedLogNormal: zeta must be negative");
}

TruncatedLogNormal from_latent(const LatentParams& lat) {
    const double width = lat.x_max() - lat.x_min();
    return {lat.mu_x() - std::log(width), lat.nu_x(), -lat.x_min() / width};
}

LatentParams to_latent(const TruncatedLogNormal& d) {
    if (!(d.zeta() < 0.0)) throw DomainError("to_latent: zeta >= 0 implies x_min <= 0");
    const double mu_x = -0.5 * d.nu() * d.nu();
    const double width = std::exp(mu_x - d.mu());
    const double x_min = -d.zeta() * width;
    return {d.nu(), x_min, x_min + width};
}

double density(const TruncatedLogNormal& d, double y) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError("density: y must lie in (0, 1)");
    const double s = y - d.zeta();
    const double z = (std::log(s) - d.mu()) / d.nu();
    return normal_pdf(z) / (s * d.nu());
}

double cdf(const TruncatedLogNormal& d, double y) {
    if (y < 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    return normal_cdf((std::log(y - d.zeta()) - d.mu()) / d.nu());
}

Atoms atoms(const TruncatedLogNormal& d) {
    const double p0 = normal_cdf((std::log(-d.zeta()) - d.mu()) / d.nu());
    const double p1 = normal_cdf(-(std::log(1.0 - d.zeta()) - d.mu()) / d.nu());
    return {p0, p1};
}

double quantile(const TruncatedLogNormal& d, double alpha) {
    const auto [p0, p1] = atoms(d);
    if (!(alpha >= p0 - kAlphaSlack && alpha <= 1.0 - p1 + kAlphaSlack)) {
        throw DomainError("quantile: alpha=" + std::to_string(alpha) + " outside [P0, 1-P1] = [" +
                          std::to_string(p0) + ", " + std::to_string(1.0 - p1) + "]");
    }
    const double q = d.zeta() + std::exp(d.mu() + d.nu() * normal_quantile(alpha));
    return std::clamp(q, 0.0, 1.0);
}

double mean_fprod(const LatentParams& lat) {
    const double nu = lat.nu_x();
    const double a = lat.x_min();
    const double b = lat.x_max();
    const double half = 0.5 * nu * nu;
    const double dpa = (-std::log(a) + half) / nu;
    const double dpb = (-std::log(b) + half) / nu;
    const double dma = (-std::log(a) - half) / nu;
    const double dmb = (-std::log(b) - half) / nu;
    const double inner = normal_cdf(dpa) - normal_cdf(dpb) - a * (normal_cdf(dma) - normal_cdf(dmb));
    return inner / (b - a) + normal_cdf(dmb);
}

double second_moment_fprod(const LatentParams& lat) {
    const double nu = lat.nu_x();
    const double v = nu * nu;
    const double a = lat.x_min();
    const double b = lat.x_max();
    const double w2 = (b - a) * (b - a);
    auto d0 = [&](double k) { return (-std::log(k) + 1.5 * v) / nu; };
    auto dp = [&](double k) { return (-std::log(k) + 0.5 * v) / nu; };
    auto dm = [&](double k) { return (-std::log(k) - 0.5 * v) / nu; };
    // E[X^2] = exp(nu^2) under E[X] = 1.
    const double value = normal_cdf(dm(b)) + std::exp(v) / w2 * (normal_cdf(d0(a)) - normal_cdf(d0(b))) -
                         2.0 * a / w2 * (normal_cdf(dp(a)) - normal_cdf(dp(b))) +
                         a * a / w2 * (normal_cdf(dm(a)) - normal_cdf(dm(b)));
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace windtrade

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "windtrade/errors.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/rng.hpp"

using namespace windtrade;

namespace {

LatentParams plant1() {
    const auto& p = oracle::kPlants[0];
    return {p.nu_x, p.x_min, p.x_max};
}

// E[f_prod(x exp(sqrt(theta) N - theta/2))] by adaptive quadrature in z, split
// where the argument crosses the two knots.
double g_by_quadrature(const PowerCurve& c, double x, double theta) {
    const double s = std::sqrt(theta);
    auto z_of = [&](double k) { return (std::log(k / x) + 0.5 * theta) / s; };
    auto f = [&](double z) { return c(x * std::exp(s * z - 0.5 * theta)) * oracle::phi(z); };
    return oracle::integrate_split(f, {z_of(c.x_min()), z_of(c.x_max())}, -40.0, 40.0);
}

ThetaSchedule fitted_schedule(double horizon_hours, double cap) {
    return ThetaSchedule::parametric({oracle::kSigma0, oracle::kEta, oracle::kJumpB, 120.0}, horizon_hours, cap);
}

}  // namespace

TEST_CASE("g tends to the power curve as theta -> 0") {
    const auto lat = plant1();
    const auto& c = lat.curve();
    for (double x : {0.5 * c.x_min(), 0.5 * (c.x_min() + c.x_max()), 2.0 * c.x_max()}) {
        CHECK(std::abs(g(c, x, 0.0) - c(x)) < 1e-9);
        CHECK(std::abs(g(c, x, 1e-20) - c(x)) < 1e-9);
        CHECK(std::abs(g(c, x, 1e-12) - c(x)) < 1e-9);
    }
}

TEST_CASE("g matches independent quadrature at random points") {
    const auto lat = plant1();
    auto rng = substream(21, 0, StreamTag::Test);
    std::uniform_real_distribution<double> lx(-2.0, 2.0), th(1e-3, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double x = std::exp(lx(rng));
        const double theta = th(rng);
        CHECK(std::abs(g(lat.curve(), x, theta) - g_by_quadrature(lat.curve(), x, theta)) < 1e-7);
    }
}

TEST_CASE("g at full variance is the Monte Carlo mean of production") {
    const auto lat = plant1();
    auto rng = substream(22, 0, StreamTag::Test);
    std::normal_distribution<double> normal;
    oracle::MeanSe mc;
    for (std::size_t i = 0; i < 10'000'000; ++i) {
        mc.add(lat.curve()(std::exp(lat.mu_x() + lat.nu_x() * normal(rng))));
    }
    CHECK(std::abs(g(lat.curve(), 1.0, lat.variance()) - mc.mean()) < 3 * mc.se());
}

TEST_CASE("g is monotone in x with values in [0, 1]") {
    const auto lat = plant1();
    auto rng = substream(23, 0, StreamTag::Test);
    std::uniform_real_distribution<double> lx(-4.0, 4.0), th(1e-4, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double x = std::exp(lx(rng));
        const double theta = th(rng);
        const double v = g(lat.curve(), x, theta);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        const double h = 1e-6 * x;
        CHECK(g(lat.curve(), x + h, theta) - g(lat.curve(), x - h, theta) >= -1e-15);
    }
}

TEST_CASE("parametric theta schedule") {
    const auto lat = plant1();
    const auto s = fitted_schedule(144.0, lat.variance());
    CHECK(s(144.0) == doctest::Approx(0.095368).epsilon(1e-5));
    CHECK(s(144.0) == doctest::Approx(oracle::kJumpB * oracle::kJumpB).epsilon(1e-15));
    CHECK(s(144.0 - 120.0) == lat.variance());
    CHECK(s(0.0) == lat.variance());
    double prev = s(0.0);
    for (double t = 0.0; t <= 144.0; t += 0.25) {
        CHECK(s(t) <= prev);
        CHECK(s(t) <= lat.variance());
        prev = s(t);
    }
    CHECK_THROWS_AS(s(144.5), DomainError);

    const ThetaSchedule::Parametric tiny{0.05, 1e-12, 0.3, 1e9};
    const ThetaSchedule::Parametric zero{0.05, 0.0, 0.3, 1e9};
    for (double tau : {0.0, 1.0, 50.0, 100.0}) {
        CHECK(std::abs(parametric_theta(tiny, tau) - parametric_theta(zero, tau)) < 1e-10);
        CHECK(parametric_theta(zero, tau) == doctest::Approx(0.09 + 0.0025 * tau).epsilon(1e-15));
    }
}

TEST_CASE("tabulated theta schedule interpolates without extrapolating") {
    const auto s = ThetaSchedule::tabulated({0.0, 1.0, 3.0}, {0.4, 0.2, 0.1}, 3.0, 0.3);
    CHECK(s(0.0) == doctest::Approx(0.3));  // clamped to the cap
    CHECK(s(2.0) == doctest::Approx(0.15));
    CHECK(s(3.0) == doctest::Approx(0.1));
    const auto shifted = ThetaSchedule::tabulated({1.0, 2.0}, {0.2, 0.1}, 3.0, 0.3);
    CHECK_THROWS_AS(shifted(0.5), DomainError);
    CHECK_THROWS_AS(shifted(2.5), DomainError);
    CHECK_THROWS_AS(ThetaSchedule::tabulated({0.0, 1.0}, {0.1, 0.2}, 1.0, 0.3), DomainError);
}

TEST_CASE("error variance endpoints, monotonicity and node refinement") {
    const auto lat = plant1();
    const ForecastErrorModel phi(lat);
    const double var = variance_fprod(lat);
    CHECK(std::abs(phi(0.0)) < 1e-8);
    CHECK(std::abs(phi(lat.variance()) - var) < 1e-8);
    CHECK(phi(lat.variance() * 1.01) == phi(lat.variance()));
    CHECK_THROWS_AS(phi(-0.1), DomainError);

    double prev = phi(0.0);
    for (int i = 1; i <= 50; ++i) {
        const double v = phi(lat.variance() * i / 50.0);
        CHECK(v > prev);
        prev = v;
    }

    const ForecastErrorModel fine(lat, 256);
    for (double frac : {0.05, 0.2, 0.5, 0.8, 1.0}) {
        CHECK(std::abs(phi(frac * lat.variance()) - fine(frac * lat.variance())) < 1e-9);
    }
}

TEST_CASE("error variance matches adaptive quadrature across theta") {
    const auto lat = plant1();
    const ForecastErrorModel phi(lat);
    const double cap = lat.variance();
    for (double frac : {1e-4, 1e-3, 0.01, 0.05, 0.09, 0.11, 0.3, 0.7}) {
        const double theta = frac * cap;
        const double known = cap - theta;
        // g itself is checked against quadrature above; this checks the outer integral.
        auto f = [&](double z) {
            const double v = g(lat.curve(), std::exp(std::sqrt(known) * z - 0.5 * known), theta);
            return v * v * oracle::phi(z);
        };
        auto z_of = [&](double k) { return (std::log(k) + 0.5 * known) / std::sqrt(known); };
        const double e_g2 = oracle::integrate_split(f, {z_of(lat.x_min()), z_of(lat.x_max())}, -12.0, 12.0, 1e-12);
        CHECK(std::abs(phi(theta) - (second_moment_fprod(lat) - e_g2)) < 1e-10);
    }
}

TEST_CASE("error variance agrees with simulated forecast errors") {
    const auto lat = plant1();
    const double theta = 0.5 * lat.variance();
    auto rng = substream(24, 0, StreamTag::Test);
    std::normal_distribution<double> normal;
    const double known = lat.variance() - theta;
    oracle::MeanSe mc;
    for (std::size_t i = 0; i < 1'000'000; ++i) {
        const double xt = std::exp(std::sqrt(known) * normal(rng) - 0.5 * known);
        const double xT = xt * std::exp(std::sqrt(theta) * normal(rng) - 0.5 * theta);
        const double e = g(lat.curve(), xt, theta) - lat.curve()(xT);
        mc.add(e * e);
    }
    CHECK(std::abs(error_variance(lat, theta) - mc.mean()) < 3 * mc.se());
}

TEST_CASE("simulated forecast is a martingale with the right terminal law") {
    const auto lat = plant1();
    const double horizon = 144.0;
    const auto s = fitted_schedule(horizon, lat.variance());
    const auto grid = uniform_grid(0.0, horizon, 24);
    const std::size_t n = 100'000;
    ForecastSimulator sim(lat, s, grid, 5);
    const ForecastErrorModel phi(lat);

    std::vector<oracle::MeanSe> increments(grid.size() - 1);
    std::vector<oracle::MeanSe> sq_errors(grid.size() - 1);
    std::vector<double> terminal(n);
    ForecastPath p;
    for (std::size_t i = 0; i < n; ++i) {
        sim.fill(i, p);
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            increments[k].add(p.f_values[k + 1] - p.f_values[k]);
            const double e = p.f_values[k] - p.realized();
            sq_errors[k].add(e * e);
        }
        for (double f : p.f_values) {
            CHECK_MESSAGE((f >= 0.0 && f <= 1.0), "forecast left [0, 1]");
        }
        terminal[i] = p.realized();
    }
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        CHECK(std::abs(increments[k].mean()) <= 3 * increments[k].se());
        CHECK(std::abs(sq_errors[k].mean() - phi(s(grid[k]))) < 3 * sq_errors[k].se() + 1e-12);
    }
    const auto d = from_latent(lat);
    const auto [p0, p1] = atoms(d);
    const double ks = oracle::ks_distance(
        terminal, [&](double y) { return cdf(d, y); },
        [&](double y) { return y <= 0.0 ? 0.0 : (y >= 1.0 ? 1.0 - p1 : cdf(d, y)); });
    CHECK(ks < 0.005);
}

TEST_CASE("degenerate forecast model and determinism") {
    const auto lat = plant1();
    const auto flat = ThetaSchedule::parametric({0.0, 0.0, 0.0, 1e9}, 10.0, lat.variance());
    for (const auto& p : simulate_paths(lat, flat, uniform_grid(0.0, 10.0, 5), 50, 3)) {
        for (double f : p.f_values) CHECK(f == doctest::Approx(lat.curve()(1.0)).epsilon(1e-15));
    }
    const auto s = fitted_schedule(48.0, lat.variance());
    const auto a = simulate_paths(lat, s, uniform_grid(0.0, 48.0, 8), 20, 99);
    const auto b = simulate_paths(lat, s, uniform_grid(0.0, 48.0, 8), 20, 99);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].f_values == b[i].f_values);

    const auto rising = ThetaSchedule::tabulated({0.0, 1.0, 2.0}, {0.3, 0.3, 0.3}, 2.0, 0.4);
    CHECK_NOTHROW(ForecastSimulator(lat, rising, {0.0, 1.0, 2.0}, 1));
    CHECK_THROWS_AS(ForecastSimulator(lat, s, {0.0, 2.0, 1.0, 48.0}, 1), DomainError);
    CHECK_THROWS_AS(ForecastSimulator(lat, s, {0.0, 10.0}, 1), DomainError);
}

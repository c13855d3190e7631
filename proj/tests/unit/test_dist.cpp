#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "windtrade/dist.hpp"
#include "windtrade/errors.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/rng.hpp"

using namespace windtrade;

namespace {

TruncatedLogNormal plant_reduced(std::size_t i) {
    const auto& p = oracle::kPlants[i];
    return {p.mu, p.nu, p.zeta};
}

LatentParams plant_latent(std::size_t i) {
    const auto& p = oracle::kPlants[i];
    return {p.nu_x, p.x_min, p.x_max};
}

std::vector<TruncatedLogNormal> random_laws(std::size_t n, std::uint64_t seed) {
    auto rng = substream(seed, 0, StreamTag::Test);
    std::uniform_real_distribution<double> mu(-2.0, 0.3), nu(0.2, 1.2), zeta(-0.6, -0.05);
    std::vector<TruncatedLogNormal> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(mu(rng), nu(rng), zeta(rng));
    return out;
}

// Brute-force E[f_prod(X)^k] by integrating against the log-normal density.
double fprod_moment_by_quadrature(const LatentParams& lat, int k) {
    const double a = lat.x_min();
    const double b = lat.x_max();
    const double m = lat.mu_x();
    const double s = lat.nu_x();
    auto rho = [&](double x) { return oracle::phi((std::log(x) - m) / s) / (x * s); };
    const double mid = oracle::integrate([&](double x) { return std::pow((x - a) / (b - a), k) * rho(x); }, a, b);
    const double tail = oracle::integrate(rho, b, std::numeric_limits<double>::infinity());
    return mid + tail;
}

}  // namespace

TEST_CASE("f_prod knots and midpoint") {
    const PowerCurve curve(0.46129, 3.94322);
    CHECK(f_prod(curve, 0.46129) == 0.0);
    CHECK(f_prod(curve, 3.94322) == 1.0);
    CHECK(f_prod(curve, 0.5 * (0.46129 + 3.94322)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f_prod(curve, 0.0) == 0.0);
    CHECK(f_prod(curve, 100.0) == 1.0);
    double prev = 0.0;
    for (double x = 0.0; x < 5.0; x += 0.01) {
        const double v = f_prod(curve, x);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
    CHECK_THROWS_AS(PowerCurve(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(PowerCurve(2.0, 1.0), DomainError);
}

TEST_CASE("from_latent reproduces the reference plant table") {
    for (std::size_t i = 0; i < 3; ++i) {
        const auto d = from_latent(plant_latent(i));
        const auto& row = oracle::kPlants[i];
        CHECK(std::abs(d.mu() - row.mu) < 1e-4);
        CHECK(std::abs(d.nu() - row.nu) < 1e-4);
        CHECK(std::abs(d.zeta() - row.zeta) < 1e-4);
        // mu_X is pinned by the E[X] = 1 convention.
        CHECK(std::abs(plant_latent(i).mu_x() - row.mu_x) < 1e-5);
    }
    const auto d = from_latent(LatentParams(1.0, 1.0, 1.0 + std::exp(0.5)));
    CHECK(d.mu() == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("to_latent inverts from_latent") {
    const auto lat = to_latent(plant_reduced(0));
    CHECK(std::abs(lat.x_min() - 0.46129) < 2e-4);
    CHECK(std::abs(lat.x_max() - 3.94322) < 2e-4);

    // zeta = -1 and mu = -nu^2/2 give x_max - x_min = 1 and x_min = 1.
    const auto unit = to_latent(TruncatedLogNormal(-0.125, 0.5, -1.0));
    CHECK(unit.x_min() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(unit.x_max() == doctest::Approx(2.0).epsilon(1e-14));

    for (const auto& d : random_laws(200, 11)) {
        const auto back = from_latent(to_latent(d));
        CHECK(std::abs(back.mu() - d.mu()) <= 1e-12 * std::max(1.0, std::abs(d.mu())));
        CHECK(std::abs(back.nu() - d.nu()) <= 1e-12 * d.nu());
        CHECK(std::abs(back.zeta() - d.zeta()) <= 1e-12 * std::abs(d.zeta()));
    }
    CHECK_THROWS_AS(TruncatedLogNormal(-1.0, 0.5, 0.1), DomainError);
}

TEST_CASE("density integrates to the continuous mass") {
    for (const auto& d : random_laws(100, 12)) {
        const auto [p0, p1] = atoms(d);
        const double mass = oracle::integrate([&](double y) { return density(d, y); }, 0.0, 1.0, 1e-12);
        CHECK(std::abs(mass - (1.0 - p0 - p1)) < 1e-8);
    }
    CHECK_THROWS_AS(density(plant_reduced(0), 0.0), DomainError);
    CHECK_THROWS_AS(density(plant_reduced(0), 1.5), DomainError);
}

TEST_CASE("density at the log-mode point") {
    const auto d = plant_reduced(0);
    const double y = std::exp(d.mu()) + d.zeta();
    const double expected = 1.0 / (std::exp(d.mu()) * d.nu() * std::sqrt(2.0 * M_PI));
    CHECK(expected == doctest::Approx(2.616).epsilon(5e-4));
    CHECK(density(d, y) == doctest::Approx(expected).epsilon(1e-14));
    const double h = 1e-6;
    const double fd = (cdf(d, y + h) - cdf(d, y - h)) / (2.0 * h);
    CHECK(fd == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("density is unimodal for the reference plant") {
    const auto d = plant_reduced(0);
    int sign_changes = 0;
    double prev_diff = 1.0;
    double prev = density(d, 1e-4);
    for (int i = 2; i < 10000; ++i) {
        const double cur = density(d, i * 1e-4);
        const double diff = cur - prev;
        if ((diff > 0) != (prev_diff > 0)) ++sign_changes;
        prev_diff = diff;
        prev = cur;
    }
    CHECK(sign_changes <= 1);
}

TEST_CASE("atoms agree with Monte Carlo counts") {
    const auto d = plant_reduced(0);
    const auto [p0, p1] = atoms(d);
    CHECK(p0 == doctest::Approx(0.200).epsilon(2e-3));
    const auto lat = to_latent(d);
    auto rng = substream(7, 0, StreamTag::Test);
    std::normal_distribution<double> normal;
    const std::size_t n = 1'000'000;
    std::size_t zeros = 0, ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = lat.curve()(std::exp(lat.mu_x() + lat.nu_x() * normal(rng)));
        zeros += (f == 0.0);
        ones += (f == 1.0);
    }
    const double se0 = std::sqrt(p0 * (1 - p0) / n);
    const double se1 = std::sqrt(p1 * (1 - p1) / n);
    CHECK(std::abs(static_cast<double>(zeros) / n - p0) < 3 * se0);
    CHECK(std::abs(static_cast<double>(ones) / n - p1) < 3 * se1);
    CHECK(p0 + p1 <= 1.0);

    // zeta -> 0^-: the zero atom vanishes.
    CHECK(atoms(TruncatedLogNormal(d.mu(), d.nu(), -1e-300)).p0 < 1e-100);
}

TEST_CASE("quantile is the inverse of the cdf on [P0, 1-P1]") {
    for (const auto& d : random_laws(50, 13)) {
        const auto [p0, p1] = atoms(d);
        CHECK(std::abs(quantile(d, p0)) < 1e-9);
        CHECK(std::abs(quantile(d, 1.0 - p1) - 1.0) < 1e-9);
        double prev = -1.0;
        for (int i = 0; i <= 20; ++i) {
            const double alpha = p0 + (1.0 - p0 - p1) * i / 20.0;
            const double q = quantile(d, alpha);
            CHECK(q >= prev);
            prev = q;
        }
        // Skip points where the inverse is ill-conditioned (cdf rounding / density > 1e-10).
        for (double y : {0.01, 0.2, 0.5, 0.9, 0.99}) {
            if (density(d, y) < 1e-5) continue;
            CHECK(std::abs(quantile(d, cdf(d, y)) - y) < 1e-9);
        }
        CHECK_THROWS_AS(quantile(d, p0 * 0.5 - 1e-6), DomainError);
        CHECK_THROWS_AS(quantile(d, 1.0 - p1 * 0.5 + 1e-6), DomainError);
    }
}

TEST_CASE("sampling matches the analytic law") {
    const auto d = plant_reduced(0);
    const auto lat = to_latent(d);
    auto rng = substream(8, 0, StreamTag::Test);
    const std::size_t n = 1'000'000;
    std::vector<double> xs(n);
    oracle::MeanSe mean;
    std::size_t zeros = 0;
    for (auto& x : xs) {
        x = sample(d, rng);
        mean.add(x);
        zeros += (x == 0.0);
    }
    const auto [p0, p1] = atoms(d);
    const double ks = oracle::ks_distance(
        xs, [&](double y) { return cdf(d, y); },
        [&](double y) {
            if (y <= 0.0) return 0.0;
            if (y >= 1.0) return 1.0 - p1;
            return cdf(d, y);
        });
    CHECK(ks < 0.002);
    CHECK(std::abs(static_cast<double>(zeros) / n - p0) < 3 * std::sqrt(p0 * (1 - p0) / n));
    const double quad_mean = fprod_moment_by_quadrature(lat, 1);
    CHECK(std::abs(mean.mean() - quad_mean) < 3 * mean.se());
    CHECK(g(lat.curve(), 1.0, lat.variance()) == doctest::Approx(quad_mean).epsilon(1e-10));

    const LatentParams sharp(1e-9, lat.x_min(), lat.x_max());
    for (int i = 0; i < 100; ++i) CHECK(std::abs(sample(sharp, rng) - lat.curve()(1.0)) < 1e-8);
}

TEST_CASE("second moment closed form") {
    const auto lat = plant_latent(0);
    const double closed = second_moment_fprod(lat);

    auto rng = substream(9, 0, StreamTag::Test);
    std::normal_distribution<double> normal;
    oracle::MeanSe mc;
    for (std::size_t i = 0; i < 10'000'000; ++i) {
        const double f = lat.curve()(std::exp(lat.mu_x() + lat.nu_x() * normal(rng)));
        mc.add(f * f);
    }
    CHECK(std::abs(mc.mean() - closed) < 3 * mc.se());

    // x_min -> 0+, x_max = 1: f_prod(x) ~ min(x, 1).
    const LatentParams near_identity(0.8, 1e-10, 1.0);
    CHECK(std::abs(second_moment_fprod(near_identity) - fprod_moment_by_quadrature(near_identity, 2)) < 1e-8);

    auto prng = substream(10, 0, StreamTag::Test);
    for (const auto& d : random_laws(100, 14)) {
        const auto l = to_latent(d);
        const double m2 = second_moment_fprod(l);
        const double m1 = mean_fprod(l);
        CHECK(m2 >= m1 * m1);
        CHECK(std::abs(m2 - fprod_moment_by_quadrature(l, 2)) < 1e-8);
        CHECK(std::abs(m1 - fprod_moment_by_quadrature(l, 1)) < 1e-8);
    }
}

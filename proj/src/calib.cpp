#include "windtrade/calib.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "windtrade/errors.hpp"
#include "windtrade/optim.hpp"
#include "windtrade/rng.hpp"

namespace windtrade {

ProductionSample::ProductionSample(std::vector<double> values, std::size_t stride) {
    if (stride == 0) throw DomainError("ProductionSample: stride must be positive");
    if (stride > 1) {
        std::vector<double> kept;
        kept.reserve(values.size() / stride + 1);
        for (std::size_t i = 0; i < values.size(); i += stride) kept.push_back(values[i]);
        values = std::move(kept);
    }
    if (values.empty()) throw DomainError("ProductionSample: sample is empty");
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("ProductionSample: values must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    values_ = std::move(values);
}

namespace {

// Order statistic for alpha already known to be in [0, 1]; levels below 1/N
// fall back to the minimum.
double order_statistic(std::span<const double> sorted, double alpha) {
    const auto n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::floor(alpha * n + 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return sorted[k - 1];
}

}  // namespace

double empirical_quantile(const ProductionSample& s, double alpha) {
    const auto n = static_cast<double>(s.size());
    if (!(alpha * n >= 1.0 - 1e-9) || !(alpha <= 1.0)) {
        throw DomainError("empirical_quantile: alpha must lie in [1/N, 1]");
    }
    return order_statistic(s.values(), alpha);
}

double production_objective(const ProductionSample& s, const TruncatedLogNormal& law, std::size_t levels) {
    if (levels == 0) throw DomainError("production_objective: need at least one level");
    const Atoms a = atoms(law);
    const double span = 1.0 - a.p1 - a.p0;
    double total = 0.0;
    for (std::size_t l = 0; l < levels; ++l) {
        const double alpha = a.p0 + static_cast<double>(l) / static_cast<double>(levels) * span;
        const double diff = order_statistic(s.values(), alpha) - quantile(law, alpha);
        total += diff * diff;
    }
    return total;
}

namespace {

constexpr double kMomentZeta = -0.25;

TruncatedLogNormal moment_guess(const ProductionSample& s) {
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t n = 0;
    for (double v : s.values()) {
        if (v <= 0.0 || v >= 1.0) continue;
        const double z = std::log(v - kMomentZeta);
        sum += z;
        sum2 += z * z;
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? (sum2 - sum * mean) / static_cast<double>(n - 1) : 0.0;
    return TruncatedLogNormal(mean, std::max(std::sqrt(std::max(var, 0.0)), 0.05), kMomentZeta);
}

TruncatedLogNormal law_from(std::span<const double> p) {
    return TruncatedLogNormal(p[0], std::exp(p[1]), -std::exp(p[2]));
}

}  // namespace

ProductionFit fit_production(const ProductionSample& s, const ProductionFitOptions& options) {
    const bool interior = std::any_of(s.values().begin(), s.values().end(),
                                      [](double v) { return v > 0.0 && v < 1.0; });
    if (!interior) throw FitError("fit_production: degenerate sample (no value strictly inside (0, 1))");
    if (options.levels == 0) throw DomainError("fit_production: need at least one level");

    std::vector<std::string> warnings;
    if (s.size() < 100) warnings.push_back("sample has fewer than 100 observations");

    const TruncatedLogNormal init = options.init ? *options.init : moment_guess(s);
    std::vector<double> start{init.mu(), std::log(init.nu()), std::log(-init.zeta())};
    auto objective = [&](std::span<const double> p) { return production_objective(s, law_from(p), options.levels); };

    SimplexOptions so;
    so.max_iterations = options.max_iterations;
    so.restarts = options.restarts;
    const SimplexResult r = minimize_simplex(objective, start, {0.2, 0.2, 0.3}, so);
    if (!r.converged) warnings.push_back("optimizer hit the iteration limit; returning the best point found");
    return ProductionFit{law_from(r.x), r.value, r.iterations, r.converged, std::move(warnings)};
}

VarianceTargets::VarianceTargets(std::vector<double> h, std::vector<double> v)
    : horizons(std::move(h)), variances(std::move(v)) {
    if (horizons.size() != variances.size()) throw DomainError("VarianceTargets: length mismatch");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (!std::isfinite(horizons[i]) || (i > 0 && !(horizons[i] > horizons[i - 1]))) {
            throw DomainError("VarianceTargets: horizons must be finite and strictly ascending");
        }
        if (!(variances[i] >= 0.0) || !std::isfinite(variances[i])) {
            throw DomainError("VarianceTargets: variances must be finite and nonnegative");
        }
    }
}

VarianceEstimate error_variances_from_data(std::span<const ForecastErrorPair> pairs, const BucketOptions& options) {
    if (!(options.width > 0.0)) throw DomainError("error_variances_from_data: bucket width must be positive");
    const std::size_t min_count = std::max<std::size_t>(options.min_count, 2);

    struct Acc {
        std::size_t n = 0;
        double mean = 0.0;
        double m2 = 0.0;
    };
    std::map<long long, Acc> buckets;
    for (const auto& p : pairs) {
        if (!std::isfinite(p.forecast) || !std::isfinite(p.realized) || !std::isfinite(p.horizon)) {
            throw DomainError("error_variances_from_data: non-finite input");
        }
        if (p.horizon < 0.0) throw DomainError("error_variances_from_data: negative horizon");
        Acc& a = buckets[std::llround(p.horizon / options.width)];
        const double e = p.forecast - p.realized;
        ++a.n;
        const double delta = e - a.mean;
        a.mean += delta / static_cast<double>(a.n);
        a.m2 += delta * (e - a.mean);
    }

    VarianceEstimate out;
    std::vector<double> h;
    std::vector<double> v;
    for (const auto& [index, a] : buckets) {
        const double centre = static_cast<double>(index) * options.width;
        if (a.n < min_count) {
            out.warnings.push_back("horizon bucket " + std::to_string(centre) + " has " + std::to_string(a.n) +
                                   " pairs; excluded");
            continue;
        }
        h.push_back(centre);
        v.push_back(a.m2 / static_cast<double>(a.n - 1));
        out.counts.push_back(a.n);
    }
    out.targets = VarianceTargets(std::move(h), std::move(v));
    return out;
}

double invert_error_variance(const ForecastErrorModel& phi, double v) {
    if (!(v >= 0.0)) throw DomainError("invert_error_variance: variance must be nonnegative");
    const double cap = phi.latent().variance();
    if (v == 0.0) return 0.0;
    if (v >= phi.unconditional_variance()) return cap;
    double lo = 0.0;
    double hi = cap;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * cap; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < v ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Nondecreasing least-squares fit (pool adjacent violators, equal weights).
std::vector<double> isotonic_increasing(const std::vector<double>& y) {
    std::vector<double> level;
    std::vector<std::size_t> width;
    for (double v : y) {
        level.push_back(v);
        width.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const std::size_t w = width.back() + width[width.size() - 2];
            const double merged =
                (level.back() * width.back() + level[level.size() - 2] * width[width.size() - 2]) / w;
            level.pop_back();
            width.pop_back();
            level.back() = merged;
            width.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], level[b]);
    return out;
}

}  // namespace

ThetaSchedule fit_theta_nonparametric(const LatentParams& lat, const VarianceTargets& targets, double horizon) {
    if (targets.horizons.empty()) throw FitError("fit_theta_nonparametric: no targets");
    const ForecastErrorModel phi(lat);
    std::vector<double> raw;
    raw.reserve(targets.variances.size());
    for (double v : targets.variances) raw.push_back(invert_error_variance(phi, v));
    const std::vector<double> theta = isotonic_increasing(raw);

    const std::size_t n = theta.size();
    std::vector<double> times(n);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[n - 1 - i] = horizon - targets.horizons[i];
        values[n - 1 - i] = theta[i];
    }
    return ThetaSchedule::tabulated(std::move(times), std::move(values), horizon, lat.variance());
}

double theta_objective(const ForecastErrorModel& phi, const VarianceTargets& targets,
                       const ThetaSchedule::Parametric& p) {
    const double cap = phi.latent().variance();
    double total = 0.0;
    for (std::size_t i = 0; i < targets.horizons.size(); ++i) {
        const double h = targets.horizons[i];
        const double theta = h >= p.tau_star ? cap : std::min(parametric_theta(p, h), cap);
        const double diff = phi(std::max(theta, 0.0)) - targets.variances[i];
        total += diff * diff;
    }
    return total;
}

ThetaFit fit_theta_parametric(const LatentParams& lat, const VarianceTargets& targets, const ThetaFitOptions& options) {
    if (targets.horizons.size() < 3) throw FitError("fit_theta_parametric: need at least three horizons");
    if (options.starts == 0) throw DomainError("fit_theta_parametric: need at least one start");
    const ForecastErrorModel phi(lat);
    const double var = phi.unconditional_variance();

    double tau_star = options.default_tau_star;
    if (options.tau_star) {
        tau_star = *options.tau_star;
    } else {
        for (std::size_t i = 0; i < targets.horizons.size(); ++i) {
            if (targets.variances[i] >= var) {
                tau_star = targets.horizons[i];
                break;
            }
        }
    }

    auto params = [&](std::span<const double> x) {
        return ThetaSchedule::Parametric{std::abs(x[0]), std::abs(x[1]), std::abs(x[2]), tau_star};
    };
    auto objective = [&](std::span<const double> x) { return theta_objective(phi, targets, params(x)); };

    // Heuristic first start: the jump from the shortest horizon, a linear
    // diffusion through the longest uncapped one.
    const double b0 = std::sqrt(invert_error_variance(phi, targets.variances.front()));
    double h_last = targets.horizons.front();
    double theta_last = b0 * b0;
    for (std::size_t i = 0; i < targets.horizons.size(); ++i) {
        if (targets.horizons[i] >= tau_star || targets.variances[i] >= var) break;
        h_last = targets.horizons[i];
        theta_last = invert_error_variance(phi, targets.variances[i]);
    }
    const double h_span = std::max(h_last, targets.horizons.back() * 1e-3);
    const double s0 = std::sqrt(std::max(theta_last - b0 * b0, 1e-6 * lat.variance()) / h_span);

    SimplexOptions so;
    so.max_iterations = options.max_iterations;
    ThetaFit best{params(std::vector<double>{s0, 0.0, b0}), 0.0, false};
    best.objective = theta_objective(phi, targets, best.params);
    bool first = true;
    for (std::size_t k = 0; k < options.starts; ++k) {
        std::vector<double> start{s0, 0.0, b0};
        if (k > 0) {
            auto rng = substream(options.seed, k, StreamTag::MultiStart);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            start[0] = s0 * std::exp(std::log(4.0) * (2.0 * u(rng) - 1.0));
            start[1] = 2.0 * u(rng) / h_span;
            start[2] = b0 * (0.5 + u(rng));
        }
        const std::vector<double> step{0.25 * start[0] + 1e-4, 0.5 / h_span, 0.2 * start[2] + 1e-3};
        const SimplexResult r = minimize_simplex(objective, start, step, so);
        if (first || r.value < best.objective) {
            best = ThetaFit{params(r.x), r.value, r.converged};
            first = false;
        }
    }
    return best;
}

}  // namespace windtrade

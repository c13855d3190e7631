#include "windtrade/impact.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "windtrade/errors.hpp"
#include "windtrade/normal.hpp"
#include "windtrade/quadrature.hpp"

namespace windtrade {

ImpactParams::ImpactParams(double gamma_, DriftCurve drift_, PenaltyFunction penalty_)
    : gamma(gamma_), drift(std::move(drift_)), penalty(std::move(penalty_)) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("ImpactParams: gamma must be positive");
}

namespace {

// Integral over an interval of length len of the positive part of the affine
// function going from a to b.
double positive_part_integral(double a, double b, double len) {
    if (a >= 0.0 && b >= 0.0) return 0.5 * len * (a + b);
    if (a <= 0.0 && b <= 0.0) return 0.0;
    const double top = std::max(a, b);
    return 0.5 * len * top * top / std::abs(a - b);
}

std::vector<double> remaining_on_grid(const DriftCurve& d, const std::vector<double>& t) {
    std::vector<double> r(t.size(), 0.0);
    for (std::size_t i = t.size() - 1; i-- > 0;) r[i] = r[i + 1] + d.integral(t[i], t[i + 1]);
    return r;
}

}  // namespace

double PontryaginPlan::rate(double t) const {
    return std::max(marginal - drift.remaining(std::clamp(t, 0.0, drift.horizon())), 0.0) / gamma;
}

PontryaginPlan pontryagin_plan(const ImpactParams& ip, double realized, std::size_t ode_nodes, double tolerance) {
    if (ode_nodes < 2) throw DomainError("pontryagin_plan: need at least two grid nodes");
    if (!(tolerance > 0.0)) throw DomainError("pontryagin_plan: tolerance must be positive");
    if (!std::isfinite(realized)) throw DomainError("pontryagin_plan: F_T must be finite");

    const double T = ip.drift.horizon();
    const auto times = uniform_grid(0.0, T, ode_nodes - 1);
    const auto rem = remaining_on_grid(ip.drift, times);
    const double gamma = ip.gamma;

    auto sold = [&](double phi) {
        const double c = ip.penalty.du(realized - phi);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < times.size(); ++i) {
            acc += positive_part_integral(c - rem[i], c - rem[i + 1], times[i + 1] - times[i]);
        }
        return acc / gamma;
    };

    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; hi - sold(hi) < 0.0; ++i) {
        if (i > 60) throw DomainError("pontryagin_plan: cannot bracket the terminal position");
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (mid - sold(mid) < 0.0 ? lo : hi) = mid;
    }
    const double phi_T = 0.5 * (lo + hi);
    const double c = ip.penalty.du(realized - phi_T);

    PontryaginPlan plan{times, {}, {}, phi_T, c, 0.0, 0.0, gamma, ip.drift};
    plan.rates.resize(times.size());
    plan.positions.assign(times.size(), 0.0);
    for (std::size_t i = 0; i < times.size(); ++i) plan.rates[i] = std::max(c - rem[i], 0.0) / gamma;

    double drift_loss = 0.0;
    double impact = 0.0;
    double phi = 0.0;
    // Piece [s0, s1] on which the rate is affine from p0 to p1.
    auto piece = [&](double s0, double s1, double p0, double p1) {
        const double h = s1 - s0;
        if (h <= 0.0) return;
        const double pm = 0.5 * (p0 + p1);
        const double phi_m = phi + 0.25 * h * (p0 + pm);
        const double phi_1 = phi + 0.5 * h * (p0 + p1);
        drift_loss += h / 6.0 * (phi * ip.drift(s0) + 4.0 * phi_m * ip.drift(0.5 * (s0 + s1)) + phi_1 * ip.drift(s1));
        impact += h * (p0 * p0 + p0 * p1 + p1 * p1) / 3.0;
        if (p0 > 0.0 || p1 > 0.0) plan.stop_time = s1;
        phi = phi_1;
    };
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double a = c - rem[i];
        const double b = c - rem[i + 1];
        if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) {
            const double s = times[i] + (times[i + 1] - times[i]) * a / (a - b);
            piece(times[i], s, std::max(a, 0.0) / gamma, 0.0);
            piece(s, times[i + 1], 0.0, std::max(b, 0.0) / gamma);
        } else {
            piece(times[i], times[i + 1], std::max(a, 0.0) / gamma, std::max(b, 0.0) / gamma);
        }
        plan.positions[i + 1] = phi;
    }
    plan.value = drift_loss + 0.5 * gamma * impact + ip.penalty.u(realized - phi);
    return plan;
}

PontryaginPlan pontryagin_no_forecast_plan(const ImpactParams& ip, const ProductionLaw& law, std::size_t ode_nodes,
                                           double tolerance) {
    const auto avg = std::make_shared<AveragedPenalty>(ip.penalty, law, false);
    auto averaged = PenaltyFunction::custom([avg](double x) { return avg->value(x); },
                                            [avg](double x) { return avg->derivative(x); },
                                            [avg](double z) { return avg->inverse_derivative(z); });
    return pontryagin_plan(ImpactParams(ip.gamma, ip.drift, std::move(averaged)), law.mean(), ode_nodes, tolerance);
}

HjbSolution::HjbSolution(std::vector<double> t_grid, std::vector<double> phi_grid, std::vector<double> y_grid,
                         std::vector<double> w, double gamma, std::size_t substeps)
    : t_(std::move(t_grid)),
      phi_(std::move(phi_grid)),
      y_(std::move(y_grid)),
      w_(std::move(w)),
      gamma_(gamma),
      substeps_(substeps) {
    if (t_.size() < 2 || phi_.size() < 2 || y_.size() < 2) throw DomainError("HjbSolution: grids too small");
    const std::size_t slice = phi_.size() * y_.size();
    if (w_.empty() || w_.size() % slice != 0 || w_.size() / slice > t_.size()) {
        throw DomainError("HjbSolution: value tensor does not match the grids");
    }
}

std::vector<double> HjbSolution::x_grid() const {
    std::vector<double> x(y_.size());
    std::transform(y_.begin(), y_.end(), x.begin(), [](double y) { return std::exp(y); });
    return x;
}

double HjbSolution::psi(std::size_t i, std::size_t k, std::size_t j) const {
    if (k + 1 >= phi_.size()) return 0.0;
    const double dphi = phi_[k + 1] - phi_[k];
    return std::max(-(w(i, k + 1, j) - w(i, k, j)) / dphi, 0.0) / gamma_;
}

std::vector<double> HjbSolution::policy() const {
    std::vector<double> out(w_.size());
    for (std::size_t i = 0; i < slices(); ++i) {
        for (std::size_t k = 0; k < phi_.size(); ++k) {
            for (std::size_t j = 0; j < y_.size(); ++j) out[index(i, k, j)] = psi(i, k, j);
        }
    }
    return out;
}

namespace {

struct Cell {
    std::size_t lo;
    double frac;
};

// Uniform-grid lookup, clamped to the ends.
Cell locate(const std::vector<double>& g, double v) {
    const double step = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
    const double s = std::clamp((v - g.front()) / step, 0.0, static_cast<double>(g.size() - 1));
    const auto lo = std::min(static_cast<std::size_t>(s), g.size() - 2);
    return {lo, s - static_cast<double>(lo)};
}

}  // namespace

double HjbSolution::value(std::size_t i, double phi, double x) const {
    if (i >= slices()) throw DomainError("HjbSolution::value: slice not stored");
    const auto a = locate(phi_, phi);
    const auto b = locate(y_, std::log(x));
    const double w00 = w(i, a.lo, b.lo);
    const double w01 = w(i, a.lo, b.lo + 1);
    const double w10 = w(i, a.lo + 1, b.lo);
    const double w11 = w(i, a.lo + 1, b.lo + 1);
    return (1.0 - a.frac) * ((1.0 - b.frac) * w00 + b.frac * w01) + a.frac * ((1.0 - b.frac) * w10 + b.frac * w11);
}

double HjbSolution::slice_rate(std::size_t i, double phi, double y) const {
    const auto a = locate(phi_, phi);
    const auto b = locate(y_, y);
    const double p00 = psi(i, a.lo, b.lo);
    const double p01 = psi(i, a.lo, b.lo + 1);
    const double p10 = psi(i, a.lo + 1, b.lo);
    const double p11 = psi(i, a.lo + 1, b.lo + 1);
    return (1.0 - a.frac) * ((1.0 - b.frac) * p00 + b.frac * p01) + a.frac * ((1.0 - b.frac) * p10 + b.frac * p11);
}

double HjbSolution::rate(double t, double phi, double x) const {
    if (slices() != t_.size()) throw DomainError("HjbSolution::rate: the policy history was not kept");
    const auto c = locate(t_, t);
    const double y = std::log(x);
    const double r0 = slice_rate(c.lo, phi, y);
    if (c.frac == 0.0) return r0;
    return (1.0 - c.frac) * r0 + c.frac * slice_rate(c.lo + 1, phi, y);
}

namespace {

std::vector<double> log_x_grid(const LatentParams& lat, double theta0, const HjbGrid& grid) {
    const double z = normal_quantile(1.0 - grid.tail_probability);
    const double sd = std::sqrt(std::max(theta0, 0.0));
    double lo = std::min({-0.5 * theta0 - z * sd, std::log(lat.x_min()) - 0.25, -0.25});
    const double hi = std::max({-0.5 * theta0 + z * sd, std::log(lat.x_max()) + 0.25, 0.25});
    // One spare interval lets the lower end move down onto a multiple of dy,
    // which puts x = 1 on a node.
    const double dy = (hi - lo) / static_cast<double>(grid.y_nodes - 2);
    lo = -std::ceil(-lo / dy) * dy;
    std::vector<double> y(grid.y_nodes);
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = lo + dy * static_cast<double>(j);
    return y;
}

double max_rate(const std::vector<double>& w, std::size_t nphi, std::size_t ny, double dphi, double gamma) {
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < nphi; ++k) {
        const double* row = &w[k * ny];
        const double* up = &w[(k + 1) * ny];
        for (std::size_t j = 0; j < ny; ++j) best = std::max(best, -(up[j] - row[j]) / dphi);
    }
    return best / gamma;
}

}  // namespace

HjbSolution solve_hjb(const ImpactParams& ip, const LatentParams& lat, const ThetaSchedule& s, const HjbGrid& grid) {
    if (grid.t_nodes < 2 || grid.phi_nodes < 3 || grid.y_nodes < 5) throw DomainError("solve_hjb: grid too small");
    if (!(grid.phi_max > 0.0)) throw DomainError("solve_hjb: phi_max must be positive");
    if (!(grid.tail_probability > 0.0 && grid.tail_probability < 0.5)) {
        throw DomainError("solve_hjb: tail probability must lie in (0, 0.5)");
    }
    if (!(grid.safety > 0.0 && grid.safety <= 1.0)) throw DomainError("solve_hjb: safety must lie in (0, 1]");
    const double T = ip.drift.horizon();
    if (std::abs(s.horizon() - T) > 1e-12 * std::max(1.0, T)) {
        throw DomainError("solve_hjb: schedule and drift horizons differ");
    }
    if (s.first_time() > 0.0) throw DomainError("solve_hjb: schedule does not cover t = 0");

    const auto t = uniform_grid(0.0, T, grid.t_nodes - 1);
    const std::size_t nt = t.size();
    const std::size_t nphi = grid.phi_nodes;
    std::vector<double> theta(nt);
    for (std::size_t i = 0; i < nt; ++i) theta[i] = s(t[i]);
    std::vector<double> sigma2(nt - 1);
    for (std::size_t i = 0; i + 1 < nt; ++i) sigma2[i] = std::max(theta[i] - theta[i + 1], 0.0) / (t[i + 1] - t[i]);

    const auto y = log_x_grid(lat, theta[0], grid);
    const std::size_t ny = y.size();
    const double dy = y[1] - y[0];
    std::vector<double> phi(nphi);
    const double dphi = grid.phi_max / static_cast<double>(nphi - 1);
    for (std::size_t k = 0; k < nphi; ++k) phi[k] = dphi * static_cast<double>(k);

    const auto& curve = lat.curve();
    const auto& pen = ip.penalty;
    const double jump = theta.back();
    std::vector<double> cur(nphi * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        if (jump <= kThetaZero) {
            const double f = curve(std::exp(y[j]));
            for (std::size_t k = 0; k < nphi; ++k) cur[k * ny + j] = pen.u(f - phi[k]);
            continue;
        }
        const double sd = std::sqrt(jump);
        const double shift = y[j] - 0.5 * jump;
        const double cuts[] = {(std::log(lat.x_min()) - shift) / sd, (std::log(lat.x_max()) - shift) / sd};
        for (std::size_t k = 0; k < nphi; ++k) {
            cur[k * ny + j] = gaussian_expectation(
                [&](double z) { return pen.u(curve(std::exp(shift + sd * z)) - phi[k]); }, cuts);
        }
    }

    const double diffusion_bound = (1.0 + 0.5 * dy) / (dy * dy);
    {
        const double psi0 = max_rate(cur, nphi, ny, dphi, ip.gamma);
        double estimate = 0.0;
        for (std::size_t i = 0; i + 1 < nt; ++i) {
            const double bound = sigma2[i] * diffusion_bound + psi0 / dphi;
            estimate += std::ceil((t[i + 1] - t[i]) * bound / grid.safety);
        }
        if (estimate > static_cast<double>(grid.max_substeps)) {
            std::ostringstream msg;
            msg << "solve_hjb: about " << static_cast<std::size_t>(estimate) << " sub-steps needed, budget is "
                << grid.max_substeps;
            std::ostringstream hint;
            hint << "raise max_substeps to " << static_cast<std::size_t>(estimate * 1.5)
                 << " or use fewer phi/y nodes (rate bound " << psi0 << ", dphi " << dphi << ", dy " << dy << ")";
            throw CflError(msg.str(), hint.str());
        }
    }

    const std::size_t slice = nphi * ny;
    std::vector<double> history;
    if (grid.keep_history) {
        history.resize(nt * slice);
        std::copy(cur.begin(), cur.end(), history.begin() + static_cast<std::ptrdiff_t>((nt - 1) * slice));
    }

    auto check_finite = [&](std::size_t i) {
        for (std::size_t k = 0; k < nphi; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                if (!std::isfinite(cur[k * ny + j])) {
                    std::ostringstream msg;
                    msg << "solve_hjb: non-finite value at t=" << t[i] << ", phi=" << phi[k] << ", y=" << y[j];
                    throw std::runtime_error(msg.str());
                }
            }
        }
    };

    std::vector<double> next(slice);
    std::size_t substeps = 0;
    const double inv_2g = 0.5 / ip.gamma;
    for (std::size_t i = nt - 1; i-- > 0;) {
        const double s2 = sigma2[i];
        double now = t[i + 1];
        while (now > t[i]) {
            const double psi_max = max_rate(cur, nphi, ny, dphi, ip.gamma);
            const double bound = s2 * diffusion_bound + psi_max / dphi;
            const double left = now - t[i];
            const double n = std::max(1.0, std::ceil(left * bound / grid.safety));
            const double h = n == 1.0 ? left : left / n;
            if (++substeps > grid.max_substeps) {
                throw CflError("solve_hjb: sub-step budget exhausted",
                               "raise max_substeps or use fewer phi/y nodes");
            }
            const double from = n == 1.0 ? t[i] : now - h;
            const double mu = ip.drift.integral(from, now) / (now - from);
            const double a2 = 0.5 * s2 / (dy * dy);
            const double a1 = 0.5 * s2 / dy;
            for (std::size_t k = 0; k < nphi; ++k) {
                const double* w = &cur[k * ny];
                const double* up = k + 1 < nphi ? &cur[(k + 1) * ny] : nullptr;
                double* out = &next[k * ny];
                const double source = phi[k] * mu;
                for (std::size_t j = 1; j + 1 < ny; ++j) {
                    const double p = up ? std::min((up[j] - w[j]) / dphi, 0.0) : 0.0;
                    const double lap = a2 * (w[j + 1] - 2.0 * w[j] + w[j - 1]) - a1 * (w[j] - w[j - 1]);
                    out[j] = w[j] + h * (lap - inv_2g * p * p + source);
                }
                out[0] = 2.0 * out[1] - out[2];
                out[ny - 1] = 2.0 * out[ny - 2] - out[ny - 3];
            }
            cur.swap(next);
            now = from;
        }
        check_finite(i);
        if (grid.keep_history) {
            std::copy(cur.begin(), cur.end(), history.begin() + static_cast<std::ptrdiff_t>(i * slice));
        }
    }
    return HjbSolution(t, std::move(phi), y, grid.keep_history ? std::move(history) : std::move(cur), ip.gamma,
                       substeps);
}

ImpactOutcome run_rate_rule(const RateRule& rule, const ForecastPath& path, const ImpactParams& ip, bool sell_only,
                            double phi_max) {
    const auto& times = path.times;
    const std::size_t n = times.size();
    if (n < 2 || path.x_values.size() != n || path.f_values.size() != n) {
        throw DomainError("run_rate_rule: malformed path");
    }
    ImpactOutcome out;
    out.plan.times = times;
    out.plan.positions.assign(n, 0.0);
    out.rates.assign(n - 1, 0.0);
    double phi = 0.0;
    double impact = 0.0;
    double mu_prev = ip.drift(times[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = times[k + 1] - times[k];
        double psi = rule(k, times[k], phi, path.x_values[k]);
        if (!std::isfinite(psi)) throw std::runtime_error("run_rate_rule: non-finite trading rate");
        if (sell_only) psi = std::max(psi, 0.0);
        if (phi_max > 0.0 && phi + psi * dt > phi_max) {
            psi = std::max(phi_max - phi, 0.0) / dt;
            out.hit_phi_max = true;
        }
        const double phi_next = phi + psi * dt;
        const double mu_next = ip.drift(times[k + 1]);
        out.drift_loss += 0.5 * dt * (phi * mu_prev + phi_next * mu_next);
        impact += psi * psi * dt;
        out.rates[k] = psi;
        out.plan.positions[k + 1] = phi_next;
        phi = phi_next;
        mu_prev = mu_next;
    }
    out.impact_cost = 0.5 * ip.gamma * impact;
    out.volume_penalty = ip.penalty.u(path.realized() - phi);
    return out;
}

std::vector<ImpactOutcome> simulate_policy(const HjbSolution& sol, std::span<const ForecastPath> paths,
                                           const ImpactParams& ip) {
    const auto& tg = sol.t_grid();
    const double T = tg.back();
    const double dt = tg[1] - tg[0];
    const double tol = 1e-9 * std::max(1.0, T);
    std::vector<ImpactOutcome> out;
    out.reserve(paths.size());
    const RateRule rule = [&sol](std::size_t, double t, double phi, double x) { return sol.rate(t, phi, x); };
    for (const auto& p : paths) {
        if (p.times.size() < 2 || std::abs(p.times.front() - tg.front()) > tol || std::abs(p.times.back() - T) > tol) {
            throw DomainError("simulate_policy: path does not span the HJB time grid");
        }
        for (std::size_t k = 0; k + 1 < p.times.size(); ++k) {
            if (p.times[k + 1] - p.times[k] > dt + tol) {
                throw DomainError("simulate_policy: path grid is coarser than the HJB time grid");
            }
        }
        out.push_back(run_rate_rule(rule, p, ip, true, sol.phi_grid().back()));
    }
    return out;
}

BuySellStrategy::BuySellStrategy(const ImpactParams& ip, std::vector<double> times)
    : ip_(ip), times_(std::move(times)), scaled_gamma_(ip.gamma / ip.penalty.kappa()) {
    const double T = ip_.drift.horizon();
    if (times_.size() < 2) throw DomainError("BuySellStrategy: need at least two times");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1])) throw DomainError("BuySellStrategy: times must ascend");
    }
    if (times_.front() < 0.0 || std::abs(times_.back() - T) > 1e-9 * std::max(1.0, T)) {
        throw DomainError("BuySellStrategy: times must lie in [0, T] and end at T");
    }
    const double kappa = ip_.penalty.kappa();
    const double g = scaled_gamma_;
    auto integrand = [&](double s) { return (g + T - s) * ip_.drift(s) / kappa; };
    weighted_.assign(times_.size(), 0.0);
    for (std::size_t k = times_.size() - 1; k-- > 0;) {
        double err = 0.0;
        weighted_[k] = weighted_[k + 1] + boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                                              integrand, times_[k], times_[k + 1], 15, 1e-11, &err);
    }
}

double BuySellStrategy::rate(std::size_t step, double forecast, double phi) const {
    const double g = scaled_gamma_;
    const double T = times_.back();
    return (forecast - phi - weighted_.at(step) / g) / (g + T - times_.at(step));
}

ImpactOutcome BuySellStrategy::run(const ForecastPath& path) const {
    if (path.times.size() != times_.size()) throw DomainError("BuySellStrategy: path grid mismatch");
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (std::abs(path.times[k] - times_[k]) > 1e-12 * std::max(1.0, times_.back())) {
            throw DomainError("BuySellStrategy: path grid mismatch");
        }
    }
    const RateRule rule = [this, &path](std::size_t k, double, double phi, double) {
        return rate(k, path.f_values[k], phi);
    };
    return run_rate_rule(rule, path, ip_, false);
}

ImpactOutcome buy_sell_plan(const ImpactParams& ip, const ForecastPath& path) {
    return BuySellStrategy(ip, path.times).run(path);
}

}  // namespace windtrade

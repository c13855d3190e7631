#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "windtrade/calib.hpp"
#include "windtrade/dist.hpp"
#include "windtrade/errors.hpp"
#include "windtrade/forecast.hpp"
#include "windtrade/frictionless.hpp"
#include "windtrade/impact.hpp"
#include "windtrade/mc.hpp"

namespace py = pybind11;
using namespace windtrade;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> to_array(std::span<const double> v, std::vector<py::ssize_t> shape) {
    py::array_t<double> out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict plan_dict(const TradePlan& p) {
    py::dict d;
    d["times"] = to_array(p.times);
    d["positions"] = to_array(p.positions);
    d["terminal_lump"] = p.terminal_lump;
    return d;
}

py::dict summary_dict(const PenaltySummary& s) {
    py::dict d;
    d["n"] = s.n;
    d["mean"] = s.mean;
    d["se"] = s.se;
    d["median"] = s.median;
    d["q05"] = s.q05;
    d["q25"] = s.q25;
    d["q75"] = s.q75;
    d["q95"] = s.q95;
    d["bin_edges"] = to_array(s.bin_edges);
    d["counts"] = s.counts;
    return d;
}

}  // namespace

PYBIND11_MODULE(_windtrade, m) {
    m.doc() = "Wind production laws, forecast models and optimal selling strategies";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
    py::register_exception<CflError>(m, "CflError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<LatentParams>(m, "LatentParams")
        .def(py::init<double, double, double>(), py::arg("nu_x"), py::arg("x_min"), py::arg("x_max"))
        .def_property_readonly("nu_x", &LatentParams::nu_x)
        .def_property_readonly("mu_x", &LatentParams::mu_x)
        .def_property_readonly("x_min", &LatentParams::x_min)
        .def_property_readonly("x_max", &LatentParams::x_max)
        .def_property_readonly("variance", &LatentParams::variance)
        .def("__repr__", [](const LatentParams& l) {
            std::ostringstream os;
            os << "LatentParams(nu_x=" << l.nu_x() << ", x_min=" << l.x_min() << ", x_max=" << l.x_max() << ")";
            return os.str();
        });

    py::class_<TruncatedLogNormal>(m, "TruncatedLogNormal")
        .def(py::init<double, double, double>(), py::arg("mu"), py::arg("nu"), py::arg("zeta"))
        .def_property_readonly("mu", &TruncatedLogNormal::mu)
        .def_property_readonly("nu", &TruncatedLogNormal::nu)
        .def_property_readonly("zeta", &TruncatedLogNormal::zeta)
        .def("density", [](const TruncatedLogNormal& d, double y) { return density(d, y); })
        .def("cdf", [](const TruncatedLogNormal& d, double y) { return cdf(d, y); })
        .def("quantile", [](const TruncatedLogNormal& d, double a) { return quantile(d, a); })
        .def("atoms", [](const TruncatedLogNormal& d) {
            const auto a = atoms(d);
            return py::make_tuple(a.p0, a.p1);
        });

    m.def("from_latent", &from_latent, py::arg("latent"));
    m.def("to_latent", &to_latent, py::arg("law"));
    m.def("mean_fprod", &mean_fprod, py::arg("latent"));
    m.def("variance_fprod", &variance_fprod, py::arg("latent"));
    m.def(
        "g", [](const LatentParams& lat, double x, double theta) { return g(lat.curve(), x, theta); },
        py::arg("latent"), py::arg("x"), py::arg("theta"), "E[f_prod(X_T) | X_t = x] with remaining variance theta");
    m.def(
        "error_variance", [](const LatentParams& lat, double theta) { return error_variance(lat, theta); },
        py::arg("latent"), py::arg("theta"));

    py::class_<ThetaSchedule>(m, "ThetaSchedule")
        .def_static(
            "parametric",
            [](double sigma0, double eta, double b, double tau_star, double horizon, double cap) {
                return ThetaSchedule::parametric({sigma0, eta, b, tau_star}, horizon, cap);
            },
            py::arg("sigma0"), py::arg("eta"), py::arg("b"), py::arg("tau_star"), py::arg("horizon"), py::arg("cap"))
        .def_static("tabulated", &ThetaSchedule::tabulated, py::arg("times"), py::arg("values"), py::arg("horizon"),
                    py::arg("cap"))
        .def_static("constant_volatility", &ThetaSchedule::constant_volatility, py::arg("sigma"),
                    py::arg("horizon"), py::arg("cap"))
        .def("__call__", &ThetaSchedule::operator(), py::arg("t"))
        .def_property_readonly("horizon", &ThetaSchedule::horizon)
        .def_property_readonly("cap", &ThetaSchedule::cap);

    m.def(
        "simulate_paths",
        [](const LatentParams& lat, const ThetaSchedule& s, std::vector<double> grid, std::size_t n_paths,
           std::uint64_t seed) {
            const auto paths = simulate_paths(lat, s, grid, n_paths, seed);
            const auto cols = static_cast<py::ssize_t>(grid.size());
            py::array_t<double> x({static_cast<py::ssize_t>(n_paths), cols});
            py::array_t<double> f({static_cast<py::ssize_t>(n_paths), cols});
            auto xs = x.mutable_unchecked<2>();
            auto fs = f.mutable_unchecked<2>();
            for (std::size_t i = 0; i < paths.size(); ++i) {
                for (py::ssize_t k = 0; k < cols; ++k) {
                    xs(i, k) = paths[i].x_values[k];
                    fs(i, k) = paths[i].f_values[k];
                }
            }
            return py::make_tuple(to_array(grid), x, f);
        },
        py::arg("latent"), py::arg("schedule"), py::arg("grid"), py::arg("n_paths"), py::arg("seed"),
        "Returns (times, x, forecast) with one row per path; the last forecast column is realized production.");

    m.def(
        "fit_production",
        [](std::vector<double> values, std::size_t stride) {
            const auto fit = fit_production(ProductionSample(std::move(values), stride));
            py::dict d;
            d["law"] = fit.law;
            d["latent"] = to_latent(fit.law);
            d["objective"] = fit.objective;
            d["iterations"] = fit.iterations;
            d["converged"] = fit.converged;
            d["warnings"] = fit.warnings;
            return d;
        },
        py::arg("values"), py::arg("stride") = 1, "Quantile-distance fit to normalized production in [0, 1].");

    m.def(
        "fit_theta_parametric",
        [](const LatentParams& lat, std::vector<double> horizons, std::vector<double> variances,
           std::optional<double> tau_star) {
            ThetaFitOptions opts;
            opts.tau_star = tau_star;
            const auto fit = fit_theta_parametric(lat, VarianceTargets(std::move(horizons), std::move(variances)), opts);
            py::dict d;
            d["sigma0"] = fit.params.sigma0;
            d["eta"] = fit.params.eta;
            d["b"] = fit.params.b;
            d["tau_star"] = fit.params.tau_star;
            d["objective"] = fit.objective;
            d["converged"] = fit.converged;
            return d;
        },
        py::arg("latent"), py::arg("horizons"), py::arg("variances"), py::arg("tau_star") = py::none());

    m.def(
        "fit_theta_nonparametric",
        [](const LatentParams& lat, std::vector<double> horizons, std::vector<double> variances, double horizon) {
            return fit_theta_nonparametric(lat, VarianceTargets(std::move(horizons), std::move(variances)), horizon);
        },
        py::arg("latent"), py::arg("horizons"), py::arg("variances"), py::arg("horizon"));

    py::class_<DriftCurve>(m, "DriftCurve")
        .def_static("constant", &DriftCurve::constant, py::arg("mu"), py::arg("horizon"))
        .def_static("tabulated", &DriftCurve::tabulated, py::arg("times"), py::arg("values"))
        .def("__call__", &DriftCurve::operator(), py::arg("t"))
        .def("remaining", &DriftCurve::remaining, py::arg("t"))
        .def_property_readonly("horizon", &DriftCurve::horizon);

    py::class_<PenaltyFunction>(m, "PenaltyFunction")
        .def_static("quadratic", &PenaltyFunction::quadratic, py::arg("kappa"))
        .def("u", &PenaltyFunction::u, py::arg("x"))
        .def_property_readonly("kappa", &PenaltyFunction::kappa);

    m.def(
        "exact_forecast_plan",
        [](const PenaltyFunction& p, const DriftCurve& d, double realized) {
            const auto e = exact_forecast_plan(p, d, realized);
            py::dict out = plan_dict(e.plan);
            out["value"] = e.value;
            out["t_star"] = e.t_star;
            out["block"] = e.block;
            return out;
        },
        py::arg("penalty"), py::arg("drift"), py::arg("realized"));

    m.def(
        "no_forecast_plan",
        [](const PenaltyFunction& p, const DriftCurve& d, const TruncatedLogNormal& law) {
            const auto nf = no_forecast_plan(AveragedPenalty(p, ProductionLaw::from(law)), d);
            py::dict out;
            out["value"] = nf.value;
            out["t_star"] = nf.t_star;
            out["block"] = nf.block;
            return out;
        },
        py::arg("penalty"), py::arg("drift"), py::arg("law"));

    m.def(
        "pontryagin_plan",
        [](double gamma, const DriftCurve& d, const PenaltyFunction& p, double realized) {
            const auto plan = pontryagin_plan(ImpactParams(gamma, d, p), realized);
            py::dict out;
            out["times"] = to_array(plan.times);
            out["rates"] = to_array(plan.rates);
            out["positions"] = to_array(plan.positions);
            out["terminal_position"] = plan.terminal_position;
            out["stop_time"] = plan.stop_time;
            out["value"] = plan.value;
            return out;
        },
        py::arg("gamma"), py::arg("drift"), py::arg("penalty"), py::arg("realized"));

    py::class_<HjbGrid>(m, "HjbGrid")
        .def(py::init<>())
        .def_readwrite("t_nodes", &HjbGrid::t_nodes)
        .def_readwrite("phi_nodes", &HjbGrid::phi_nodes)
        .def_readwrite("y_nodes", &HjbGrid::y_nodes)
        .def_readwrite("phi_max", &HjbGrid::phi_max)
        .def_readwrite("max_substeps", &HjbGrid::max_substeps)
        .def_readwrite("keep_history", &HjbGrid::keep_history);

    py::class_<HjbSolution>(m, "HjbSolution")
        .def_property_readonly("t_grid", [](const HjbSolution& s) { return to_array(s.t_grid()); })
        .def_property_readonly("phi_grid", [](const HjbSolution& s) { return to_array(s.phi_grid()); })
        .def_property_readonly("x_grid", [](const HjbSolution& s) { return to_array(s.x_grid()); })
        .def_property_readonly("values",
                               [](const HjbSolution& s) {
                                   return to_array(s.values(), {static_cast<py::ssize_t>(s.slices()),
                                                                static_cast<py::ssize_t>(s.phi_grid().size()),
                                                                static_cast<py::ssize_t>(s.y_grid().size())});
                               })
        .def("value", &HjbSolution::value, py::arg("slice"), py::arg("phi"), py::arg("x"))
        .def("rate", &HjbSolution::rate, py::arg("t"), py::arg("phi"), py::arg("x"))
        .def_property_readonly("substeps", &HjbSolution::substeps);

    m.def(
        "solve_hjb",
        [](double gamma, const DriftCurve& d, const PenaltyFunction& p, const LatentParams& lat,
           const ThetaSchedule& s, const HjbGrid& grid) { return solve_hjb(ImpactParams(gamma, d, p), lat, s, grid); },
        py::arg("gamma"), py::arg("drift"), py::arg("penalty"), py::arg("latent"), py::arg("schedule"),
        py::arg("grid") = HjbGrid{}, py::call_guard<py::gil_scoped_release>());

    m.def(
        "run_experiment",
        [](const LatentParams& lat, const ThetaSchedule& s, const DriftCurve& d, const PenaltyFunction& p,
           double gamma, const std::string& policy, std::size_t n_paths, std::uint64_t seed,
           std::vector<double> grid) {
            ExperimentSpec spec{lat, s, d, p, gamma, parse_policy(policy), n_paths, seed, std::move(grid)};
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(spec);
            }
            std::vector<double> realized;
            std::vector<double> total;
            for (const auto& rec : r.paths) {
                realized.push_back(rec.realized);
                total.push_back(rec.total);
            }
            py::dict out;
            out["summary"] = summary_dict(r.summary);
            out["realized"] = to_array(realized);
            out["total"] = to_array(total);
            out["phi_max_hits"] = r.phi_max_hits;
            return out;
        },
        py::arg("latent"), py::arg("schedule"), py::arg("drift"), py::arg("penalty"), py::arg("gamma"),
        py::arg("policy"), py::arg("n_paths"), py::arg("seed"), py::arg("grid"),
        "Realized penalties of one policy; path i uses the same randomness for every policy.");
}

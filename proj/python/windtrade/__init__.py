"""Wind production laws, forecast models and optimal selling strategies."""

from ._windtrade import (
    CflError,
    DomainError,
    DriftCurve,
    FitError,
    HjbGrid,
    HjbSolution,
    LatentParams,
    ParseError,
    PenaltyFunction,
    ThetaSchedule,
    TruncatedLogNormal,
    error_variance,
    exact_forecast_plan,
    fit_production,
    fit_theta_nonparametric,
    fit_theta_parametric,
    from_latent,
    g,
    mean_fprod,
    no_forecast_plan,
    pontryagin_plan,
    run_experiment,
    simulate_paths,
    solve_hjb,
    to_latent,
    variance_fprod,
)

__all__ = [name for name in dir() if not name.startswith("_")]

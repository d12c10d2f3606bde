"""Comparison methods: two-step NOTEARS + Lasso, and DYNOTEARS.

Both reuse the GraphNOTEARS optimizer, schedule and thresholds so that the
comparison isolates the modeling difference.
"""
from __future__ import annotations

import numpy as np

from .core import DynamicGraphDataset
from .design import LagSpec, StackedDesign, build_stacked
from .solver import (
    FitResult,
    SolverConfig,
    _finish,
    _fit_joint,
    _normalizer,
    _SplitProblem,
    fit_graphnotears,
)


def _without_lags(design: StackedDesign) -> StackedDesign:
    return StackedDesign(
        X=design.X,
        AM=design.AM[:, :0],
        n_eff=design.n_eff,
        n_nodes=design.n_nodes,
        lags=design.lags,
    )


def fit_lasso(design: StackedDesign, cfg: SolverConfig) -> tuple[np.ndarray, float]:
    """Minimize ``1/(2N) ||X - AM P||² + lambda_p |P|_1`` over P; returns (P, objective)."""
    prob = _SplitProblem(
        design.X, design.AM, _normalizer(design, cfg), cfg.lambda_w, cfg.lambda_p, fit_w=False
    )
    sol = prob.minimize(np.zeros(prob.size), 0.0, 0.0, cfg)
    return prob.unpack(sol.x), float(sol.fun)


def fit_notears_lasso(design: StackedDesign, cfg: SolverConfig | None = None) -> FitResult:
    """Static NOTEARS for W (lagged blocks ignored), then an independent Lasso for P."""
    cfg = cfg or SolverConfig()
    run = _fit_joint(_without_lags(design), cfg)
    P, lasso_obj = fit_lasso(design, cfg)
    run["lasso_objective"] = lasso_obj
    result = _finish(run["W"], P, run, cfg, design.lags.lags)
    result.diagnostics["lasso_objective"] = lasso_obj
    return result


def fit_dynotears(
    ds: DynamicGraphDataset,
    lags: LagSpec | None = None,
    cfg: SolverConfig | None = None,
) -> FitResult:
    """GraphNOTEARS on raw lagged features ``X^(t-l)``, i.e. ignoring the interaction graphs."""
    lags = LagSpec.coerce(lags if lags is not None else 1)
    return fit_graphnotears(build_stacked(ds, lags, aggregate=False), lags, cfg)


def _fit_graphnotears(ds: DynamicGraphDataset, lags: LagSpec, cfg: SolverConfig) -> FitResult:
    return fit_graphnotears(build_stacked(ds, lags), lags, cfg)


def _fit_notears_lasso(ds: DynamicGraphDataset, lags: LagSpec, cfg: SolverConfig) -> FitResult:
    return fit_notears_lasso(build_stacked(ds, lags), cfg)


METHODS = {
    "graphnotears": _fit_graphnotears,
    "notears_lasso": _fit_notears_lasso,
    "dynotears": fit_dynotears,
}


def fit_method(name: str, ds: DynamicGraphDataset, lags, cfg: SolverConfig | None = None) -> FitResult:
    """Run one of ``METHODS`` on a dataset."""
    try:
        fit = METHODS[name]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}") from None
    return fit(ds, LagSpec.coerce(lags), cfg or SolverConfig())

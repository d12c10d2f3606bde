"""GraphNOTEARS estimator.

Minimizes the penalized least-squares score

    F(W, P) = 1/(2N) ||X - X W - (A ⊠ M) P||_F^2 + lambda_w |W|_1 + lambda_p |P|_1

subject to the acyclicity constraint h(W) = tr(exp(W ∘ W)) - d = 0, using an
augmented Lagrangian outer loop and L-BFGS-B on split nonnegative variables
(u = u+ - u-) for the smooth inner problems. Estimates are then hard
thresholded.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.sparse.csgraph import connected_components

from .core import (
    InvalidSpec,
    NumericalOverflow,
    ShapeMismatch,
    is_acyclic,
    make_rng,
)
from .design import LagSpec, StackedDesign

log = logging.getLogger(__name__)

# expm is trusted to ~1e-12 relative accuracy below this 1-norm of W ∘ W
EXPM_NORM_LIMIT = 100.0

LOSS_NORMALIZERS = ("nodes", "rows")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the augmented-Lagrangian solve.

    ``loss_normalizer`` picks N in the 1/(2N) loss scaling: ``"nodes"`` uses the
    number of nodes n (the stacked loss is a sum of per-timestamp losses),
    ``"rows"`` uses the stacked row count.
    """

    lambda_w: float = 0.01
    lambda_p: float = 0.01
    tau_w: float = 0.3
    tau_p: float = 0.3
    rho_init: float = 1.0
    alpha_init: float = 0.0
    rho_mult: float = 10.0
    rho_max: float = 1e16
    progress_ratio: float = 0.25
    h_tol: float = 1e-8
    max_dual_iters: int = 100
    inner_max_iters: int = 500
    inner_grad_tol: float = 1e-6
    inner_ftol: float = 1e-12
    lbfgs_memory: int = 10
    loss_normalizer: str = "nodes"
    restarts: int = 0
    restart_seed: int = 0
    restart_scale: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
                raise InvalidSpec(f"{f.name} must be nonnegative, got {v}")
        if not self.rho_mult > 1:
            raise InvalidSpec(f"rho_mult must exceed 1, got {self.rho_mult}")
        if not 0 < self.progress_ratio < 1:
            raise InvalidSpec(f"progress_ratio must lie in (0, 1), got {self.progress_ratio}")
        if self.rho_init <= 0:
            raise InvalidSpec(f"rho_init must be positive, got {self.rho_init}")
        if self.loss_normalizer not in LOSS_NORMALIZERS:
            raise InvalidSpec(
                f"loss_normalizer must be one of {LOSS_NORMALIZERS}, got {self.loss_normalizer!r}"
            )
        if self.max_dual_iters < 1 or self.inner_max_iters < 1 or self.lbfgs_memory < 1:
            raise InvalidSpec("iteration caps and lbfgs_memory must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    """Continuous, thresholded and binary estimates plus solver diagnostics.

    ``P_*`` are stacked (p*d) x d; rows ``i*d:(i+1)*d`` belong to ``lags[i]``.
    """

    W_cont: np.ndarray
    P_cont: np.ndarray
    W_thresh: np.ndarray
    P_thresh: np.ndarray
    W_bin: np.ndarray
    P_bin: np.ndarray
    h_final: float
    objective_final: float
    dual_iters: int
    converged: bool
    lags: tuple[int, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.W_cont.shape[0]

    def P_lag(self, i: int, which: str = "bin") -> np.ndarray:
        """Block of ``P_<which>`` for the i-th lag (0-based position in ``lags``)."""
        P = {"cont": self.P_cont, "thresh": self.P_thresh, "bin": self.P_bin}[which]
        return P[i * self.d : (i + 1) * self.d]


# --- score and constraint -------------------------------------------------


def _check_shapes(W, P, design: StackedDesign) -> tuple[np.ndarray, np.ndarray]:
    W = np.asarray(W, dtype=float)
    P = np.asarray(P, dtype=float)
    d = design.X.shape[1]
    if W.shape != (d, d):
        raise ShapeMismatch(f"W has shape {W.shape}, expected {(d, d)}")
    if P.shape != (design.AM.shape[1], d):
        raise ShapeMismatch(f"P has shape {P.shape}, expected {(design.AM.shape[1], d)}")
    return W, P


def _residual(W, P, design: StackedDesign) -> np.ndarray:
    return design.X - design.X @ W - design.AM @ P


def ls_loss(W, P, design: StackedDesign, normalizer: float | None = None) -> float:
    """``1/(2N) ||X - X W - AM P||_F^2`` with N = ``design.n_eff`` unless given."""
    W, P = _check_shapes(W, P, design)
    N = design.n_eff if normalizer is None else normalizer
    R = _residual(W, P, design)
    return 0.5 / N * float(np.sum(R * R))


def ls_grad(W, P, design: StackedDesign, normalizer: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    W, P = _check_shapes(W, P, design)
    N = design.n_eff if normalizer is None else normalizer
    R = _residual(W, P, design)
    return -design.X.T @ R / N, -design.AM.T @ R / N


def _expm_sq(W: np.ndarray) -> np.ndarray:
    S = W * W
    if np.abs(S).sum(axis=0).max(initial=0.0) > EXPM_NORM_LIMIT:
        raise NumericalOverflow(
            f"||W ∘ W||_1 = {np.abs(S).sum(axis=0).max():.3g} exceeds {EXPM_NORM_LIMIT}"
        )
    return scipy.linalg.expm(S)


def h_acyc(W) -> float:
    """``tr(exp(W ∘ W)) - d``; zero exactly when the support of W is acyclic."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeMismatch(f"W must be square, got {W.shape}")
    return float(np.trace(_expm_sq(W)) - W.shape[0])


def h_grad(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeMismatch(f"W must be square, got {W.shape}")
    return _expm_sq(W).T * (2.0 * W)


def _h_and_grad(W: np.ndarray) -> tuple[float, np.ndarray]:
    E = _expm_sq(W)
    return float(np.trace(E) - W.shape[0]), E.T * (2.0 * W)


# --- thresholding ---------------------------------------------------------


def threshold(M, tau: float) -> np.ndarray:
    """Zero entries with ``|m| < tau``; entries equal to tau are kept."""
    if tau < 0:
        raise InvalidSpec(f"tau must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=float)
    return np.where(np.abs(M) < tau, 0.0, M)


def enforce_dag(W) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Drop the weakest edge lying on a cycle until the support of W is acyclic."""
    W = np.array(W, dtype=float)
    np.fill_diagonal(W, 0.0)
    removed: list[tuple[int, int]] = []
    while not is_acyclic(W != 0):
        _, labels = connected_components(W != 0, directed=True, connection="strong")
        on_cycle = (labels[:, None] == labels[None, :]) & (W != 0)
        mag = np.where(on_cycle, np.abs(W), np.inf)
        j, k = np.unravel_index(np.argmin(mag), mag.shape)
        W[j, k] = 0.0
        removed.append((int(j), int(k)))
    return W, removed


# --- augmented Lagrangian -------------------------------------------------


class _SplitProblem:
    """Quadratic LS score over stacked ``B = [W; P]`` (or ``B = P`` alone) in Gram form.

    With Y the predictor matrix and N the normalizer the score is
    ``0.5 c0 - <B, C> + 0.5 <B, S B>`` where ``S = YᵀY/N``, ``C = YᵀX/N`` and
    ``c0 = ||X||²/N``; evaluation cost does not depend on the sample count.
    """

    def __init__(self, X, AM, normalizer, lambda_w, lambda_p, fit_w=True):
        d = X.shape[1]
        Y = np.hstack([X, AM]) if fit_w else AM
        self.d = d
        self.fit_w = fit_w
        self.m = Y.shape[1]
        self.S = Y.T @ Y / normalizer
        self.C = Y.T @ X / normalizer
        self.c0 = float(np.sum(X * X)) / normalizer
        lam = np.full((self.m, d), lambda_p, dtype=float)
        if fit_w:
            lam[:d] = lambda_w
        self.lam = np.concatenate([lam.ravel(), lam.ravel()])
        upper = np.full((self.m, d), np.inf)
        if fit_w:
            np.fill_diagonal(upper[:d], 0.0)
        self.bounds = scipy.optimize.Bounds(
            np.zeros(2 * self.m * d), np.concatenate([upper.ravel(), upper.ravel()])
        )

    @property
    def size(self) -> int:
        return 2 * self.m * self.d

    def unpack(self, z: np.ndarray) -> np.ndarray:
        k = self.m * self.d
        return (z[:k] - z[k:]).reshape(self.m, self.d)

    def score(self, B: np.ndarray) -> tuple[float, np.ndarray]:
        SB = self.S @ B
        loss = 0.5 * self.c0 - float(np.sum(B * self.C)) + 0.5 * float(np.sum(B * SB))
        return loss, SB - self.C

    def objective(self, z: np.ndarray, rho: float, alpha: float) -> tuple[float, np.ndarray]:
        B = self.unpack(z)
        loss, G = self.score(B)
        obj = loss + float(self.lam @ z)
        if self.fit_w:
            try:
                h, gh = _h_and_grad(B[: self.d])
            except NumericalOverflow:
                # trial point far outside the trusted range; line search backs off
                return math.inf, np.zeros_like(z)
            obj += 0.5 * rho * h * h + alpha * h
            G[: self.d] += (rho * h + alpha) * gh
        g = G.ravel()
        return obj, np.concatenate([g, -g]) + self.lam

    def minimize(self, z0: np.ndarray, rho: float, alpha: float, cfg: SolverConfig):
        return scipy.optimize.minimize(
            self.objective,
            z0,
            args=(rho, alpha),
            jac=True,
            method="L-BFGS-B",
            bounds=self.bounds,
            options={
                "maxiter": cfg.inner_max_iters,
                "gtol": cfg.inner_grad_tol,
                "ftol": cfg.inner_ftol,
                "maxcor": cfg.lbfgs_memory,
            },
        )


def _solve_constrained(prob: _SplitProblem, z0: np.ndarray, cfg: SolverConfig) -> dict:
    rho, alpha = cfg.rho_init, cfg.alpha_init
    z, h = z0, math.inf
    h_hist, rho_hist = [], []
    inner_solves = inner_iters = dual_iters = 0
    obj = math.nan
    for dual_iters in range(1, cfg.max_dual_iters + 1):
        z_new, h_new = z, h
        while rho <= cfg.rho_max:
            sol = prob.minimize(z, rho, alpha, cfg)
            inner_solves += 1
            inner_iters += sol.nit
            if not np.isfinite(sol.fun):
                raise NumericalOverflow(
                    f"objective became non-finite at rho={rho:.3g}, alpha={alpha:.3g}, h={h:.3g}"
                )
            z_new, obj = sol.x, float(sol.fun)
            h_new = h_acyc(prob.unpack(z_new)[: prob.d])
            if h_new > cfg.progress_ratio * h:
                rho *= cfg.rho_mult
            else:
                break
        z, h = z_new, h_new
        alpha += rho * h
        h_hist.append(h)
        rho_hist.append(rho)
        log.debug("dual iter %d: h=%.3e rho=%.1e alpha=%.3e", dual_iters, h, rho, alpha)
        if h <= cfg.h_tol or rho > cfg.rho_max:
            break
    return {
        "z": z,
        "h": h,
        "rho": rho,
        "alpha": alpha,
        "objective": obj,
        "dual_iters": dual_iters,
        "converged": h <= cfg.h_tol,
        "h_history": h_hist,
        "rho_history": rho_hist,
        "inner_solves": inner_solves,
        "inner_iters": inner_iters,
    }


def _restart_points(prob: _SplitProblem, cfg: SolverConfig) -> list[np.ndarray]:
    points = [np.zeros(prob.size)]
    for r in range(cfg.restarts):
        rng = make_rng(cfg.restart_seed + r)
        z = rng.uniform(0.0, cfg.restart_scale, prob.size)
        points.append(np.minimum(z, prob.bounds.ub))
    return points


def _normalizer(design: StackedDesign, cfg: SolverConfig) -> float:
    return float(design.n_nodes if cfg.loss_normalizer == "nodes" else design.n_eff)


def _fit_joint(design: StackedDesign, cfg: SolverConfig) -> dict:
    """Augmented-Lagrangian fit of (W, P) on a design; returns raw estimates and diagnostics."""
    d = design.d
    N = _normalizer(design, cfg)
    prob = _SplitProblem(design.X, design.AM, N, cfg.lambda_w, cfg.lambda_p, fit_w=True)
    best = None
    for z0 in _restart_points(prob, cfg):
        run = _solve_constrained(prob, z0, cfg)
        key = (not run["converged"], run["objective"])
        if best is None or key < best[0]:
            best = (key, run)
    run = best[1]
    B = prob.unpack(run["z"])
    W, P = B[:d].copy(), B[d:].copy()
    np.fill_diagonal(W, 0.0)

    # never hand back something worse than the (feasible) zero start
    zero_obj = 0.5 * prob.c0
    reverted = run["objective"] > zero_obj
    if reverted:
        W, P = np.zeros_like(W), np.zeros_like(P)
        run["objective"], run["h"] = zero_obj, 0.0
        run["converged"] = True
    run.update(W=W, P=P, reverted_to_zero=reverted, normalizer=N)
    return run


def _finish(W, P, run: dict, cfg: SolverConfig, lags: tuple[int, ...]) -> FitResult:
    W_thresh = threshold(W, cfg.tau_w)
    P_thresh = threshold(P, cfg.tau_p)
    W_thresh, removed = enforce_dag(W_thresh)
    diagnostics = {
        k: run[k]
        for k in (
            "rho",
            "alpha",
            "h_history",
            "rho_history",
            "inner_solves",
            "inner_iters",
            "reverted_to_zero",
            "normalizer",
        )
        if k in run
    }
    diagnostics["removed_cycle_edges"] = removed
    if removed:
        log.warning("thresholded W was cyclic; removed %d edge(s) %s", len(removed), removed)
    if not run["converged"]:
        log.warning("augmented Lagrangian stopped with h=%.3e > h_tol=%.1e", run["h"], cfg.h_tol)
    return FitResult(
        W_cont=W,
        P_cont=P,
        W_thresh=W_thresh,
        P_thresh=P_thresh,
        W_bin=(W_thresh != 0).astype(int),
        P_bin=(P_thresh != 0).astype(int),
        h_final=float(run["h"]),
        objective_final=float(run["objective"]),
        dual_iters=int(run["dual_iters"]),
        converged=bool(run["converged"]),
        lags=tuple(lags),
        diagnostics=diagnostics,
    )


def fit_graphnotears(
    design: StackedDesign,
    lags: LagSpec | None = None,
    cfg: SolverConfig | None = None,
) -> FitResult:
    """Learn ``W`` and ``P`` jointly from a stacked design.

    A run that stops with ``h > h_tol`` is returned with ``converged=False``;
    callers that need a hard failure raise ``NotConverged`` themselves.
    """
    cfg = cfg or SolverConfig()
    lags = design.lags if lags is None else LagSpec.coerce(lags)
    if lags.p * design.d != design.AM.shape[1]:
        raise ShapeMismatch(
            f"{lags.p} lags need {lags.p * design.d} lagged columns, design has {design.AM.shape[1]}"
        )
    run = _fit_joint(design, cfg)
    return _finish(run["W"], run["P"], run, cfg, lags.lags)

import numpy as np
import pytest

from graphnotears.baselines import METHODS, fit_lasso, fit_method, fit_notears_lasso
from graphnotears.core import DynamicGraphDataset, is_acyclic
from graphnotears.design import LagSpec, StackedDesign, build_stacked
from graphnotears.simulate import GraphModelSpec, simulate_dataset
from graphnotears.solver import SolverConfig, threshold


def cd_lasso(X, AM, N, lam, sweeps=5000, tol=1e-14):
    """Cyclic coordinate descent for 1/(2N)||X - AM P||^2 + lam |P|_1, column by column."""
    a = np.sum(AM * AM, axis=0) / N
    P = np.zeros((AM.shape[1], X.shape[1]))
    for k in range(X.shape[1]):
        r = X[:, k].copy()
        for _ in range(sweeps):
            delta = 0.0
            for j in range(AM.shape[1]):
                if a[j] == 0:
                    continue
                old = P[j, k]
                rho = AM[:, j] @ r / N + a[j] * old
                new = np.sign(rho) * max(abs(rho) - lam, 0.0) / a[j]
                if new != old:
                    r -= AM[:, j] * (new - old)
                    P[j, k] = new
                    delta = max(delta, abs(new - old))
            if delta < tol:
                break
    return P


def lasso_objective(X, AM, P, N, lam):
    R = X - AM @ P
    return 0.5 / N * np.sum(R * R) + lam * np.abs(P).sum()


def _design(X, AM, n_nodes=None):
    return StackedDesign(
        X=X, AM=AM, n_eff=X.shape[0], n_nodes=n_nodes or X.shape[0], lags=LagSpec.contiguous(AM.shape[1] // X.shape[1])
    )


@pytest.mark.parametrize("lam", [0.01, 0.1, 0.5])
def test_lasso_matches_coordinate_descent(lam):
    rng = np.random.default_rng(int(lam * 100))
    AM = rng.standard_normal((200, 8)) @ np.diag(rng.uniform(0.3, 2, 8))
    P_true = rng.normal(size=(8, 4)) * (rng.random((8, 4)) < 0.4)
    X = AM @ P_true + 0.3 * rng.standard_normal((200, 4))
    cfg = SolverConfig(lambda_p=lam, inner_grad_tol=1e-10)
    P, obj = fit_lasso(_design(X, AM), cfg)
    P_cd = cd_lasso(X, AM, 200, lam)
    assert obj == pytest.approx(lasso_objective(X, AM, P_cd, 200, lam), rel=1e-8)
    assert np.max(np.abs(P - P_cd)) < 1e-5


def test_lasso_uses_configured_normalizer():
    rng = np.random.default_rng(1)
    AM = rng.standard_normal((90, 3))
    X = AM @ np.eye(3) + 0.1 * rng.standard_normal((90, 3))
    design = _design(X, AM, n_nodes=30)
    P, _ = fit_lasso(design, SolverConfig(lambda_p=0.2, inner_grad_tol=1e-10))
    assert np.max(np.abs(P - cd_lasso(X, AM, 30, 0.2))) < 1e-5
    P, _ = fit_lasso(design, SolverConfig(lambda_p=0.2, inner_grad_tol=1e-10, loss_normalizer="rows"))
    assert np.max(np.abs(P - cd_lasso(X, AM, 90, 0.2))) < 1e-5


def test_lasso_on_independent_features_thresholds_to_zero():
    rng = np.random.default_rng(2)
    X, AM = rng.standard_normal((3000, 5)), rng.standard_normal((3000, 5))
    P, _ = fit_lasso(_design(X, AM, n_nodes=500), SolverConfig())
    assert not threshold(P, 0.3).any()


def test_lasso_with_zero_lagged_block_returns_zero():
    rng = np.random.default_rng(3)
    P, obj = fit_lasso(_design(rng.standard_normal((50, 3)), np.zeros((50, 6))), SolverConfig())
    assert not P.any()
    assert np.isfinite(obj)


def test_step_one_ignores_lagged_block():
    ds, _ = simulate_dataset(80, 4, 6, 1, seed=4)
    design = build_stacked(ds, 1)
    shuffled = _design(design.X, np.random.default_rng(0).standard_normal(design.AM.shape), design.n_nodes)
    a = fit_notears_lasso(design)
    b = fit_notears_lasso(shuffled)
    assert a.W_cont.tobytes() == b.W_cont.tobytes()
    assert not np.array_equal(a.P_cont, b.P_cont)


def test_dynotears_equals_graphnotears_without_interactions():
    ds, _ = simulate_dataset(60, 4, 6, 2, seed=5)
    empty = DynamicGraphDataset(features=ds.features, adjacency=tuple(np.zeros_like(a) for a in ds.adjacency))
    g = fit_method("graphnotears", empty, 2)
    d = fit_method("dynotears", empty, 2)
    for name in ("W_cont", "P_cont", "W_bin", "P_bin"):
        assert getattr(g, name).tobytes() == getattr(d, name).tobytes()


def test_dynotears_design_is_misspecified_on_dense_graphs():
    ds, truth = simulate_dataset(100, 4, 7, 1, spec=GraphModelSpec(interaction_prob=0.5), seed=6)
    graph = build_stacked(ds, 1)
    raw = build_stacked(ds, 1, aggregate=False)
    R_graph = graph.X - graph.X @ truth.W - graph.AM @ truth.P_stacked
    R_raw = raw.X - raw.X @ truth.W - raw.AM @ truth.P_stacked
    # with the true parameters the aggregated design leaves only the noise behind
    extra = R_raw - R_graph
    assert np.allclose(extra, (graph.AM - raw.AM) @ truth.P_stacked, atol=1e-10)
    assert np.linalg.norm(extra) > 0.5 * np.linalg.norm(R_graph)


@pytest.mark.parametrize("method", sorted(METHODS))
def test_every_method_is_acyclic_and_deterministic(method):
    ds, _ = simulate_dataset(60, 5, 5, 2, seed=7)
    a = fit_method(method, ds, 2)
    b = fit_method(method, ds, 2)
    assert is_acyclic(a.W_bin)
    assert a.P_bin.shape == (10, 5)
    for name in ("W_cont", "P_cont", "W_bin", "P_bin"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_unknown_method():
    ds, _ = simulate_dataset(5, 2, 3, 1, seed=0)
    with pytest.raises(ValueError):
        fit_method("pc", ds, 1)

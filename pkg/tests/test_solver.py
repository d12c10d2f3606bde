import math

import numpy as np
import pytest

from conftest import finite_diff, max_rel_err
from graphnotears.core import InvalidSpec, NoiseSpec, NumericalOverflow, ShapeMismatch, is_acyclic
from graphnotears.design import LagSpec, StackedDesign, build_stacked
from graphnotears.metrics import score_inter, score_intra, split_lags
from graphnotears.simulate import simulate_dataset
from graphnotears.solver import (
    SolverConfig,
    _SplitProblem,
    enforce_dag,
    fit_graphnotears,
    h_acyc,
    h_grad,
    ls_grad,
    ls_loss,
    threshold,
)


def taylor_expm(M, terms=40):
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def random_design(rng, n_rows, d, p):
    X = rng.standard_normal((n_rows, d))
    AM = rng.standard_normal((n_rows, p * d))
    return StackedDesign(X=X, AM=AM, n_eff=n_rows, n_nodes=max(1, n_rows // 3), lags=LagSpec.contiguous(p))


# loss and gradient


def test_loss_examples():
    one = StackedDesign(X=np.ones((1, 1)), AM=np.ones((1, 1)), n_eff=1, n_nodes=1, lags=LagSpec((1,)))
    assert ls_loss([[0.0]], [[0.0]], one) == 0.5
    gW, gP = ls_grad([[0.0]], [[0.0]], one)
    assert gW.tolist() == [[-1.0]] and gP.tolist() == [[-1.0]]
    zero = StackedDesign(X=np.zeros((4, 2)), AM=np.zeros((4, 2)), n_eff=4, n_nodes=4, lags=LagSpec((1,)))
    assert ls_loss(np.zeros((2, 2)), np.zeros((2, 2)), zero) == 0.0


def _exogenous_design(rng, n_rows=300, d=5, p=2):
    # lagged block drawn freely, X solved from X = X W + AM P with no noise at all
    W = np.triu(rng.uniform(0.5, 2.0, (d, d)) * (rng.random((d, d)) < 0.5), 1)
    P = rng.uniform(0.5, 2.0, (p * d, d)) * (rng.random((p * d, d)) < 0.3)
    AM = rng.standard_normal((n_rows, p * d))
    X = AM @ P @ np.linalg.inv(np.eye(d) - W)
    design = StackedDesign(X=X, AM=AM, n_eff=n_rows, n_nodes=n_rows, lags=LagSpec.contiguous(p))
    return design, W, P


def test_loss_vanishes_at_truth_without_noise():
    design, W, P = _exogenous_design(np.random.default_rng(3))
    at_zero = ls_loss(np.zeros_like(W), np.zeros_like(P), design)
    assert ls_loss(W, P, design) <= 1e-18 * at_zero
    gW, gP = ls_grad(W, P, design)
    assert np.abs(gW).max() <= 1e-9 and np.abs(gP).max() <= 1e-9


def test_simulation_is_homogeneous_in_noise_scale():
    # the only excitation is Z, so shrinking the noise shrinks every feature by the same factor
    small, _ = simulate_dataset(50, 5, 7, 1, noise=NoiseSpec("gaussian", 1e-6), seed=0)
    unit, _ = simulate_dataset(50, 5, 7, 1, noise=NoiseSpec("gaussian", 1.0), seed=0)
    for a, b in zip(small.features, unit.features):
        assert np.allclose(a, 1e-6 * b, rtol=1e-9, atol=0)


def test_loss_shape_checks():
    design = random_design(np.random.default_rng(0), 6, 2, 1)
    with pytest.raises(ShapeMismatch):
        ls_loss(np.zeros((3, 3)), np.zeros((2, 2)), design)
    with pytest.raises(ShapeMismatch):
        ls_grad(np.zeros((2, 2)), np.zeros((4, 2)), design)


@pytest.mark.parametrize("seed", range(10))
def test_loss_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d, p = rng.integers(1, 11), rng.integers(1, 3)
    design = random_design(rng, 40, d, p)
    W, P = rng.normal(size=(d, d)), rng.normal(size=(p * d, d))
    gW, gP = ls_grad(W, P, design)
    assert max_rel_err(gW, finite_diff(lambda w: ls_loss(w, P, design), W)) < 1e-5
    assert max_rel_err(gP, finite_diff(lambda q: ls_loss(W, q, design), P)) < 1e-5


def test_explicit_normalizer_scales_loss():
    design = random_design(np.random.default_rng(1), 12, 3, 1)
    W, P = np.zeros((3, 3)), np.ones((3, 3))
    assert ls_loss(W, P, design, normalizer=3) == pytest.approx(4 * ls_loss(W, P, design))


# acyclicity function


def test_h_examples():
    assert h_acyc(np.zeros((4, 4))) == 0.0
    rng = np.random.default_rng(0)
    assert abs(h_acyc(np.triu(rng.normal(size=(6, 6)), 1))) <= 1e-10
    two_cycle = np.array([[0.0, 1.0], [1.0, 0.0]])
    oracle = np.trace(taylor_expm(two_cycle * two_cycle)) - 2
    assert oracle == pytest.approx(2 * math.cosh(1) - 2, abs=1e-14)
    assert h_acyc(two_cycle) == pytest.approx(1.0861612696304874, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_h_matches_taylor_oracle(seed):
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.5, size=(6, 6))
    oracle = np.trace(taylor_expm(W * W, terms=60)) - 6
    assert h_acyc(W) == pytest.approx(oracle, rel=1e-12)


def test_h_grad_examples():
    assert not h_grad(np.zeros((3, 3))).any()
    a = np.array([0.3, -1.2, 0.8])
    assert np.allclose(h_grad(np.diag(a)), np.diag(2 * a * np.exp(a * a)), rtol=1e-13, atol=0)
    assert h_acyc(np.diag(a)) == pytest.approx(np.sum(np.exp(a * a)) - 3, rel=1e-13)


@pytest.mark.parametrize("seed", range(10))
def test_h_grad_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 11))
    W = rng.normal(scale=0.4, size=(d, d))
    assert max_rel_err(h_grad(W), finite_diff(h_acyc, W)) < 1e-5


def test_h_overflow_guard():
    with pytest.raises(NumericalOverflow):
        h_acyc(np.full((2, 2), 11.0))
    with pytest.raises(NumericalOverflow):
        h_grad(np.full((2, 2), 11.0))
    with pytest.raises(ShapeMismatch):
        h_acyc(np.zeros((2, 3)))


# thresholding and cycle repair


def test_threshold_examples():
    M = np.array([[0, 0.2], [0.5, 0]])
    assert threshold(M, 0.3).tolist() == [[0, 0], [0.5, 0]]
    assert np.array_equal(threshold(M, 0.0), M)
    assert threshold([[0.3, -0.3, 0.29]], 0.3).tolist() == [[0.3, -0.3, 0.0]]
    with pytest.raises(InvalidSpec):
        threshold(M, -1)


def test_enforce_dag_drops_weakest_cycle_edge():
    W = np.array([[0, 0.5, 0], [0, 0, 0.9], [0.7, 0, 0], ])
    W_dag, removed = enforce_dag(W)
    assert removed == [(0, 1)]
    assert is_acyclic(W_dag)
    # an edge off every cycle survives even when it is the weakest
    W2 = np.array([[0, 0.9, 0.1], [0.8, 0, 0], [0, 0, 0]])
    W2_dag, removed = enforce_dag(W2)
    assert removed == [(1, 0)] and W2_dag[0, 2] == 0.1


def test_enforce_dag_leaves_dags_alone():
    W = np.triu(np.ones((4, 4)), 1)
    W_dag, removed = enforce_dag(W)
    assert removed == [] and np.array_equal(W_dag, W)


# split-variable objective


def _split_problem(rng, d=4, p=2, fit_w=True):
    design = random_design(rng, 60, d, p)
    return design, _SplitProblem(design.X, design.AM, 20.0, 0.05, 0.02, fit_w=fit_w)


def test_gram_form_equals_residual_form():
    rng = np.random.default_rng(2)
    design, prob = _split_problem(rng)
    B = rng.normal(size=(prob.m, prob.d))
    loss, G = prob.score(B)
    assert loss == pytest.approx(ls_loss(B[:4], B[4:], design, normalizer=20.0), rel=1e-12)
    gW, gP = ls_grad(B[:4], B[4:], design, normalizer=20.0)
    assert np.allclose(G, np.vstack([gW, gP]), rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("fit_w", [True, False])
def test_split_objective_gradient(fit_w):
    rng = np.random.default_rng(4)
    _, prob = _split_problem(rng, fit_w=fit_w)
    z = rng.uniform(0, 0.3, prob.size)
    z = np.minimum(z, prob.bounds.ub)
    f = lambda v: prob.objective(v, 10.0, 0.7)[0]  # noqa: E731
    _, g = prob.objective(z, 10.0, 0.7)
    assert max_rel_err(g, finite_diff(f, z)) < 1e-5


def test_acyclicity_term_ignores_lag_weights():
    rng = np.random.default_rng(5)
    _, prob = _split_problem(rng)
    z = np.minimum(rng.uniform(0, 0.5, prob.size), prob.bounds.ub)
    z2 = z.copy()
    k = prob.m * prob.d
    lag_part = np.zeros((prob.m, prob.d), dtype=bool)
    lag_part[prob.d:] = True
    mask = np.concatenate([lag_part.ravel(), lag_part.ravel()])
    z2[mask] += rng.uniform(0, 1, mask.sum())
    assert k == mask.size // 2
    penalty = lambda v: prob.objective(v, 3.0, 0.4)[0] - prob.objective(v, 0.0, 0.0)[0]  # noqa: E731
    assert penalty(z) == pytest.approx(penalty(z2), rel=1e-12)
    assert h_acyc(prob.unpack(z)[: prob.d]) == h_acyc(prob.unpack(z2)[: prob.d])


def test_diagonal_of_w_is_pinned():
    _, prob = _split_problem(np.random.default_rng(6))
    ub = prob.bounds.ub.reshape(2, prob.m, prob.d)
    assert np.all(np.diag(ub[0, : prob.d]) == 0) and np.all(np.diag(ub[1, : prob.d]) == 0)
    assert np.isinf(ub[0, prob.d :]).all()


# full fits


@pytest.fixture(scope="module")
def headline_fit():
    ds, truth = simulate_dataset(500, 5, 7, 1, seed=0)
    return ds, truth, fit_graphnotears(build_stacked(ds, 1))


def test_support_recovery_on_headline_seed(headline_fit):
    _, truth, res = headline_fit
    assert res.converged
    assert score_intra(res.W_bin, truth.W).f1 == 1.0
    assert score_inter(split_lags(res.P_bin, 5), truth.P).pooled.f1 == 1.0


def test_outer_loop_histories(headline_fit):
    _, _, res = headline_fit
    rho = res.diagnostics["rho_history"]
    h = res.diagnostics["h_history"]
    assert all(b >= a for a, b in zip(rho, rho[1:]))
    assert all(b <= a or b <= 1e-8 for a, b in zip(h, h[1:]))
    assert h[-1] == res.h_final <= 1e-8
    assert len(h) == res.dual_iters


def test_fit_never_worse_than_zero(headline_fit):
    ds, _, res = headline_fit
    design = build_stacked(ds, 1)
    N = design.n_nodes
    at_zero = ls_loss(np.zeros((5, 5)), np.zeros((5, 5)), design, normalizer=N)
    assert res.objective_final <= at_zero
    assert not res.diagnostics["reverted_to_zero"]


def test_fit_result_shapes_and_invariants(headline_fit):
    _, _, res = headline_fit
    assert res.W_cont.shape == (5, 5) and res.P_cont.shape == (5, 5)
    assert res.lags == (1,)
    assert np.all(np.diag(res.W_cont) == 0)
    assert is_acyclic(res.W_bin) and h_acyc(res.W_cont) <= 1e-8
    assert set(np.unique(res.W_bin)) <= {0, 1}
    assert np.array_equal(res.P_lag(0), res.P_bin)


def test_pure_noise_with_heavy_penalty_gives_zero():
    rng = np.random.default_rng(9)
    design = StackedDesign(
        X=rng.standard_normal((600, 4)), AM=rng.standard_normal((600, 4)),
        n_eff=600, n_nodes=600, lags=LagSpec((1,)),
    )
    res = fit_graphnotears(design, cfg=SolverConfig(lambda_w=1.0, lambda_p=1.0))
    assert not res.W_cont.any() and not res.P_cont.any()
    assert res.converged


def test_fit_is_deterministic():
    ds, _ = simulate_dataset(60, 4, 5, 2, seed=12)
    design = build_stacked(ds, 2)
    a = fit_graphnotears(design)
    b = fit_graphnotears(design)
    for name in ("W_cont", "P_cont", "W_bin", "P_bin"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_fit_rejects_wrong_lag_count():
    ds, _ = simulate_dataset(20, 3, 5, 2, seed=0)
    with pytest.raises(ShapeMismatch):
        fit_graphnotears(build_stacked(ds, 2), lags=LagSpec((1,)))


def test_restarts_keep_best_run():
    ds, _ = simulate_dataset(60, 4, 5, 1, seed=13)
    design = build_stacked(ds, 1)
    base = fit_graphnotears(design)
    multi = fit_graphnotears(design, cfg=SolverConfig(restarts=2))
    assert multi.converged
    assert multi.objective_final <= base.objective_final + 1e-9


@pytest.mark.slow
def test_two_lag_gaussian_recovers_w():
    ds, truth = simulate_dataset(500, 5, 7, 2, seed=0)
    res = fit_graphnotears(build_stacked(ds, 2))
    assert score_intra(res.W_bin, truth.W).f1 == 1.0


@pytest.mark.parametrize(
    "kwargs", [{"lambda_w": -1}, {"rho_mult": 1}, {"progress_ratio": 1}, {"loss_normalizer": "x"}]
)
def test_solver_config_validation(kwargs):
    with pytest.raises(InvalidSpec):
        SolverConfig(**kwargs)

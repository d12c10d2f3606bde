"""Synthetic ground truth and dynamic-graph observations.

The generation protocol has three steps: sample the weighted intra-slice DAG
``W`` and the inter-slice matrices ``P^(1..p)``, sample one interaction graph
per timestamp, then run the structural VAR

    X^(t) = X^(t) W + sum_i Â^(t-i) X^(t-i) P^(i) + Z

forward in time, generating columns in a topological order of ``W``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import (
    CyclicW,
    DynamicGraphDataset,
    GroundTruthModel,
    InvalidSpec,
    NoiseSpec,
    ShapeMismatch,
    make_rng,
    topological_order,
)

INTRA_MODELS = ("ER", "BA")
INTER_MODELS = ("ER", "SBM")

_DEFAULT_INTRA_DEGREE = {"ER": 2.0, "BA": 1}


@dataclass(frozen=True)
class GraphModelSpec:
    """Random-graph settings for W, P and the interaction graphs.

    ``intra_mean_degree`` is the expected degree for ER (so a d-node graph has
    d * degree / 2 expected edges) and the attachment count for BA; left as
    None it resolves to 2 (ER) or 1 (BA).

    ``inter_edge_prob`` is the ER probability of each lag-matrix entry. Left as
    None it is ``min(1, inter_mean_degree / d)``, i.e. each variable has
    ``inter_mean_degree`` expected parents per lag whatever d is. SBM block
    probabilities default to 4x that probability (capped at 1) within blocks
    and a quarter of it between blocks.
    """

    intra_model: str = "ER"
    inter_model: str = "ER"
    intra_mean_degree: float | None = None
    inter_edge_prob: float | None = None
    inter_mean_degree: float = 1.0
    sbm_blocks: int = 2
    sbm_within_prob: float | None = None
    sbm_between_prob: float | None = None
    weight_low: float = 0.5
    weight_high: float = 2.0
    interaction_prob: float = 0.1
    static_adjacency: bool = False

    def __post_init__(self):
        intra = str(self.intra_model).upper()
        inter = str(self.inter_model).upper()
        if intra not in INTRA_MODELS:
            raise InvalidSpec(f"intra_model must be one of {INTRA_MODELS}, got {self.intra_model!r}")
        if inter not in INTER_MODELS:
            raise InvalidSpec(f"inter_model must be one of {INTER_MODELS}, got {self.inter_model!r}")
        object.__setattr__(self, "intra_model", intra)
        object.__setattr__(self, "inter_model", inter)
        if self.intra_mean_degree is None:
            object.__setattr__(self, "intra_mean_degree", _DEFAULT_INTRA_DEGREE[intra])

        if not self.intra_mean_degree > 0:
            raise InvalidSpec(f"intra_mean_degree must be positive, got {self.intra_mean_degree}")
        if intra == "BA" and int(self.intra_mean_degree) != self.intra_mean_degree:
            raise InvalidSpec(f"BA attachment count must be an integer, got {self.intra_mean_degree}")
        if not self.inter_mean_degree > 0:
            raise InvalidSpec(f"inter_mean_degree must be positive, got {self.inter_mean_degree}")
        for name in ("inter_edge_prob", "sbm_within_prob", "sbm_between_prob", "interaction_prob"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1], got {v}")
        if int(self.sbm_blocks) != self.sbm_blocks or self.sbm_blocks < 1:
            raise InvalidSpec(f"sbm_blocks must be a positive integer, got {self.sbm_blocks}")
        if not 0 < self.weight_low < self.weight_high:
            raise InvalidSpec(
                f"need 0 < weight_low < weight_high, got {self.weight_low}, {self.weight_high}"
            )

    def inter_prob(self, d: int) -> float:
        if self.inter_edge_prob is not None:
            return self.inter_edge_prob
        return min(1.0, self.inter_mean_degree / d)

    def sbm_probs(self, d: int) -> tuple[float, float]:
        """(within, between) block probabilities for d variables."""
        prob = self.inter_prob(d)
        within = min(1.0, 4 * prob) if self.sbm_within_prob is None else self.sbm_within_prob
        between = prob / 4 if self.sbm_between_prob is None else self.sbm_between_prob
        return within, between

    def resolved(self, d: int) -> dict:
        """Settings with every d-dependent default filled in, for result files."""
        out = asdict(self)
        out["inter_edge_prob"] = self.inter_prob(d)
        out["sbm_within_prob"], out["sbm_between_prob"] = self.sbm_probs(d)
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def _orient_by_random_order(U: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # U is an undirected graph, given as its upper triangle in position space
    d = U.shape[0]
    perm = rng.permutation(d)
    B = np.zeros((d, d))
    B[np.ix_(perm, perm)] = np.triu(U, 1)
    return B


def _barabasi_albert(d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    G = np.zeros((d, d))
    if d <= m + 1:
        G[:] = 1.0
        np.fill_diagonal(G, 0.0)
        return G
    # seed graph: star on nodes 0..m
    G[0, 1 : m + 1] = G[1 : m + 1, 0] = 1.0
    for v in range(m + 1, d):
        deg = G[:v, :v].sum(axis=1)
        targets = rng.choice(v, size=m, replace=False, p=deg / deg.sum())
        G[v, targets] = G[targets, v] = 1.0
    return G


def gen_intra_dag(d: int, spec: GraphModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Binary acyclic support for ``W``.

    An undirected ER or BA graph is drawn, a uniformly random permutation is
    taken as the topological order, and each edge points from the earlier to
    the later vertex. ER edge probability is ``min(1, degree / (d - 1))``.
    """
    if d < 1:
        raise InvalidSpec(f"d must be >= 1, got {d}")
    if d == 1:
        return np.zeros((1, 1))
    if spec.intra_model == "ER":
        prob = min(1.0, spec.intra_mean_degree / (d - 1))
        U = (rng.random((d, d)) < prob).astype(float)
    else:
        U = _barabasi_albert(d, int(spec.intra_mean_degree), rng)
    return _orient_by_random_order(np.triu(U, 1), rng)


def sbm_blocks(d: int, k: int) -> np.ndarray:
    """Block label of each vertex: ``k`` contiguous blocks of (near) equal size."""
    return (np.arange(d) * k) // d


def gen_inter_support(d: int, spec: GraphModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Binary support of one lag matrix. Self-lag entries (j, j) are allowed."""
    if d < 1:
        raise InvalidSpec(f"d must be >= 1, got {d}")
    if spec.inter_model == "ER":
        probs = np.full((d, d), spec.inter_prob(d))
    else:
        within, between = spec.sbm_probs(d)
        labels = sbm_blocks(d, spec.sbm_blocks)
        same = labels[:, None] == labels[None, :]
        probs = np.where(same, within, between)
    return (rng.random((d, d)) < probs).astype(float)


def assign_weights(support, spec: GraphModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Weights with magnitude ~ U[weight_low, weight_high] and a fair random sign on the support."""
    S = np.asarray(support, dtype=float)
    magnitude = rng.uniform(spec.weight_low, spec.weight_high, size=S.shape)
    sign = np.where(rng.random(S.shape) < 0.5, -1.0, 1.0)
    return np.where(S != 0, sign * magnitude, 0.0)


def gen_interaction_graph(n: int, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Undirected ER graph on ``n`` nodes: symmetric, zero diagonal, each pair kept with ``prob``."""
    if n < 1:
        raise InvalidSpec(f"n must be >= 1, got {n}")
    if not 0.0 <= prob <= 1.0:
        raise InvalidSpec(f"prob must lie in [0, 1], got {prob}")
    U = np.triu(rng.random((n, n)) < prob, 1)
    return (U | U.T).astype(float)


def normalize_adjacency(A) -> np.ndarray:
    """``D^{-1/2} (A + I) D^{-1/2}`` with D the degree matrix of ``A + I``."""
    A = np.asarray(A, dtype=float)
    B = A + np.eye(A.shape[0])
    r = 1.0 / np.sqrt(B.sum(axis=1))
    return r[:, None] * B * r[None, :]


def simulate_sem(
    truth: GroundTruthModel,
    adjacency: Sequence[np.ndarray],
    noise: NoiseSpec,
    rng: np.random.Generator,
    n: int | None = None,
) -> DynamicGraphDataset:
    """Run the structural VAR forward over ``len(adjacency)`` timestamps.

    The first ``p`` timestamps are burn-in and get only the intra-slice term
    plus noise. One full n x d noise matrix is drawn per timestamp before its
    columns are generated.
    """
    order = topological_order(truth.W != 0)
    if order is None:
        raise CyclicW("support of W contains a directed cycle")
    adjacency = [np.asarray(a, dtype=float) for a in adjacency]
    T = len(adjacency)
    if T <= truth.p:
        raise ShapeMismatch(f"need T > p, got T={T}, p={truth.p}")
    n = adjacency[0].shape[0] if n is None else n
    d = truth.d
    W = np.asarray(truth.W)
    A_hat = [normalize_adjacency(a) for a in adjacency]

    features: list[np.ndarray] = []
    for t in range(T):
        Z = noise.sample(rng, (n, d))
        lagged = np.zeros((n, d))
        if t >= truth.p:
            for i, P in enumerate(truth.P, start=1):
                lagged += A_hat[t - i] @ features[t - i] @ P
        X = np.zeros((n, d))
        for j in order:
            X[:, j] = X @ W[:, j] + lagged[:, j] + Z[:, j]
        features.append(X)
    return DynamicGraphDataset(features=tuple(features), adjacency=tuple(adjacency))


def gen_ground_truth(d: int, p: int, spec: GraphModelSpec, rng: np.random.Generator) -> GroundTruthModel:
    W = assign_weights(gen_intra_dag(d, spec, rng), spec, rng)
    P = [assign_weights(gen_inter_support(d, spec, rng), spec, rng) for _ in range(p)]
    return GroundTruthModel(W=W, P=tuple(P))


def gen_adjacency_series(n: int, T: int, spec: GraphModelSpec, rng: np.random.Generator) -> list[np.ndarray]:
    if spec.static_adjacency:
        A = gen_interaction_graph(n, spec.interaction_prob, rng)
        return [A] * T
    return [gen_interaction_graph(n, spec.interaction_prob, rng) for _ in range(T)]


def simulate_dataset(
    n: int,
    d: int,
    T: int,
    p: int,
    spec: GraphModelSpec | None = None,
    noise: NoiseSpec | None = None,
    seed: int = 0,
) -> tuple[DynamicGraphDataset, GroundTruthModel]:
    """Full protocol from a single seed: truth, interaction graphs, then observations."""
    spec = spec or GraphModelSpec()
    noise = noise or NoiseSpec()
    if p < 1 or p >= T:
        raise InvalidSpec(f"need 1 <= p < T, got p={p}, T={T}")
    rng = make_rng(seed)
    truth = gen_ground_truth(d, p, spec, rng)
    adjacency = gen_adjacency_series(n, T, spec, rng)
    ds = simulate_sem(truth, adjacency, noise, rng, n=n)
    return ds, truth

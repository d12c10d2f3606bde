"""Shared domain types, validation and seeded randomness."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphNotearsError",
    "ShapeMismatch",
    "NonBinaryAdjacency",
    "AsymmetricAdjacency",
    "SelfLoop",
    "CyclicW",
    "InvalidSpec",
    "LagTooLarge",
    "LagCountMismatch",
    "NotConverged",
    "NumericalOverflow",
    "DynamicGraphDataset",
    "GroundTruthModel",
    "NoiseSpec",
    "make_rng",
    "validate_dataset",
    "is_acyclic",
    "topological_order",
]


class GraphNotearsError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(GraphNotearsError, ValueError):
    pass


class NonBinaryAdjacency(GraphNotearsError, ValueError):
    pass


class AsymmetricAdjacency(GraphNotearsError, ValueError):
    pass


class SelfLoop(GraphNotearsError, ValueError):
    pass


class CyclicW(GraphNotearsError, ValueError):
    pass


class InvalidSpec(GraphNotearsError, ValueError):
    pass


class LagTooLarge(GraphNotearsError, ValueError):
    pass


class LagCountMismatch(GraphNotearsError, ValueError):
    pass


class NumericalOverflow(GraphNotearsError, ArithmeticError):
    pass


class NotConverged(GraphNotearsError, RuntimeError):
    """Raised by strict callers; carries the best iterate in ``result``."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


def make_rng(seed: int) -> np.random.Generator:
    """Return the package's generator: numpy's PCG64 bit generator seeded with ``seed``.

    PCG64 output is specified bit-for-bit by numpy, so a given seed yields the
    same stream on every platform.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DynamicGraphDataset:
    """Node features ``X^(t)`` (n x d) and interaction graphs ``A^(t)`` (n x n), t = 1..T."""

    features: tuple[np.ndarray, ...]
    adjacency: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(_frozen(x) for x in self.features))
        object.__setattr__(self, "adjacency", tuple(_frozen(a) for a in self.adjacency))

    @property
    def T(self) -> int:
        return len(self.features)

    @property
    def n(self) -> int:
        return self.features[0].shape[0] if self.features else 0

    @property
    def d(self) -> int:
        return self.features[0].shape[1] if self.features and self.features[0].ndim == 2 else 0


@dataclass(frozen=True)
class GroundTruthModel:
    """Intra-slice weights ``W`` (d x d) and one inter-slice matrix per lag, ``P[i]`` for lag i+1."""

    W: np.ndarray
    P: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "W", _frozen(self.W))
        object.__setattr__(self, "P", tuple(_frozen(m) for m in self.P))
        d = self.W.shape[0]
        if self.W.shape != (d, d):
            raise ShapeMismatch(f"W must be square, got {self.W.shape}")
        if not self.P:
            raise InvalidSpec("at least one lag matrix is required (p >= 1)")
        for i, m in enumerate(self.P):
            if m.shape != (d, d):
                raise ShapeMismatch(f"P[{i}] has shape {m.shape}, expected {(d, d)}")
        if not is_acyclic(self.W != 0):
            raise CyclicW("support of W contains a directed cycle")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def p(self) -> int:
        return len(self.P)

    @property
    def P_stacked(self) -> np.ndarray:
        """``[P^(1); ...; P^(p)]`` as a (p*d) x d matrix."""
        return np.vstack(self.P)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    scale: float = 1.0

    _KINDS = ("gaussian", "exponential")

    def __post_init__(self):
        object.__setattr__(self, "kind", str(self.kind).lower())
        if self.kind not in self._KINDS:
            raise InvalidSpec(f"noise kind must be one of {self._KINDS}, got {self.kind!r}")
        if not self.scale > 0:
            raise InvalidSpec(f"noise scale must be positive, got {self.scale}")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size=shape)
        # mean of Exponential(scale) is scale
        return rng.exponential(self.scale, size=shape) - self.scale


def validate_dataset(ds: DynamicGraphDataset) -> None:
    """Raise if any dataset invariant is violated; return None otherwise."""
    if len(ds.features) != len(ds.adjacency):
        raise ShapeMismatch(
            f"{len(ds.features)} feature matrices but {len(ds.adjacency)} adjacency matrices"
        )
    if ds.T < 2:
        raise ShapeMismatch(f"need at least 2 timestamps, got {ds.T}")
    shape = ds.features[0].shape
    if len(shape) != 2 or min(shape) < 1:
        raise ShapeMismatch(f"feature matrices must be non-empty n x d, got {shape}")
    n = shape[0]
    for t, x in enumerate(ds.features):
        if x.shape != shape:
            raise ShapeMismatch(f"X^({t + 1}) has shape {x.shape}, expected {shape}")
    for t, a in enumerate(ds.adjacency):
        if a.shape != (n, n):
            raise ShapeMismatch(f"A^({t + 1}) has shape {a.shape}, expected {(n, n)}")
        if not np.all((a == 0) | (a == 1)):
            raise NonBinaryAdjacency(f"A^({t + 1}) has entries outside {{0, 1}}")
        if not np.array_equal(a, a.T):
            raise AsymmetricAdjacency(f"A^({t + 1}) is not symmetric")
        if np.any(np.diag(a) != 0):
            raise SelfLoop(f"A^({t + 1}) has a nonzero diagonal")


def topological_order(B) -> list[int] | None:
    """Kahn's algorithm on the directed graph with edges j -> k where ``B[j, k] != 0``.

    Returns a topological order, or None when the graph has a cycle. Ties are
    broken by smallest index so the result is deterministic.
    """
    B = np.asarray(B) != 0
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ShapeMismatch(f"adjacency must be square, got {B.shape}")
    indeg = B.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order = []
    while ready:
        j = ready.pop(0)
        order.append(j)
        for k in np.flatnonzero(B[j]):
            indeg[k] -= 1
            if indeg[k] == 0:
                ready.append(int(k))
        ready.sort()
    return order if len(order) == B.shape[0] else None


def is_acyclic(B) -> bool:
    return topological_order(B) is not None

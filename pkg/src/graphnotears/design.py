"""Stacked regression design ``X = X W + (A ⊠ M) P + Z`` over all usable timestamps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import DynamicGraphDataset, InvalidSpec, LagTooLarge, validate_dataset
from .simulate import normalize_adjacency


@dataclass(frozen=True)
class LagSpec:
    """Lags that influence the current timestamp, e.g. ``(1,)``, ``(1, 2)`` or ``(1, 7)``.

    Column block i of the lagged design (and row block i of ``P``) belongs to
    ``lags[i]``; blocks follow the given order.
    """

    lags: tuple[int, ...] = (1,)

    def __post_init__(self):
        lags = tuple(int(l) for l in self.lags)
        if not lags:
            raise InvalidSpec("at least one lag is required")
        if any(l < 1 for l in lags):
            raise InvalidSpec(f"lags must be positive integers, got {lags}")
        if len(set(lags)) != len(lags):
            raise InvalidSpec(f"lags must be distinct, got {lags}")
        object.__setattr__(self, "lags", lags)

    @classmethod
    def contiguous(cls, p: int) -> "LagSpec":
        return cls(tuple(range(1, p + 1)))

    @classmethod
    def coerce(cls, lags: "LagSpec | Iterable[int] | int") -> "LagSpec":
        if isinstance(lags, LagSpec):
            return lags
        if isinstance(lags, (int, np.integer)):
            return cls.contiguous(int(lags))
        return cls(tuple(lags))

    @property
    def p(self) -> int:
        return len(self.lags)

    @property
    def max_lag(self) -> int:
        return max(self.lags)


@dataclass(frozen=True)
class StackedDesign:
    """Responses ``X`` and lagged predictors ``AM``, target timestamps stacked top to bottom.

    ``n_eff`` is the stacked row count ``(T - max_lag) * n``; ``n_nodes`` is n.
    """

    X: np.ndarray
    AM: np.ndarray
    n_eff: int
    n_nodes: int
    lags: LagSpec

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.lags.p

    @property
    def n_slices(self) -> int:
        return self.n_eff // self.n_nodes


def build_stacked(
    ds: DynamicGraphDataset,
    lags: LagSpec | Iterable[int] | int,
    aggregate: bool = True,
) -> StackedDesign:
    """Stack targets t = max_lag+1..T with their lagged predictor blocks.

    With ``aggregate`` the block for lag l is ``Â^(t-l) X^(t-l)``; without it
    the raw ``X^(t-l)`` is used (the design for a model that ignores the
    interaction graph).
    """
    validate_dataset(ds)
    lags = LagSpec.coerce(lags)
    if lags.max_lag >= ds.T:
        raise LagTooLarge(f"max lag {lags.max_lag} must be < T={ds.T}")

    if aggregate:
        cache: dict[int, np.ndarray] = {}

        def lagged(s: int) -> np.ndarray:
            if s not in cache:
                cache[s] = normalize_adjacency(ds.adjacency[s]) @ ds.features[s]
            return cache[s]
    else:
        def lagged(s: int) -> np.ndarray:
            return ds.features[s]

    targets = range(lags.max_lag, ds.T)  # 0-based indices of t = max_lag+1..T
    X = np.vstack([ds.features[t] for t in targets])
    AM = np.vstack([np.hstack([lagged(t - l) for l in lags.lags]) for t in targets])
    return StackedDesign(X=X, AM=AM, n_eff=X.shape[0], n_nodes=ds.n, lags=lags)

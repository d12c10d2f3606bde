"""F1 and structural Hamming distance on binary supports."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import LagCountMismatch, ShapeMismatch


@dataclass(frozen=True)
class EdgeMetrics:
    tp: int
    fp: int
    fn: int
    reversed: int
    precision: float
    recall: float
    f1: float
    shd: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class InterMetrics:
    """Per-lag scores, counts pooled over lags (micro) and the plain mean of per-lag F1 (macro)."""

    per_lag: tuple[EdgeMetrics, ...]
    pooled: EdgeMetrics
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "per_lag": [m.to_dict() for m in self.per_lag],
            "pooled": self.pooled.to_dict(),
            "macro_f1": self.macro_f1,
        }


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _from_counts(tp: int, fp: int, fn: int, rev: int) -> EdgeMetrics:
    if tp + fp + fn + rev == 0:
        # empty estimate against empty truth
        precision = recall = f1 = 1.0
    else:
        precision = _ratio(tp, tp + fp + rev)
        recall = _ratio(tp, tp + fn + rev)
        f1 = _ratio(2 * precision * recall, precision + recall) if precision + recall else 0.0
    return EdgeMetrics(
        tp=int(tp),
        fp=int(fp),
        fn=int(fn),
        reversed=int(rev),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        shd=int(fp + fn + rev),
    )


def _binary(M, name: str) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got {M.shape}")
    return M != 0


def score_intra(est, truth) -> EdgeMetrics:
    """Score a directed estimate of W against the true support.

    Every estimated edge j->k (j != k) is a true positive if truth has j->k, a
    reversal if truth has only k->j, and a false positive otherwise. A true
    edge with no estimated edge in either direction is a false negative.
    Reversals count once in precision, recall and SHD.
    """
    E, G = _binary(est, "est"), _binary(truth, "truth")
    if E.shape != G.shape:
        raise ShapeMismatch(f"est {E.shape} and truth {G.shape} differ in shape")
    off = ~np.eye(E.shape[0], dtype=bool)
    E, G = E & off, G & off
    tp = int(np.sum(E & G))
    rev = int(np.sum(E & ~G & G.T))
    fp = int(np.sum(E & ~G & ~G.T))
    fn = int(np.sum(G & ~E & ~E.T))
    return _from_counts(tp, fp, fn, rev)


def score_matrix(est, truth) -> EdgeMetrics:
    """Entrywise confusion counts; used for inter-slice edges, which cannot be reversed."""
    E, G = np.asarray(est) != 0, np.asarray(truth) != 0
    if E.shape != G.shape:
        raise ShapeMismatch(f"est {E.shape} and truth {G.shape} differ in shape")
    tp = int(np.sum(E & G))
    return _from_counts(tp, int(np.sum(E & ~G)), int(np.sum(~E & G)), 0)


def score_inter(est: Sequence, truth: Sequence) -> InterMetrics:
    """Score each lag matrix, plus pooled and macro-averaged summaries."""
    if len(est) != len(truth):
        raise LagCountMismatch(f"{len(est)} estimated lag matrices vs {len(truth)} true ones")
    if not len(truth):
        raise LagCountMismatch("no lag matrices to score")
    per_lag = tuple(score_matrix(e, t) for e, t in zip(est, truth))
    pooled = _from_counts(
        sum(m.tp for m in per_lag), sum(m.fp for m in per_lag), sum(m.fn for m in per_lag), 0
    )
    macro = float(np.mean([m.f1 for m in per_lag]))
    return InterMetrics(per_lag=per_lag, pooled=pooled, macro_f1=macro)


def split_lags(P, d: int) -> list[np.ndarray]:
    """Split a stacked (p*d) x d matrix into its p lag blocks."""
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[1] != d or P.shape[0] % d:
        raise ShapeMismatch(f"stacked P of shape {P.shape} is not (p*{d}) x {d}")
    return [P[i * d : (i + 1) * d] for i in range(P.shape[0] // d)]

import itertools
from collections import deque

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_binary(d: int, offdiag_only: bool = False):
    """Every d x d 0/1 matrix (optionally with a zero diagonal)."""
    cells = [(i, j) for i in range(d) for j in range(d) if not (offdiag_only and i == j)]
    for bits in itertools.product((0, 1), repeat=len(cells)):
        B = np.zeros((d, d), dtype=int)
        for (i, j), b in zip(cells, bits):
            B[i, j] = b
        yield B


def finite_diff(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function over every entry of x."""
    g = np.zeros_like(x, dtype=float)
    for idx in np.ndindex(x.shape):
        up, dn = x.copy(), x.copy()
        up[idx] += eps
        dn[idx] -= eps
        g[idx] = (f(up) - f(dn)) / (2 * eps)
    return g


def max_rel_err(a, b) -> float:
    """Largest entrywise error relative to the largest reference entry."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


def edit_distance(src, dst):
    """Breadth-first search over digraphs using single-edge insert, delete and flip."""
    d = src.shape[0]
    pairs = [(j, k) for j in range(d) for k in range(d) if j != k]
    start, goal = tuple(src[p] for p in pairs), tuple(dst[p] for p in pairs)
    index = {p: i for i, p in enumerate(pairs)}
    seen = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            return seen[state]
        for i, (j, k) in enumerate(pairs):
            moves = []
            nxt = list(state)
            nxt[i] = 1 - nxt[i]
            moves.append(tuple(nxt))  # insert or delete
            back = index[(k, j)]
            if state[i] and not state[back]:
                flip = list(state)
                flip[i], flip[back] = 0, 1
                moves.append(tuple(flip))
            for m in moves:
                if m not in seen:
                    seen[m] = seen[state] + 1
                    queue.append(m)
    raise AssertionError("goal unreachable")

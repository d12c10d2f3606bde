"""On-disk formats for datasets, ground truth and fit results.

A dataset is a directory holding

    meta.json                     n, d, T, lags, noise, seed, format_version, ...
    X_<t>.csv, A_<t>.csv          t = 1..T, dense, row-major, headerless
    W.csv, P_lag<l>.csv           ground truth (optional)

Reals are written with ``%.17g`` so they reload bit-exactly; adjacency and
binary supports are written as 0/1 integers.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Any

import numpy as np

from .core import DynamicGraphDataset, GraphNotearsError, GroundTruthModel, validate_dataset
from .solver import FitResult

FORMAT_VERSION = 1
REAL_FMT = "%.17g"


class IoError(GraphNotearsError, OSError):
    pass


def write_matrix(path: Path, M, binary: bool = False) -> None:
    M = np.atleast_2d(np.asarray(M))
    if binary:
        np.savetxt(path, M.astype(int), fmt="%d", delimiter=",")
    else:
        np.savetxt(path, M.astype(float), fmt=REAL_FMT, delimiter=",")


def read_matrix(path: Path, binary: bool = False) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"missing matrix file {path}")
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise IoError(f"cannot parse {path}: {exc}") from exc
    return M.astype(int) if binary else M


def write_json(path: Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def read_json(path: Path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"missing file {path}")
    return json.loads(path.read_text())


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def save_dataset(ds: DynamicGraphDataset, path, meta: dict | None = None) -> Path:
    validate_dataset(ds)
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = dict(meta or {})
    meta.update(format_version=FORMAT_VERSION, n=ds.n, d=ds.d, T=ds.T)
    meta.setdefault("lags", [1])
    for t in range(ds.T):
        write_matrix(path / f"X_{t + 1}.csv", ds.features[t])
        write_matrix(path / f"A_{t + 1}.csv", ds.adjacency[t], binary=True)
    write_json(path / "meta.json", meta)
    return path


def load_dataset(path) -> tuple[DynamicGraphDataset, dict]:
    path = Path(path)
    meta = read_json(path / "meta.json")
    if meta.get("format_version") != FORMAT_VERSION:
        raise IoError(f"{path}: unsupported format_version {meta.get('format_version')!r}")
    T = int(meta["T"])
    features = [read_matrix(path / f"X_{t}.csv") for t in range(1, T + 1)]
    adjacency = [read_matrix(path / f"A_{t}.csv") for t in range(1, T + 1)]
    ds = DynamicGraphDataset(features=tuple(features), adjacency=tuple(adjacency))
    validate_dataset(ds)
    if (ds.n, ds.d) != (meta["n"], meta["d"]):
        raise IoError(f"{path}: matrices are {ds.n} x {ds.d} but meta.json says {meta['n']} x {meta['d']}")
    return ds, meta


def save_truth(truth: GroundTruthModel, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_matrix(path / "W.csv", truth.W)
    for i, P in enumerate(truth.P, start=1):
        write_matrix(path / f"P_lag{i}.csv", P)
    return path


def truth_lag_files(path) -> dict[int, Path]:
    found = {}
    for f in Path(path).glob("P_lag*.csv"):
        m = re.fullmatch(r"P_lag(\d+)\.csv", f.name)
        if m:
            found[int(m.group(1))] = f
    return dict(sorted(found.items()))


def load_truth(path) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Return ``W`` and a {lag: P} mapping; lags need not be contiguous."""
    path = Path(path)
    W = read_matrix(path / "W.csv")
    P = {lag: read_matrix(f) for lag, f in truth_lag_files(path).items()}
    if not P:
        raise IoError(f"{path}: no P_lag<l>.csv files")
    return W, P


def save_fit(result: FitResult, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_matrix(path / "W_cont.csv", result.W_cont)
    write_matrix(path / "W_thresh.csv", result.W_thresh)
    write_matrix(path / "W_bin.csv", result.W_bin, binary=True)
    for i, lag in enumerate(result.lags):
        write_matrix(path / f"P_cont_lag{lag}.csv", result.P_lag(i, "cont"))
        write_matrix(path / f"P_thresh_lag{lag}.csv", result.P_lag(i, "thresh"))
        write_matrix(path / f"P_bin_lag{lag}.csv", result.P_lag(i, "bin"), binary=True)
    write_json(
        path / "fit.json",
        {
            "lags": list(result.lags),
            "h_final": result.h_final,
            "objective_final": result.objective_final,
            "dual_iters": result.dual_iters,
            "converged": result.converged,
            "diagnostics": result.diagnostics,
        },
    )
    return path


def load_fit(path) -> FitResult:
    path = Path(path)
    info = read_json(path / "fit.json")
    lags = tuple(info["lags"])

    def stack(kind: str, binary: bool = False) -> np.ndarray:
        return np.vstack([read_matrix(path / f"P_{kind}_lag{l}.csv", binary) for l in lags])

    return FitResult(
        W_cont=read_matrix(path / "W_cont.csv"),
        P_cont=stack("cont"),
        W_thresh=read_matrix(path / "W_thresh.csv"),
        P_thresh=stack("thresh"),
        W_bin=read_matrix(path / "W_bin.csv", binary=True),
        P_bin=stack("bin", binary=True),
        h_final=info["h_final"],
        objective_final=info["objective_final"],
        dual_iters=info["dual_iters"],
        converged=info["converged"],
        lags=lags,
        diagnostics=info.get("diagnostics", {}),
    )


def content_hash(path, pattern: str = "*") -> str:
    """sha256 over (name, bytes) of the matching files in a directory, in sorted order."""
    h = hashlib.sha256()
    for f in sorted(Path(path).glob(pattern)):
        if f.is_file():
            h.update(f.name.encode())
            h.update(b"\0")
            h.update(f.read_bytes())
    return h.hexdigest()


def array_hash(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()

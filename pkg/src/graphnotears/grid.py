"""Experiment grid: (setting x seed x method) cells, run records and aggregation."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .baselines import fit_method
from .config import ExperimentConfig, Setting, parse_graph, parse_solver
from .core import NoiseSpec
from .design import LagSpec
from .io import array_hash, write_json
from .metrics import score_inter, score_intra, split_lags
from .simulate import simulate_dataset
from .solver import FitResult, SolverConfig, h_acyc

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "kind", "n", "d", "T", "lags", "intra_model", "inter_model", "noise", "method",
    "seed", "n_runs",
    "f1_w", "f1_w_ci", "shd_w", "shd_w_ci",
    "f1_p", "f1_p_ci", "shd_p", "shd_p_ci",
    "f1_p_macro", "f1_p_macro_ci",
    "h_final", "converged", "seconds", "error", "config_hash",
)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Cell:
    setting: Setting
    seed: int
    method: str
    solver: SolverConfig = field(default_factory=SolverConfig)
    graph: dict = field(default_factory=dict)

    def to_config(self) -> dict:
        s = self.setting
        return {
            "n": s.n,
            "d": s.d,
            "T": s.T,
            "lags": list(s.lags),
            "intra_model": s.intra_model,
            "inter_model": s.inter_model,
            "noise": s.noise,
            "noise_scale": s.noise_scale,
            "graph": parse_graph(self.graph, s.intra_model, s.inter_model).resolved(s.d),
            "seed": self.seed,
            "method": self.method,
            "solver": self.solver.to_dict(),
        }

    @property
    def hash(self) -> str:
        return config_hash(self.to_config())

    @classmethod
    def from_config(cls, cfg: dict) -> "Cell":
        graph = {
            k: v for k, v in cfg.get("graph", {}).items() if k not in ("intra_model", "inter_model")
        }
        setting = Setting(
            n=cfg["n"],
            d=cfg["d"],
            T=cfg["T"],
            lags=tuple(cfg["lags"]),
            intra_model=cfg["intra_model"],
            inter_model=cfg["inter_model"],
            noise=cfg["noise"],
            noise_scale=cfg.get("noise_scale", 1.0),
        )
        return cls(setting, cfg["seed"], cfg["method"], parse_solver(cfg.get("solver")), graph)


@dataclass
class RunRecord:
    """Everything needed to interpret and replay one fit."""

    config: dict
    seed: int
    method: str
    metrics: dict
    h_final: float
    seconds: float
    converged: bool
    version: str
    config_hash: str
    result_hash: str = ""
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunRecord":
        return cls(**obj)


def simulate_cell(cell: Cell):
    s = cell.setting
    spec = parse_graph(cell.graph, s.intra_model, s.inter_model)
    return simulate_dataset(
        s.n, s.d, s.T, len(s.lags), spec, NoiseSpec(s.noise, s.noise_scale), seed=cell.seed
    )


def fit_cell(cell: Cell):
    ds, truth = simulate_cell(cell)
    return fit_method(cell.method, ds, LagSpec(cell.setting.lags), cell.solver), truth


def result_hash(result: FitResult) -> str:
    return array_hash(result.W_cont, result.P_cont, result.W_bin, result.P_bin)


def score_fit(result: FitResult, W_true, P_true: list) -> dict:
    intra = score_intra(result.W_bin, W_true)
    inter = score_inter(split_lags(result.P_bin, result.d), P_true)
    return {"W": intra.to_dict(), "P": inter.to_dict()}


def run_cell(cell: Cell) -> RunRecord:
    """Simulate, fit and score one cell; failures are captured in ``error``."""
    cfg = cell.to_config()
    start = time.perf_counter()
    try:
        result, truth = fit_cell(cell)
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the grid
        log.exception("cell %s failed", cell.hash)
        return RunRecord(
            config=cfg, seed=cell.seed, method=cell.method, metrics={}, h_final=math.nan,
            seconds=time.perf_counter() - start, converged=False, version=__version__,
            config_hash=cell.hash, error=f"{type(exc).__name__}: {exc}",
        )
    seconds = time.perf_counter() - start
    return RunRecord(
        config=cfg,
        seed=cell.seed,
        method=cell.method,
        metrics={
            **score_fit(result, truth.W, list(truth.P)),
            "h_cont": h_acyc(result.W_cont),
            "dual_iters": result.dual_iters,
            "removed_cycle_edges": result.diagnostics.get("removed_cycle_edges", []),
        },
        h_final=result.h_final,
        seconds=seconds,
        converged=result.converged,
        version=__version__,
        config_hash=cell.hash,
        result_hash=result_hash(result),
    )


def replay(record: RunRecord | dict) -> FitResult:
    """Re-run the fit described by a record."""
    cfg = record.config if isinstance(record, RunRecord) else record["config"]
    return fit_cell(Cell.from_config(cfg))[0]


def grid_cells(exp: ExperimentConfig) -> list[Cell]:
    return [
        Cell(setting, seed, method, exp.solver, dict(exp.graph))
        for setting in exp.settings()
        for seed in exp.seeds
        for method in exp.methods
    ]


def _record_path(out: Path, cell_hash: str) -> Path:
    return out / "records" / f"{cell_hash}.json"


def run_grid(
    exp: ExperimentConfig,
    out=None,
    jobs: int | None = None,
    resume: bool = False,
    plots: bool = True,
) -> list[RunRecord]:
    """Run every cell, write one JSON record per cell, ``results.csv`` and plots."""
    out = Path(out or exp.out)
    jobs = jobs or exp.jobs
    (out / "records").mkdir(parents=True, exist_ok=True)
    write_json(out / "experiment.json", exp.to_dict())

    cells = grid_cells(exp)
    todo = []
    for cell in cells:
        path = _record_path(out, cell.hash)
        if resume and path.is_file():
            log.info("skipping completed cell %s", cell.hash)
            continue
        todo.append(cell)

    def save(rec: RunRecord):
        write_json(_record_path(out, rec.config_hash), rec.to_dict())

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rec in pool.map(run_cell, todo):
                save(rec)
    else:
        for i, cell in enumerate(todo, 1):
            rec = run_cell(cell)
            log.info("[%d/%d] %s %s seed=%d f1=%s", i, len(todo), cell.method, cell.setting, cell.seed,
                     rec.metrics.get("W", {}).get("f1"))
            save(rec)

    records = [
        RunRecord.from_dict(json.loads(_record_path(out, c.hash).read_text())) for c in cells
    ]
    rows = aggregate(records)
    write_csv(out / "results.csv", rows)
    if plots:
        from .plots import plot_grid

        plot_grid(out / "results.csv", out / "plots")
    return records


def _ci(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return 1.96 * float(np.std(values, ddof=1)) / math.sqrt(len(values))


def _run_row(rec: RunRecord) -> dict:
    c = rec.config
    row = {
        "kind": "run", "n": c["n"], "d": c["d"], "T": c["T"],
        "lags": "-".join(str(l) for l in c["lags"]), "intra_model": c["intra_model"],
        "inter_model": c["inter_model"], "noise": c["noise"], "method": rec.method,
        "seed": rec.seed, "n_runs": 1, "h_final": rec.h_final, "converged": int(rec.converged),
        "seconds": round(rec.seconds, 3), "error": rec.error or "", "config_hash": rec.config_hash,
    }
    if not rec.error:
        row.update(
            f1_w=rec.metrics["W"]["f1"],
            shd_w=rec.metrics["W"]["shd"],
            f1_p=rec.metrics["P"]["pooled"]["f1"],
            shd_p=rec.metrics["P"]["pooled"]["shd"],
            f1_p_macro=rec.metrics["P"]["macro_f1"],
        )
    return row


def aggregate(records: Iterable[RunRecord]) -> list[dict]:
    """Per-run rows followed, for each (setting, method), by a mean +/- 95% CI row."""
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        row = _run_row(rec)
        key = tuple(row[k] for k in ("n", "d", "T", "lags", "intra_model", "inter_model", "noise", "method"))
        groups.setdefault(key, []).append(row)
    rows = []
    for key, runs in groups.items():
        rows.extend(runs)
        ok = [r for r in runs if not r["error"]]
        agg = dict(runs[0], kind="aggregate", seed="", n_runs=len(ok), error="", config_hash="")
        agg["error"] = f"{len(runs) - len(ok)} failed" if len(ok) < len(runs) else ""
        for m in ("f1_w", "shd_w", "f1_p", "shd_p", "f1_p_macro"):
            vals = [float(r[m]) for r in ok]
            agg[m] = float(np.mean(vals)) if vals else ""
            agg[m + "_ci"] = _ci(vals) if vals else ""
        agg["h_final"] = float(np.mean([r["h_final"] for r in ok])) if ok else ""
        agg["converged"] = sum(r["converged"] for r in ok)
        agg["seconds"] = round(sum(r["seconds"] for r in runs), 3)
        rows.append(agg)
    return rows


def write_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in CSV_COLUMNS})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

"""Command line interface: ``graphnotears simulate | fit | eval | grid | plot``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .baselines import fit_method
from .config import METHOD_NAMES, ExperimentConfig, InvalidConfig, SimulationConfig, read_config
from .core import GraphNotearsError, LagCountMismatch
from .design import LagSpec
from .grid import RunRecord, config_hash, result_hash, run_grid
from .io import content_hash, load_dataset, load_fit, load_truth, read_json, save_dataset, save_fit, save_truth, write_json
from .metrics import EdgeMetrics, score_inter, score_intra, split_lags
from .simulate import simulate_dataset
from .solver import LOSS_NORMALIZERS, SolverConfig

log = logging.getLogger("graphnotears")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    for f in dataclasses.fields(SolverConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "loss_normalizer":
            g.add_argument(flag, dest=f.name, choices=LOSS_NORMALIZERS, default=None)
        else:
            kind = int if isinstance(f.default, int) else float
            g.add_argument(flag, dest=f.name, type=kind, default=None, help=f"default {f.default}")


def _solver_from_args(args) -> SolverConfig:
    overrides = {
        f.name: getattr(args, f.name)
        for f in dataclasses.fields(SolverConfig)
        if getattr(args, f.name, None) is not None
    }
    return SolverConfig(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphnotears", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset and its ground truth")
    p.add_argument("--config", required=True, help="JSON simulation config")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("fit", help="fit one method to a dataset directory")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--method", required=True, choices=METHOD_NAMES)
    p.add_argument("--out", required=True, help="result directory")
    p.add_argument("--lags", type=int, nargs="+", default=None, help="lags to fit (default: from meta.json)")
    p.add_argument("--strict", action="store_true", help="exit 1 if the solver did not converge")
    _add_solver_flags(p)

    p = sub.add_parser("eval", help="score a fit against ground truth")
    p.add_argument("result", help="result directory written by 'fit'")
    p.add_argument("truth", help="directory holding W.csv and P_lag<l>.csv")
    p.add_argument("--out", default=None, help="where to write metrics (default: result directory)")

    p = sub.add_parser("grid", help="run an experiment grid")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--resume", action="store_true", help="skip cells whose record already exists")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("plot", help="draw figures from results.csv or a fit directory")
    p.add_argument("source", help="results.csv, or a fit directory with --sorted-weights")
    p.add_argument("--out", required=True)
    p.add_argument("--sorted-weights", action="store_true")
    p.add_argument("--tau-w", type=float, default=None)
    p.add_argument("--tau-p", type=float, default=None)
    return parser


def cmd_simulate(args) -> int:
    cfg = SimulationConfig.from_dict(read_config(args.config))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    ds, truth = simulate_dataset(cfg.n, cfg.d, cfg.T, cfg.p, cfg.graph, cfg.noise, seed=cfg.seed)
    meta = cfg.to_dict()
    meta.update(
        lags=list(range(1, cfg.p + 1)),
        noise={"kind": cfg.noise.kind, "scale": cfg.noise.scale},
        graph_resolved=cfg.graph.resolved(cfg.d),
        version=__version__,
    )
    out = save_dataset(ds, args.out, meta)
    save_truth(truth, out)
    print(f"seed={cfg.seed} hash={content_hash(out, '*.csv')} out={out}")
    return 0


def cmd_fit(args, argv) -> int:
    ds, meta = load_dataset(args.dataset)
    lags = LagSpec(tuple(args.lags or meta.get("lags", [1])))
    solver = _solver_from_args(args)
    start = time.perf_counter()
    result = fit_method(args.method, ds, lags, solver)
    seconds = time.perf_counter() - start
    out = save_fit(result, args.out)
    config = {
        "dataset": str(Path(args.dataset)),
        "dataset_meta": meta,
        "lags": list(lags.lags),
        "method": args.method,
        "solver": solver.to_dict(),
        "cli_args": list(argv),
    }
    record = RunRecord(
        config=config, seed=meta.get("seed", 0), method=args.method, metrics={},
        h_final=result.h_final, seconds=seconds, converged=result.converged,
        version=__version__, config_hash=config_hash(config), result_hash=result_hash(result),
    )
    write_json(out / "record.json", record.to_dict())
    print(f"method={args.method} converged={result.converged} h={result.h_final:.3e} out={out}")
    if args.strict and not result.converged:
        print("error: solver did not converge (--strict)", file=sys.stderr)
        return 1
    return 0


METRIC_FIELDS = [f.name for f in dataclasses.fields(EdgeMetrics)]


def evaluate_dirs(result_dir, truth_dir) -> dict:
    result = load_fit(result_dir)
    W_true, P_true = load_truth(truth_dir)
    missing = [l for l in result.lags if l not in P_true]
    if missing:
        raise LagCountMismatch(f"truth has no P for lag(s) {missing}; available {sorted(P_true)}")
    inter = score_inter(split_lags(result.P_bin, result.d), [P_true[l] for l in result.lags])
    return {
        "lags": list(result.lags),
        "W": score_intra(result.W_bin, W_true).to_dict(),
        "P": inter.to_dict(),
    }


def write_metrics_csv(path, metrics: dict) -> None:
    rows = [{"matrix": "W", **metrics["W"]}]
    for lag, m in zip(metrics["lags"], metrics["P"]["per_lag"]):
        rows.append({"matrix": f"P_lag{lag}", **m})
    rows.append({"matrix": "P_pooled", **metrics["P"]["pooled"]})
    rows.append({"matrix": "P_macro", "f1": metrics["P"]["macro_f1"]})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["matrix", *METRIC_FIELDS])
        w.writeheader()
        for r in rows:
            w.writerow(r)


def cmd_eval(args) -> int:
    metrics = evaluate_dirs(args.result, args.truth)
    out = Path(args.out or args.result)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "metrics.json", metrics)
    write_metrics_csv(out / "metrics.csv", metrics)
    record_path = Path(args.result) / "record.json"
    if record_path.is_file():
        record = read_json(record_path)
        record["metrics"] = metrics
        write_json(record_path, record)
    print(
        f"W: f1={metrics['W']['f1']:.4f} shd={metrics['W']['shd']}  "
        f"P: f1={metrics['P']['pooled']['f1']:.4f} shd={metrics['P']['pooled']['shd']}"
    )
    return 0


def cmd_grid(args) -> int:
    exp = ExperimentConfig.from_file(args.config)
    records = run_grid(exp, out=args.out, jobs=args.jobs, resume=args.resume, plots=not args.no_plots)
    failed = sum(1 for r in records if r.error)
    print(f"cells={len(records)} failed={failed} out={args.out or exp.out}")
    return 0


def cmd_plot(args) -> int:
    from .plots import plot_grid, plot_sorted_weights

    if args.sorted_weights:
        path = plot_sorted_weights(args.source, args.out, args.tau_w, args.tau_p)
        print(path)
    else:
        for path in plot_grid(args.source, args.out):
            print(path)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "fit":
            return cmd_fit(args, argv)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "grid":
            return cmd_grid(args)
        return cmd_plot(args)
    except InvalidConfig as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    except (GraphNotearsError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

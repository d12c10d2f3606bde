"""JSON configuration files for ``simulate`` and ``grid``.

Simulation config (every key optional except n, d, T)::

    {"n": 500, "d": 5, "T": 7, "p": 1, "seed": 0,
     "noise": "gaussian", "noise_scale": 1.0,
     "intra_model": "ER", "inter_model": "ER",
     "graph": {"interaction_prob": 0.1, "static_adjacency": false}}

Experiment config: grid axes take a scalar or a list::

    {"n": [100, 200, 300, 500], "d": [5, 10, 20, 30], "T": 7,
     "lags": [[1]], "intra_model": ["ER", "BA"], "inter_model": ["ER", "SBM"],
     "noise": ["gaussian", "exponential"], "noise_scale": 1.0,
     "seeds": [0, 1, 2, 3, 4],
     "methods": ["graphnotears", "notears_lasso", "dynotears"],
     "solver": {"lambda_w": 0.01, ...}, "graph": {...}, "out": "results", "jobs": 1}
"""
from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .core import GraphNotearsError, InvalidSpec, NoiseSpec
from .simulate import GraphModelSpec
from .solver import SolverConfig

METHOD_NAMES = ("graphnotears", "notears_lasso", "dynotears")

# GraphModelSpec fields settable under "graph"; the two models are grid axes
GRAPH_KEYS = tuple(
    f.name for f in dataclasses.fields(GraphModelSpec) if f.name not in ("intra_model", "inter_model")
)
SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(SolverConfig))


class InvalidConfig(GraphNotearsError, ValueError):
    def __init__(self, message: str, fields: tuple[str, ...] = ()):
        super().__init__(message)
        self.fields = fields


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfig(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise InvalidConfig(f"{path}: top level must be a JSON object")
    return obj


def _unknown(obj: dict, allowed, where: str = "") -> None:
    extra = sorted(set(obj) - set(allowed))
    if extra:
        names = tuple(where + k for k in extra)
        raise InvalidConfig(f"unknown field(s): {', '.join(names)}", names)


def _int(obj: dict, key: str, default=None, minimum: int | None = None, where: str = "") -> int:
    v = obj.get(key, default)
    if v is None:
        raise InvalidConfig(f"field '{where}{key}' is required", (where + key,))
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidConfig(f"field '{where}{key}' must be an integer, got {v!r}", (where + key,))
    if minimum is not None and v < minimum:
        raise InvalidConfig(f"field '{where}{key}' must be >= {minimum}, got {v}", (where + key,))
    return v


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _build(cls, kwargs: dict, where: str):
    try:
        return cls(**kwargs)
    except InvalidSpec as exc:
        raise InvalidConfig(f"{where}: {exc}", (where,)) from exc
    except TypeError as exc:
        raise InvalidConfig(f"{where}: {exc}", (where,)) from exc


def parse_graph(obj: dict | None, intra: str = "ER", inter: str = "ER") -> GraphModelSpec:
    obj = dict(obj or {})
    _unknown(obj, GRAPH_KEYS, "graph.")
    return _build(GraphModelSpec, {"intra_model": intra, "inter_model": inter, **obj}, "graph")


def parse_solver(obj: dict | None) -> SolverConfig:
    obj = dict(obj or {})
    _unknown(obj, SOLVER_KEYS, "solver.")
    return _build(SolverConfig, obj, "solver")


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    d: int
    T: int
    p: int = 1
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    graph: GraphModelSpec = field(default_factory=GraphModelSpec)

    @classmethod
    def from_dict(cls, obj: dict) -> "SimulationConfig":
        _unknown(
            obj,
            ("n", "d", "T", "p", "seed", "noise", "noise_scale", "intra_model", "inter_model", "graph"),
        )
        n = _int(obj, "n", minimum=1)
        d = _int(obj, "d", minimum=1)
        T = _int(obj, "T", minimum=2)
        p = _int(obj, "p", 1, minimum=1)
        seed = _int(obj, "seed", 0, minimum=0)
        if p >= T:
            raise InvalidConfig(f"fields 'p' ({p}) and 'T' ({T}) need p < T", ("p", "T"))
        noise = _build(
            NoiseSpec, {"kind": obj.get("noise", "gaussian"), "scale": obj.get("noise_scale", 1.0)}, "noise"
        )
        graph = parse_graph(obj.get("graph"), obj.get("intra_model", "ER"), obj.get("inter_model", "ER"))
        return cls(n=n, d=d, T=T, p=p, seed=seed, noise=noise, graph=graph)

    def to_dict(self) -> dict:
        graph = self.graph.to_dict()
        return {
            "n": self.n,
            "d": self.d,
            "T": self.T,
            "p": self.p,
            "seed": self.seed,
            "noise": self.noise.kind,
            "noise_scale": self.noise.scale,
            "intra_model": graph.pop("intra_model"),
            "inter_model": graph.pop("inter_model"),
            "graph": graph,
        }


@dataclass(frozen=True)
class Setting:
    """One point of the experiment grid, without seed and method."""

    n: int
    d: int
    T: int
    lags: tuple[int, ...]
    intra_model: str
    inter_model: str
    noise: str
    noise_scale: float = 1.0

    @property
    def lags_label(self) -> str:
        return "-".join(str(l) for l in self.lags)


@dataclass(frozen=True)
class ExperimentConfig:
    n: tuple[int, ...] = (100, 200, 300, 500)
    d: tuple[int, ...] = (5, 10, 20, 30)
    T: int = 7
    lags: tuple[tuple[int, ...], ...] = ((1,),)
    intra_model: tuple[str, ...] = ("ER", "BA")
    inter_model: tuple[str, ...] = ("ER", "SBM")
    noise: tuple[str, ...] = ("gaussian", "exponential")
    noise_scale: float = 1.0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    methods: tuple[str, ...] = METHOD_NAMES
    solver: SolverConfig = field(default_factory=SolverConfig)
    graph: dict = field(default_factory=dict)
    out: str = "results"
    jobs: int = 1

    KEYS = (
        "n", "d", "T", "lags", "intra_model", "inter_model", "noise", "noise_scale",
        "seeds", "methods", "solver", "graph", "out", "jobs",
    )

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        _unknown(obj, cls.KEYS)
        default = cls()

        def ints(key, minimum):
            vals = _as_list(obj.get(key, getattr(default, key)))
            if not vals:
                raise InvalidConfig(f"field '{key}' must not be empty", (key,))
            return tuple(_int({key: v}, key, minimum=minimum) for v in vals)

        def names(key, allowed):
            vals = _as_list(obj.get(key, getattr(default, key)))
            if not vals:
                raise InvalidConfig(f"field '{key}' must not be empty", (key,))
            out = []
            for v in vals:
                norm = str(v).upper() if key.endswith("_model") else str(v).lower()
                if norm not in allowed:
                    raise InvalidConfig(f"field '{key}': {v!r} is not one of {allowed}", (key,))
                out.append(norm)
            return tuple(out)

        T = _int(obj, "T", default.T, minimum=2)
        raw_lags = obj.get("lags", [list(l) for l in default.lags])
        if isinstance(raw_lags, int):
            raw_lags = [list(range(1, raw_lags + 1))]
        lags = []
        for entry in _as_list(raw_lags):
            entry = list(range(1, entry + 1)) if isinstance(entry, int) else entry
            if not isinstance(entry, list) or not entry or not all(
                isinstance(l, int) and not isinstance(l, bool) and l >= 1 for l in entry
            ):
                raise InvalidConfig(f"field 'lags': bad lag set {entry!r}", ("lags",))
            if max(entry) >= T:
                raise InvalidConfig(
                    f"fields 'lags' and 'T': max lag {max(entry)} must be < T={T}", ("lags", "T")
                )
            if entry != list(range(1, len(entry) + 1)):
                raise InvalidConfig(
                    f"field 'lags': the simulator needs contiguous lags 1..p, got {entry}", ("lags",)
                )
            lags.append(tuple(entry))
        if not lags:
            raise InvalidConfig("field 'lags' must not be empty", ("lags",))

        noise_scale = obj.get("noise_scale", default.noise_scale)
        if isinstance(noise_scale, bool) or not isinstance(noise_scale, (int, float)) or noise_scale <= 0:
            raise InvalidConfig(f"field 'noise_scale' must be a positive number, got {noise_scale!r}", ("noise_scale",))
        graph = dict(obj.get("graph") or {})
        parse_graph(graph)  # validate eagerly
        out = obj.get("out", default.out)
        if not isinstance(out, str):
            raise InvalidConfig(f"field 'out' must be a string, got {out!r}", ("out",))
        return cls(
            n=ints("n", 1),
            d=ints("d", 1),
            T=T,
            lags=tuple(lags),
            intra_model=names("intra_model", ("ER", "BA")),
            inter_model=names("inter_model", ("ER", "SBM")),
            noise=names("noise", NoiseSpec._KINDS),
            noise_scale=float(noise_scale),
            seeds=ints("seeds", 0),
            methods=names("methods", METHOD_NAMES),
            solver=parse_solver(obj.get("solver")),
            graph=graph,
            out=out,
            jobs=_int(obj, "jobs", default.jobs, minimum=1),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_config(path))

    def settings(self) -> list[Setting]:
        return [
            Setting(n, d, self.T, lags, intra, inter, noise, self.noise_scale)
            for noise, n, inter, intra, lags, d in itertools.product(
                self.noise, self.n, self.inter_model, self.intra_model, self.lags, self.d
            )
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": list(self.n),
            "d": list(self.d),
            "T": self.T,
            "lags": [list(l) for l in self.lags],
            "intra_model": list(self.intra_model),
            "inter_model": list(self.inter_model),
            "noise": list(self.noise),
            "noise_scale": self.noise_scale,
            "seeds": list(self.seeds),
            "methods": list(self.methods),
            "solver": self.solver.to_dict(),
            "graph": dict(self.graph),
            "out": self.out,
            "jobs": self.jobs,
        }

"""Experiment configuration files (TOML).

Layout::

    seed = 0            # optional, top level
    jobs = 1            # optional, top level

    [experiment]
    kind = "sweep"      # or "real"
    trials = 50

    [graph]             # sweep only
    model = "er"        # er | knn | sbm | file
    nodes = 50
    p = 0.2

    [filter]            # sweep, and real/congress
    kind = "heat"
    alpha = 1.0

    [trial]             # sweep only
    M = 200
    n = 30
    lambda = 2.0
    tau = 0.1
    K = 3
    delta = 0.1

    [sweep]
    n = [10, 15, 20, 25, 30, 35, 40, 45, 50]
    values = [1.0, 10.0]  # replaces the filter's scalar parameter
    f1_target = "full"    # or "truth"

    [real]
    dataset = "congress"  # or "temperature"
    path = "congress.csv"
    M = 100               # congress only
    altitude_threshold = 300.0  # temperature only
    n = []                # empty: 20%..100% of N
    lambda = 2.0
    tau = 0.1

    [output]
    dir = "out"
    table = "sweep.csv"
    trials = "trials.csv"

Unknown keys are errors; every problem found is reported at once.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .harness import GRAPH_MODELS, RealConfig, TrialConfig
from .signals import GraphFilter

SCHEMA = {
    None: {"seed": int, "jobs": int},
    "experiment": {"kind": str, "trials": int},
    "graph": {"model": str, "nodes": int, "p": float, "k": int, "sizes": list, "p_in": float, "p_out": float, "path": str},
    "filter": {"kind": str, "alpha": float, "beta": float, "cutoff": int, "coefficients": list},
    "trial": {"M": int, "n": int, "lambda": float, "tau": float, "K": int, "delta": float},
    "sweep": {"n": list, "values": list, "f1_target": str},
    "real": {"dataset": str, "path": str, "M": int, "altitude_threshold": float, "n": list, "lambda": float, "tau": float},
    "output": {"dir": str, "table": str, "trials": str},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    trials: int
    seed: int
    jobs: int
    out_dir: Path
    table_name: str
    trials_name: str
    trial: TrialConfig | None = None
    n_values: list = field(default_factory=list)
    param_values: list | None = None
    f1_target: str = "full"
    dataset: str | None = None
    data_path: Path | None = None
    real: RealConfig | None = None
    real_M: int = 100
    altitude_threshold: float = 300.0
    filter: GraphFilter | None = None


def _typecheck(section, key, value, errors):
    want = SCHEMA[section][key]
    where = key if section is None else f"{section}.{key}"
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, want) or isinstance(value, bool):
        errors.append(f"{where}: expected {want.__name__}, got {type(value).__name__}")
        return None
    return value


def parse_config(doc: dict, base_dir=None) -> ExperimentConfig:
    base_dir = Path(base_dir or ".")
    errors = []
    sections = {}
    top = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in SCHEMA:
                errors.append(f"unknown section [{key}]")
                continue
            sec = {}
            for k, v in value.items():
                if k not in SCHEMA[key]:
                    errors.append(f"unknown key {key}.{k}")
                    continue
                v = _typecheck(key, k, v, errors)
                if v is not None:
                    sec[k] = v
            sections[key] = sec
        elif key in SCHEMA[None]:
            v = _typecheck(None, key, value, errors)
            if v is not None:
                top[key] = v
        else:
            errors.append(f"unknown key {key}")

    exp = sections.get("experiment", {})
    kind = exp.get("kind", "sweep")
    if kind not in ("sweep", "real"):
        errors.append(f"experiment.kind: must be 'sweep' or 'real', got {kind!r}")
    trials = exp.get("trials", 1)
    if trials < 1:
        errors.append(f"experiment.trials: must be >= 1, got {trials}")
    seed = top.get("seed", 0)
    jobs = top.get("jobs", 1)
    if jobs < 1:
        errors.append(f"jobs: must be >= 1, got {jobs}")

    out = sections.get("output", {})
    cfg = ExperimentConfig(
        kind=kind,
        trials=trials,
        seed=seed,
        jobs=jobs,
        out_dir=base_dir / out.get("dir", "out"),
        table_name=out.get("table", "sweep.csv" if kind == "sweep" else "real.csv"),
        trials_name=out.get("trials", "trials.csv"),
    )

    filt = None
    if "filter" in sections:
        try:
            filt = GraphFilter.from_dict(sections["filter"])
        except ValueError as exc:
            errors.append(f"filter: {exc}")
    cfg.filter = filt

    if kind == "sweep":
        for sec in ("graph", "filter", "trial"):
            if sec not in sections:
                errors.append(f"missing section [{sec}]")
        if "real" in sections:
            errors.append("section [real] is only valid with experiment.kind = 'real'")
        graph = dict(sections.get("graph", {}))
        model = graph.get("model")
        if model not in GRAPH_MODELS:
            errors.append(f"graph.model: must be one of {sorted(GRAPH_MODELS)}, got {model!r}")
        else:
            params = set(graph) - {"model"}
            for k in sorted(params - GRAPH_MODELS[model]):
                errors.append(f"graph.{k}: not a parameter of the {model} model")
            for k in sorted(GRAPH_MODELS[model] - params):
                errors.append(f"graph.{k}: required by the {model} model")
            for k in ("p", "p_in", "p_out"):
                if k in graph and not 0 <= graph[k] <= 1:
                    errors.append(f"graph.{k}: must lie in [0, 1], got {graph[k]}")
            if "path" in graph:
                graph["path"] = str(base_dir / graph["path"])
        tr = sections.get("trial", {})
        sw = sections.get("sweep", {})
        f1_target = sw.get("f1_target", "full")
        if f1_target not in ("full", "truth"):
            errors.append(f"sweep.f1_target: must be 'full' or 'truth', got {f1_target!r}")
        n_values = sw.get("n", [tr.get("n", 30)])
        if not all(isinstance(v, int) and v >= 2 for v in n_values):
            errors.append("sweep.n: must be a list of integers >= 2")
        if "nodes" in graph and any(isinstance(v, int) and v > graph["nodes"] for v in n_values):
            errors.append(f"sweep.n: values exceed graph.nodes = {graph['nodes']}")
        param_values = sw.get("values")
        if param_values is not None:
            if filt is not None and filt.kind == "polynomial":
                errors.append("sweep.values: polynomial filters have no scalar parameter")
            elif filt is not None:
                for v in param_values:
                    try:
                        filt.with_parameter(v)
                    except (ValueError, TypeError) as exc:
                        errors.append(f"sweep.values: {exc}")
        if not errors and filt is not None:
            try:
                cfg.trial = TrialConfig(
                    graph=graph,
                    filter=filt,
                    M=tr.get("M", 200),
                    n=tr.get("n", n_values[0]),
                    lam=tr.get("lambda", 2.0),
                    tau=tr.get("tau", 0.1),
                    seed=seed,
                    K=tr.get("K", 3),
                    delta=tr.get("delta", 0.1),
                )
            except ValueError as exc:
                errors.append(f"trial: {exc}")
        cfg.n_values = n_values
        cfg.param_values = param_values
        cfg.f1_target = f1_target
    else:
        real = sections.get("real")
        if real is None:
            errors.append("missing section [real]")
            real = {}
        for sec in ("graph", "trial", "sweep"):
            if sec in sections:
                errors.append(f"section [{sec}] is only valid with experiment.kind = 'sweep'")
        dataset = real.get("dataset")
        if dataset not in ("congress", "temperature"):
            errors.append(f"real.dataset: must be 'congress' or 'temperature', got {dataset!r}")
        if "path" not in real:
            errors.append("real.path: required")
        if dataset == "temperature" and "M" in real:
            errors.append("real.M: signals are read from the station file for the temperature dataset")
        if dataset == "congress" and "altitude_threshold" in real:
            errors.append("real.altitude_threshold: only valid for the temperature dataset")
        if dataset == "congress" and filt is not None and filt.kind != "resolvent":
            errors.append("filter: congress signals use a resolvent filter")
        n_values = real.get("n", [])
        if not all(isinstance(v, int) and v >= 2 for v in n_values):
            errors.append("real.n: must be a list of integers >= 2")
        lam = real.get("lambda", 2.0)
        tau = real.get("tau", 0.1)
        if lam < 0:
            errors.append(f"real.lambda: must be >= 0, got {lam}")
        if not 0 <= tau < 1:
            errors.append(f"real.tau: must lie in [0, 1), got {tau}")
        cfg.dataset = dataset
        cfg.data_path = base_dir / real["path"] if "path" in real else None
        cfg.real_M = real.get("M", 100)
        cfg.altitude_threshold = real.get("altitude_threshold", 300.0)
        cfg.real = RealConfig(n_values=tuple(n_values), trials=trials, lam=lam, tau=tau, seed=seed)

    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from None
    return parse_config(doc, base_dir=path.parent)

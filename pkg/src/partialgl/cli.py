"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or data
error, 4 hard invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .graphs import (
    Graph,
    GraphError,
    build_laplacian,
    eigendecompose,
    generate_er,
    generate_knn,
    generate_sbm,
    load_edge_list,
    save_edge_list,
    save_points,
)
from .harness import (
    congress_experiment,
    f1_score,
    real_table_csv,
    run_sweep,
    temperature_experiment,
)
from .observation import (
    DegenerateSurrogateError,
    lift_surrogate_full,
    project_surrogate_partial,
    restrict_signals,
    sample_observation,
)
from .signals import GraphFilter, generate_signals, load_signals, save_signals, sharpness_ratio
from .solver import SolverConfig, solve_gl_sigrep, threshold_edges
from .theory import coherence, condition_ratio, min_t_for_condition, theorem_report

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_INVARIANT = 0, 2, 3, 4

logger = logging.getLogger("partialgl")


class UsageError(Exception):
    pass


def _probability(name):
    def parse(s):
        v = float(s)
        if not 0.0 <= v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 1], got {v}")
        return v

    return parse


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _int_list(s):
    try:
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _add_filter_args(p, default_kind="heat"):
    p.add_argument("--filter", choices=["heat", "resolvent", "ideal_lowpass", "polynomial"], default=default_kind,
                   help="graph filter family (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=1.0, help="heat diffusion time (default: %(default)s)")
    p.add_argument("--beta", type=float, default=2.5, help="resolvent parameter (default: %(default)s)")
    p.add_argument("--cutoff", type=int, default=3, help="ideal low-pass bandwidth K (default: %(default)s)")
    p.add_argument("--coefficients", type=str, default="1", help="polynomial coefficients h0,h1,... (default: %(default)s)")


def _filter_from_args(args) -> GraphFilter:
    try:
        if args.filter == "heat":
            return GraphFilter.heat(args.alpha)
        if args.filter == "resolvent":
            return GraphFilter.resolvent(args.beta)
        if args.filter == "ideal_lowpass":
            return GraphFilter.ideal_lowpass(args.cutoff)
        return GraphFilter.polynomial([float(c) for c in args.coefficients.split(",")])
    except ValueError as exc:
        raise UsageError(f"--{args.filter}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partialgl",
        description="Graph learning from smooth signals under partial observation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None,
                        help="base random seed (default: 0, or the experiment config's seed)")
    parser.add_argument("--jobs", type=_positive_int, default=None,
                        help="worker processes for sweeps (default: config value or 1)")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: current directory, or the config's output.dir)")
    parser.add_argument("--report", choices=["csv", "json"], default="csv",
                        help="format of report outputs (default: %(default)s)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="generate a random graph or normalize an edge-list file")
    p.add_argument("model", choices=["er", "knn", "sbm", "file"])
    p.add_argument("--nodes", type=_positive_int, default=50, help="node count for er/knn (default: %(default)s)")
    p.add_argument("--p", type=_probability("--p"), default=0.2, help="ER edge probability (default: %(default)s)")
    p.add_argument("--k", type=_positive_int, default=5, help="kNN neighbours (default: %(default)s)")
    p.add_argument("--sizes", type=_int_list, default=[10, 10], help="SBM block sizes (default: 10,10)")
    p.add_argument("--p-in", type=_probability("--p-in"), default=0.6, help="SBM within-block probability (default: %(default)s)")
    p.add_argument("--p-out", type=_probability("--p-out"), default=0.05, help="SBM cross-block probability (default: %(default)s)")
    p.add_argument("--path", type=Path, default=None, help="input edge list for model 'file'")
    p.add_argument("--output", default="graph.csv", help="edge-list file name (default: %(default)s)")

    p = sub.add_parser("gen-signals", help="filter Gaussian excitations on a graph")
    p.add_argument("--graph", type=Path, required=True, help="edge-list CSV")
    p.add_argument("--M", type=_positive_int, default=200, help="number of signals (default: %(default)s)")
    _add_filter_args(p)
    p.add_argument("--output", default="signals.csv", help="signal CSV name (default: %(default)s)")

    p = sub.add_parser("learn", help="learn a Laplacian from signals, optionally on a random node subset")
    p.add_argument("--signals", type=Path, required=True, help="signal CSV, one signal per row")
    p.add_argument("--observe", type=_positive_int, default=None, help="observe a random subset of this many nodes")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0, help="Frobenius regularization (default: %(default)s)")
    p.add_argument("--tau", type=float, default=0.1, help="relative edge threshold (default: %(default)s)")
    p.add_argument("--max-iters", type=_positive_int, default=20000, help="solver iteration cap (default: %(default)s)")
    p.add_argument("--graph", type=Path, default=None, help="ground-truth edge list; enables the bound report")
    p.add_argument("--K", type=_positive_int, default=3, help="bandwidth for the bound report (default: %(default)s)")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability for the bound report (default: %(default)s)")

    p = sub.add_parser("bounds", help="sampling condition and constants for a graph and filter")
    p.add_argument("--graph", type=Path, required=True, help="edge-list CSV")
    p.add_argument("--K", type=_positive_int, default=3, help="bandwidth (default: %(default)s)")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability (default: %(default)s)")
    p.add_argument("--observe", type=_int_list, default=None, help="observed counts to evaluate (default: all)")
    _add_filter_args(p)

    p = sub.add_parser("experiment", help="run a sweep or real-data experiment from a TOML config")
    p.add_argument("config", type=Path)

    p = sub.add_parser("eval", help="F1 of an estimated edge list against a ground truth")
    p.add_argument("--estimated", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--tau", type=float, default=0.0,
                   help="relative threshold applied to estimated weights (default: %(default)s, keep all edges)")
    return parser


def _emit(args, out_dir: Path, name: str, rows: list, columns=None):
    """Write ``rows`` as CSV or JSON, depending on ``--report``."""
    if args.report == "json":
        path = out_dir / f"{name}.json"
        payload = rows[0] if len(rows) == 1 else rows
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    else:
        path = out_dir / f"{name}.csv"
        columns = columns or list(rows[0])
        lines = [",".join(columns)]
        for r in rows:
            lines.append(",".join(_cell(r.get(c)) for c in columns))
        path.write_text("\n".join(lines) + "\n")
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def _json_clean(d):
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def _sidecar(path: Path, payload: dict):
    Path(str(path) + ".json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_sidecar_nodes(path: Path):
    side = Path(str(path) + ".json")
    if side.exists():
        return json.loads(side.read_text()).get("n_nodes")
    return None


def _load_graph(path: Path):
    return load_edge_list(path, n_nodes=_read_sidecar_nodes(path))


def cmd_gen_graph(args, out_dir: Path) -> int:
    rng = np.random.default_rng(args.seed)
    points = None
    if args.model == "er":
        g = generate_er(args.nodes, args.p, rng)
        params = {"nodes": args.nodes, "p": args.p}
    elif args.model == "knn":
        if args.k >= args.nodes:
            raise UsageError(f"--k must be smaller than --nodes ({args.nodes}), got {args.k}")
        g, points = generate_knn(args.nodes, args.k, rng, return_points=True)
        params = {"nodes": args.nodes, "k": args.k}
    elif args.model == "sbm":
        if not args.sizes or min(args.sizes) < 1:
            raise UsageError("--sizes must be positive integers")
        g = generate_sbm(args.sizes, args.p_in, args.p_out, rng)
        params = {"sizes": args.sizes, "p_in": args.p_in, "p_out": args.p_out}
    else:
        if args.path is None:
            raise UsageError("--path is required for model 'file'")
        g = _load_graph(args.path)
        params = {"path": str(args.path)}
    out = out_dir / args.output
    save_edge_list(g, out)
    if points is not None:
        save_points(points, out.with_name(out.stem + "_points.csv"))
    _sidecar(out, {"model": args.model, "params": params, "seed": args.seed, "n_nodes": g.n_nodes,
                   "connected": g.is_connected()})
    logger.info("wrote %s (%d nodes, %d edges)", out, g.n_nodes, g.n_edges)
    return EXIT_OK


def cmd_gen_signals(args, out_dir: Path) -> int:
    g = _load_graph(args.graph)
    f = _filter_from_args(args)
    spec = eigendecompose(build_laplacian(g))
    sig = generate_signals(spec, f, args.M, np.random.default_rng(args.seed))
    out = out_dir / args.output
    save_signals(sig.signals, out)
    save_signals(sig.excitations, out.with_name(out.stem + "_excitations.csv"))
    _sidecar(out, {"graph": str(args.graph), "filter": f.to_dict(), "M": args.M, "seed": args.seed,
                   "n_nodes": g.n_nodes, "M_bound": sig.M_bound})
    return EXIT_OK


def _relabel(g: Graph, observed, N: int) -> Graph:
    A = np.zeros((N, N))
    idx = np.asarray(observed, dtype=int)
    A[np.ix_(idx, idx)] = g.adjacency
    return Graph(A)


def cmd_learn(args, out_dir: Path) -> int:
    Y = load_signals(args.signals)
    N = Y.shape[1]
    cfg = SolverConfig(lam=args.lam, max_iters=args.max_iters)
    mask = None
    if args.observe is not None:
        if args.observe > N:
            raise UsageError(f"--observe must be at most {N}, got {args.observe}")
        mask = sample_observation(N, args.observe, np.random.default_rng(args.seed))
        Yo = restrict_signals(mask, Y)
    else:
        Yo = Y
    res = solve_gl_sigrep(Yo, cfg)
    # edge lists are written in the original node labels
    observed = list(mask.observed) if mask is not None else list(range(N))
    side = {"n_nodes": N, "lambda": args.lam, "observed": observed if mask is not None else None}
    for name, g in (("learned.csv", res.graph()), ("learned_binary.csv", threshold_edges(res.laplacian, args.tau))):
        save_edge_list(_relabel(g, observed, N), out_dir / name)
        _sidecar(out_dir / name, side)
    record = dict(res.record(), n=res.n, lam=args.lam)
    if mask is not None:
        record["mask"] = mask.to_csv()
    _emit(args, out_dir, "result", [record])

    if args.graph is not None:
        truth = _load_graph(args.graph)
        if truth.n_nodes != N:
            raise UsageError(f"--graph has {truth.n_nodes} nodes, signals have {N}")
        spec = eigendecompose(build_laplacian(truth))
        if mask is None:
            mask = sample_observation(N, N, np.random.default_rng(args.seed))
            part = solve_gl_sigrep(restrict_signals(mask, Y), cfg)
            full = res
        else:
            part = res
            full = solve_gl_sigrep(Y, cfg)
        L_hat = lift_surrogate_full(mask, part.laplacian)
        try:
            L_tilde = project_surrogate_partial(mask, full.laplacian)
        except DegenerateSurrogateError as exc:
            logger.warning("partial surrogate undefined: %s", exc)
            L_tilde = None
        K = min(args.K, N - 1)
        rep = theorem_report(full.laplacian, part.laplacian, L_hat, L_tilde, mask, Y, spec, K, args.delta,
                             lam=args.lam)
        if args.report == "json":
            _emit(args, out_dir, "bounds", [_json_clean(rep.to_dict())])
        else:
            _emit(args, out_dir, "bounds", [rep.to_row()])
        if not rep.left_inequalities_hold:
            logger.error("optimality inequality violated: %s", rep.inequalities)
            return EXIT_INVARIANT
    return EXIT_OK


def cmd_bounds(args, out_dir: Path) -> int:
    g = _load_graph(args.graph)
    N = g.n_nodes
    if not 1 <= args.K < N:
        raise UsageError(f"--K must lie in [1, {N - 1}], got {args.K}")
    if not 0 < args.delta < 1:
        raise UsageError(f"--delta must lie in (0, 1), got {args.delta}")
    spec = eigendecompose(build_laplacian(g))
    f = _filter_from_args(args)
    try:
        prof = sharpness_ratio(spec, f, args.K)
        eta, H = prof.eta_K, prof.H_bound
    except ValueError:
        eta = H = math.nan
    coh = coherence(spec.leading(args.K))
    kappa = condition_ratio(spec)
    rows = []
    for n in args.observe or range(1, N + 1):
        if not 1 <= n <= N:
            raise UsageError(f"--observe values must lie in [1, {N}], got {n}")
        t = min_t_for_condition(n, N, coh, args.K, args.delta)
        rows.append({
            "n": n,
            "N": N,
            "K": args.K,
            "delta": args.delta,
            "coherence": coh,
            "t_required": math.nan if t is None else t,
            "condition_holds": t is not None,
            "C_t": math.nan if t is None else (1 + t) * kappa,
            "sigma_ratio": kappa,
            "eta_K": eta,
            "H_bound": H,
        })
    if args.report == "json":
        rows = [_json_clean(r) for r in rows]
    _emit(args, out_dir, "bounds", rows)
    return EXIT_OK


def cmd_eval(args, out_dir: Path) -> int:
    truth = _load_graph(args.truth)
    est = load_edge_list(args.estimated, n_nodes=truth.n_nodes)
    if not 0 <= args.tau < 1:
        raise UsageError(f"--tau must lie in [0, 1), got {args.tau}")
    est_bin = threshold_edges(build_laplacian(est), args.tau)
    truth = truth.binarized()
    side = Path(str(args.estimated) + ".json")
    observed = json.loads(side.read_text()).get("observed") if side.exists() else None
    if observed is not None:
        # score only the subgraph the estimate could see
        est_bin, truth = est_bin.subgraph(observed), truth.subgraph(observed)
    f1, prec, rec = f1_score(est_bin, truth)
    _emit(args, out_dir, "eval", [{"f1": f1, "precision": prec, "recall": rec,
                                   "estimated_edges": est_bin.n_edges, "true_edges": truth.n_edges,
                                   "nodes": truth.n_nodes}])
    return EXIT_OK


def cmd_experiment(args, out_dir_override) -> int:
    cfg = load_config(args.config)
    out_dir = out_dir_override or cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs or cfg.jobs
    if args.seed is not None:
        cfg.seed = args.seed
        if cfg.trial is not None:
            cfg.trial = replace(cfg.trial, seed=args.seed)
        if cfg.real is not None:
            cfg.real = replace(cfg.real, seed=args.seed)
    if cfg.kind == "sweep":
        res = run_sweep(cfg.trial, n_values=cfg.n_values, param_values=cfg.param_values,
                        trials=cfg.trials, f1_target=cfg.f1_target, jobs=jobs)
        (out_dir / cfg.table_name).write_text(res.table_csv())
        (out_dir / cfg.trials_name).write_text(res.trials_csv())
        for fail in res.failures:
            logger.warning("grid point aborted: %s", fail)
        if res.violations:
            logger.error("%d trial(s) violated a hard invariant", len(res.violations))
            return EXIT_INVARIANT
        return EXIT_OK
    if cfg.dataset == "congress":
        beta = cfg.filter.beta if cfg.filter is not None else 1.0
        rows = congress_experiment(cfg.data_path, cfg.real, M=cfg.real_M, beta=beta)
    else:
        rows = temperature_experiment(cfg.data_path, cfg.real, threshold=cfg.altitude_threshold)
    (out_dir / cfg.table_name).write_text(real_table_csv(rows))
    return EXIT_OK


COMMANDS = {
    "gen-graph": cmd_gen_graph,
    "gen-signals": cmd_gen_signals,
    "learn": cmd_learn,
    "bounds": cmd_bounds,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "experiment":
            return cmd_experiment(args, args.out_dir)
        if args.seed is None:
            args.seed = 0
        out_dir = args.out_dir or Path(".")
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out_dir)
    except (UsageError, ConfigError) as exc:
        print(f"partialgl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, ValueError, OSError, RuntimeError) as exc:
        print(f"partialgl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

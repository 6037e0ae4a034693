"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (also collected into the
terminal summary) before asserting.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import multistart_pgd
from partialgl.cli import main as cli_main
from partialgl.graphs import build_laplacian, eigendecompose, generate_er, validate_in_laplacian_set
from partialgl.harness import TrialConfig, run_sweep, run_trial, trial_streams
from partialgl.observation import sample_observation
from partialgl.signals import GraphFilter, apply_filter, generate_signals, sharpness_ratio
from partialgl.solver import SolverConfig, solve_gl_sigrep
from partialgl.theory import coherence, min_t_for_condition, nonideal_residual, partial_energy_gap, rip_check

pytestmark = pytest.mark.acceptance

ER50 = {"model": "er", "nodes": 50, "p": 0.2}
N_GRID = [10, 15, 20, 25, 30, 35, 40, 45, 50]
CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# every learned Laplacian and surrogate seen by the suite
FEASIBILITY = {"checked": 0, "failed": []}


def verdict(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def track_trial(res, where):
    # run_trial validates L_p*, L*, L_hat and (when it exists) L_tilde_p at 1e-8
    FEASIBILITY["checked"] += 4 if res.surrogate_defined else 3
    if not res.feasible:
        FEASIBILITY["failed"].append(where)


def track_matrix(L, size, where):
    FEASIBILITY["checked"] += 1
    if not validate_in_laplacian_set(L, size, 1e-8).ok:
        FEASIBILITY["failed"].append(where)


def test_criterion_1_optimality_chain():
    t0 = time.perf_counter()
    bad, undefined = [], []
    for i in range(200):
        cfg = TrialConfig(graph=ER50, filter=GraphFilter.heat((1.0, 10.0)[i % 2]), M=200,
                          n=N_GRID[i % len(N_GRID)], lam=0.0, seed=1)
        res = run_trial(cfg, trial=i)
        track_trial(res, f"c1 trial {i}")
        ineq = {q.name: q for q in res.bound_report.inequalities}
        if not res.surrogate_defined:
            # L* has no weight inside the observed block, so the partial surrogate does not exist
            undefined.append((i, res.n))
        for name in ("partial_optimality", "full_optimality"):
            q = ineq.get(name)
            if q is not None and not q.lhs <= q.rhs + 1e-8 * (1 + abs(q.rhs)):
                bad.append((i, name, q.lhs, q.rhs))
    elapsed = time.perf_counter() - t0
    ok = not bad and not undefined and elapsed < 300
    violated = len({b[0] for b in bad})
    assert verdict(1, ok, f"{200 - violated - len(undefined)}/200 trials satisfy both left inequalities at "
                          f"lambda=0; {violated} violate one; {len(undefined)} have no partial surrogate "
                          f"because L* puts zero weight on the observed block ({elapsed:.0f}s)"), (bad[:5], undefined)


def test_criterion_2_solver_matches_oracle():
    t0 = time.perf_counter()
    Ys = []
    for i in range(50):
        g_rng, s_rng, _ = trial_streams(2, i)
        sp = eigendecompose(build_laplacian(generate_er(4, 0.6, g_rng)))
        Ys.append(generate_signals(sp, GraphFilter.heat(1.0), 10, s_rng).signals)
    Ys = np.array(Ys)
    ref, _ = multistart_pgd(Ys, 2.0, seed=2)
    ours = []
    for k, Y in enumerate(Ys):
        res = solve_gl_sigrep(Y, SolverConfig(lam=2.0))
        track_matrix(res.laplacian, 4, f"c2 instance {k}")
        ours.append(res.objective)
    rel = np.abs(np.array(ours) - ref) / np.abs(ref)
    elapsed = time.perf_counter() - t0
    ok = rel.max() <= 1e-4 and elapsed < 60
    assert verdict(2, ok, f"max relative gap to multi-start oracle {rel.max():.2e} over 50 instances "
                          f"({elapsed:.0f}s)")


def test_criterion_3_full_observation_identity():
    bad = []
    for i in range(20):
        res = run_trial(TrialConfig(graph=ER50, filter=GraphFilter.heat(1.0), M=200, n=50, seed=3), trial=i)
        track_trial(res, f"c3 trial {i}")
        same_obj = abs(res.objective_partial - res.objective_full) <= 1e-8 * (1 + abs(res.objective_full))
        if res.f1_partial != res.f1_full_restricted or not same_obj:
            bad.append((i, res.f1_partial, res.f1_full_restricted, res.objective_partial, res.objective_full))
    assert verdict(3, not bad, f"{20 - len(bad)}/20 full-observation trials match the full pipeline"), bad


def test_criterion_4_rip_statistics():
    N, K, delta, draws = 50, 3, 0.1, 1000
    g_rng, s_rng, m_rng = trial_streams(4, 0)
    g = generate_er(N, 0.2, g_rng)
    L = build_laplacian(g)
    sp = eigendecompose(L)
    coh = coherence(sp.leading(K))
    feasible = [n for n in range(1, N + 1) if min_t_for_condition(n, N, coh, K, delta) is not None]
    if not feasible:
        # even n = N needs coherence < 1 / (3 ln(K / delta))
        need = 1 / (3 * math.log(K / delta))
        verdict(4, False, f"sampling condition unattainable: coherence {coh:.3f} on ER(50,0.2) with K=3, "
                          f"needs < {need:.3f} for any n <= N; Monte Carlo not run")
        pytest.fail("no observation count satisfies the sampling condition on this graph")
    n = feasible[0]
    t = min_t_for_condition(n, N, coh, K, delta)
    f = GraphFilter.ideal_lowpass(K)
    fails = 0
    for _ in range(draws):
        mask = sample_observation(N, n, m_rng)
        y = apply_filter(sp, f, s_rng.standard_normal(N))
        fails += not rip_check(mask, L, sp, K, t, y)[0].holds
    rate = fails / draws
    assert verdict(4, rate <= 0.13, f"RIP failure rate {rate:.3f} at n={n}, t={t:.3f} over {draws} draws")


def test_criterion_5_fig1_properties():
    t0 = time.perf_counter()
    base = TrialConfig(graph=ER50, filter=GraphFilter.heat(1.0), M=200, lam=2.0, seed=5)
    res = run_sweep(base, n_values=N_GRID, param_values=[1.0, 10.0], trials=50, f1_target="full")
    for n, p, r in res.trials:
        track_trial(r, f"c5 n={n} alpha={p} trial {r.trial}")
    rows = {(r["n"], r["param"]): r for r in res.rows}
    a = all(r["median_ratio"] >= 1 for r in res.rows)
    b = all(rows[(n, 10.0)]["median_ratio"] <= rows[(n, 1.0)]["median_ratio"] + 0.05 for n in N_GRID)
    c = all(rows[(50, p)]["median_f1_partial"] >= rows[(10, p)]["median_f1_partial"] for p in (1.0, 10.0))
    complete = not res.failures and all(r["trials"] == 50 for r in res.rows)
    elapsed = time.perf_counter() - t0
    for (n, p), r in sorted(rows.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"  alpha={p:>4} n={n:>2} median F1={r['median_f1_partial']:.3f} median ratio={r['median_ratio']:.4f}")
    ok = a and b and c and complete and elapsed < 600
    assert verdict(5, ok, f"(a) ratio>=1: {a}, (b) alpha=10 below alpha=1 +0.05: {b}, "
                          f"(c) F1(n=50)>=F1(n=10): {c} ({elapsed:.0f}s)")


def test_criterion_6_nonideal_residual():
    worst, bad = -math.inf, 0
    f = GraphFilter.heat(5.0)
    K = 5
    for i in range(500):
        g_rng, s_rng, m_rng = trial_streams(6, i)
        L = build_laplacian(generate_er(50, 0.2, g_rng))
        sp = eigendecompose(L)
        x = s_rng.standard_normal(50)
        y = apply_filter(sp, f, x)
        prof = sharpness_ratio(sp, f, K, x)
        mask = sample_observation(50, int(m_rng.integers(1, 51)), m_rng)
        gap = partial_energy_gap(mask, L, sp, K, y)
        bound = nonideal_residual(sp.sigma_max, prof.eta_K, prof.H_bound, prof.M_bound)
        worst = max(worst, gap - bound)
        bad += gap > bound
    assert verdict(6, bad == 0, f"{500 - bad}/500 draws within the residual bound "
                                f"(largest gap minus bound {worst:.3g})")


def test_criterion_7_feasibility():
    if FEASIBILITY["checked"] == 0:
        # run standalone: a small representative sample
        for i in range(10):
            res = run_trial(TrialConfig(graph=ER50, filter=GraphFilter.heat(1.0), M=200, n=N_GRID[i % 9], seed=7),
                            trial=i)
            track_trial(res, f"c7 trial {i}")
    failed = FEASIBILITY["failed"]
    assert verdict(7, not failed, f"{FEASIBILITY['checked'] - len(failed)}/{FEASIBILITY['checked']} "
                                  f"Laplacians and surrogates feasible at 1e-8"), failed[:5]


def test_criterion_8_determinism(tmp_path):
    text = (CONFIGS / "fig1.toml").read_text()
    text = text.replace("trials = 100", "trials = 3").replace('dir = "../out/fig1"', 'dir = "out"')
    cfg = tmp_path / "fig1.toml"
    cfg.write_text(text)
    outputs = []
    for run in ("a", "b"):
        code = cli_main(["--out-dir", str(tmp_path / run), "experiment", str(cfg)])
        assert code == 0
        outputs.append((tmp_path / run / "sweep.csv").read_bytes())
    ok = outputs[0] == outputs[1] and len(outputs[0].splitlines()) == 1 + 9 * 3
    assert verdict(8, ok, f"two runs of the fig1-style config produce byte-identical sweep CSVs "
                          f"({len(outputs[0])} bytes)")

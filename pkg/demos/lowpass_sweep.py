"""How much does hiding nodes hurt, as the signals get smoother?

A small version of the sweep driven by ``configs/fig1.toml``; prints the
median objective ratio for two heat-diffusion times.
"""

from partialgl import GraphFilter, TrialConfig, run_sweep

base = TrialConfig(graph={"model": "er", "nodes": 50, "p": 0.2}, filter=GraphFilter.heat(1.0), M=200, seed=1)
res = run_sweep(base, n_values=[10, 20, 30, 40, 50], param_values=[1.0, 10.0], trials=10)

print(f"{'alpha':>6} {'n':>4} {'median F1':>10} {'median ratio':>13}")
for row in res.rows:
    print(f"{row['param']:>6} {row['n']:>4} {row['median_f1_partial']:>10.3f} {row['median_ratio']:>13.4f}")
if res.violations:
    print(f"{len(res.violations)} trial(s) broke an optimality invariant")

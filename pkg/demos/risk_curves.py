"""Invariant vs standard kernel: test risk of ridgeless KRR on cyclic polynomials.

Runs a reduced version of configs/risk_curves.json (3 repetitions) and prints
the risk table.  The invariant kernel reaches each risk level with roughly
d times fewer samples.

    python3 demos/risk_curves.py
"""
from invkernels import experiments

cfg = experiments.resolve("risk-curve", {"reps": 3, "n_test": 500})
rows = experiments.risk_curve_rows(cfg)
print(f"{'group':8s} {'target':6s} " + " ".join(f"n={n:<5d}" for n in cfg["n_grid"]))
for group in ("trivial", "cyc1d"):
    for target in cfg["targets"]:
        risks = [r["mean_risk"] for r in rows if r["group"] == group and r["target"] == target]
        print(f"{group:8s} {target:6s} " + " ".join(f"{v:7.4f}" for v in risks))

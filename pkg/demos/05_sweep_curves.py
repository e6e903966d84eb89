"""
Curves over lambda
==================

Tabulate the model over a grid of intensities and locate the points where
the integer horizons step.  The CSV is meant for an external plotting tool.
"""
from pathlib import Path

from bpdecomp import estimator

rows = estimator.sweep(2, 12, 0.005)
for column in ("k_max", "k_bar"):
    for before, after, old, new in estimator.transitions(rows, column):
        print(f"{column}: {old} -> {new} between lambda {before} and {after}")

# depth reachable with a budget of 1000 elements
for lam in (2, 7, 10):
    print(f"lambda {lam}: depth {estimator.sweep_point(lam).k_resource} fits in 1000 elements")

out = Path("sweep.csv")
out.write_text(estimator.sweep_csv(rows), encoding="utf-8")
print(f"wrote {len(rows)} rows to {out}")

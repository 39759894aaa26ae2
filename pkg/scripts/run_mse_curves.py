#!/usr/bin/env python3
"""Consistency curves: bias^2 / variance / MSE of the spatial estimates
along T (S=20 fixed) and S (T=100 fixed), 30 stepwise replicates per point."""
import argparse
from pathlib import Path

from stepvarma.bench import ExperimentConfig, run_mse_curves

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", type=Path, default=Path("out/mse"))
parser.add_argument("--seed", type=int, default=20260810)
parser.add_argument("--replicates", type=int, default=30)
args = parser.parse_args()

cfg = ExperimentConfig(out_dir=str(args.out), seed=args.seed, replicates=args.replicates)
rows = run_mse_curves(cfg, args.out)
for r in rows:
    print(
        f"{r['axis']}={r['value']:>3}  alpha mse={r['alpha_mse']:.5f}  "
        f"kappa mse={r['kappa_mse']:.5f}"
    )
print(f"wrote {args.out}/mse_curves.csv and plots")

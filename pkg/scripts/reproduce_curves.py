"""Coverage/delay vs rho curves for the three comparison sets.

    python3 scripts/reproduce_curves.py --set baselines --out runs/baselines
    python3 scripts/reproduce_curves.py --set setups --count 100 --sweep 100   # full scale

Each (policy, preset) pair is its own experiment directory under --out;
the merged curve tables land in --out/curves.
"""

import argparse
import os
from pathlib import Path

from gossipsim.experiment import ExperimentPlan, emit_curves, run_experiment, sweep_v0
from gossipsim.metrics import aggregate

SETS = {
    "baselines": [("fixed-prob", None), ("prob-bcast", None), ("adaptive1", "alg1-paper")],
    "adaptive": [("adaptive1", "alg1-paper"), ("adaptive2", "alg2-paper"), ("adaptive3", "alg3-paper")],
    "setups": [("adaptive3", f"alg3-setup{i}") for i in range(1, 7)],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--set", choices=sorted(SETS), required=True)
    ap.add_argument("--count", type=int, default=20, help="graphs")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--sweep", type=int, default=25, help="number of v0 values")
    ap.add_argument("--mean-intergen", type=float, default=200.0)
    ap.add_argument("--master-seed", type=int, default=2024)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--rho-min", type=float, default=1.0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    out = Path(args.out)
    reports = []
    for policy, preset in SETS[args.set]:
        plan = ExperimentPlan(graphs=f"gen:count={args.count}", policies=[policy], v0_values=sweep_v0(args.sweep),
                              preset=preset, seeds=args.seeds, master_seed=args.master_seed,
                              mean_intergen=args.mean_intergen)
        name = policy if preset is None else f"{policy}-{preset}"
        reports += run_experiment(plan, out / name, jobs=args.jobs)
        print(f"done {name}")
    cov, dl = emit_curves(aggregate(reports), args.rho_min)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    (out / "curves" / "coverage_curves.csv").write_text(cov)
    (out / "curves" / "delay_curves.csv").write_text(dl)
    print(cov)


if __name__ == "__main__":
    main()

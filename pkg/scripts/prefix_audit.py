#!/usr/bin/env python3
"""Audit the reduced-cost pre-fixing rule.

Compares relaxed-subproblem values with pre-fixing on and off across seeded
random (instance, gamma) pairs and writes a CSV report. The rule is a search
heuristic whose safety is under test here, so disagreements are recorded
rather than treated as failures; the exit code is 0 either way.

    python scripts/prefix_audit.py --pairs 100 --out prefix_audit.csv
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from splpo import cost_ladder, generate_instance
from splpo.semilagrange import prefix_audit_rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--seed0", type=int, default=900)
    parser.add_argument("--m-max", type=int, default=7)
    parser.add_argument("--n-max", type=int, default=7)
    parser.add_argument("--out", type=Path, default=Path("prefix_audit.csv"))
    args = parser.parse_args(argv)

    rows = []
    seed = args.seed0
    while len(rows) < args.pairs:
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, args.m_max + 1))
        n = int(rng.integers(2, args.n_max + 1))
        inst = generate_instance(m, n, seed, name=f"audit{seed}")
        lad = cost_ladder(inst)
        low = lad.sorted_costs[:, 0]
        gamma = low + rng.random(m) * (lad.cp - low)
        for rec in prefix_audit_rows(inst, [gamma]):
            rec["instance"] = inst.name
            rows.append(rec)
        seed += 1

    rows = rows[: args.pairs]
    with args.out.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["instance", "gamma_index", "value_off", "value_on",
                        "difference", "agree"],
        )
        writer.writeheader()
        writer.writerows(rows)

    disagreements = [r for r in rows if not r["agree"]]
    print(f"{len(rows)} pairs audited, {len(disagreements)} discrepancies "
          f"-> {args.out}")
    for rec in disagreements:
        print(f"  {rec['instance']}: off={rec['value_off']} on={rec['value_on']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

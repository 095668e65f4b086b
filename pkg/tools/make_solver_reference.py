#!/usr/bin/env python3
"""Freeze the slow-oracle objectives for the 200 acceptance solver instances.

Runs the fixed-step ISTA reference (tests/reference_solver.py) for 10^6
iterations on every instance of the acceptance family and stores the
instances plus their oracle objective values in tests/data/solver_reference.npz.
The acceptance suite re-solves the same instances with the production solver
and compares objectives at 1e-4 relative. Rerun this script to regenerate the
fixture from scratch (takes on the order of tens of minutes).
"""

import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from reference_solver import ORACLE_ITERATIONS, random_instance, reference_solve

NUM_INSTANCES = 200


def main() -> int:
    payload = {}
    objectives = np.empty(NUM_INSTANCES)
    start = time.time()
    for i in range(NUM_INSTANCES):
        design, observation, lam1, lam2, labels, weights = random_instance(i)
        _, obj = reference_solve(
            design, observation, lam1, lam2, labels, weights,
            iterations=ORACLE_ITERATIONS,
        )
        objectives[i] = obj
        payload[f"design_{i}"] = design
        payload[f"observation_{i}"] = observation
        payload[f"labels_{i}"] = labels
        payload[f"weights_{i}"] = weights
        payload[f"lambdas_{i}"] = np.array([lam1, lam2])
        if (i + 1) % 10 == 0:
            rate = (time.time() - start) / (i + 1)
            print(f"{i + 1}/{NUM_INSTANCES} oracle objectives "
                  f"({rate:.1f} s/instance)", flush=True)
    payload["objectives"] = objectives
    payload["iterations"] = np.array([ORACLE_ITERATIONS])
    out = ROOT / "tests" / "data" / "solver_reference.npz"
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(out, **payload)
    print(f"wrote {out} ({out.stat().st_size / 1e6:.2f} MB, "
          f"{time.time() - start:.0f} s total)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

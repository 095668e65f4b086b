#!/usr/bin/env python3
"""Outlier-robust localization with joint position/outlier estimation.

Corrupts a growing fraction of AP readings with +30 dB outliers and compares
the robust mode (explicit sparse outlier vector) against the plain group
solve and the l1 baseline, reporting detection quality along the way.
"""

import numpy as np

from gsloc import LocalizerConfig, OutlierSpec, desk_scene, evaluate_localization

scene = desk_scene(seed=0)
points = 25

clean_gs, _ = evaluate_localization(scene, LocalizerConfig(mode="gs", num_aps=21, k=5),
                                    points, seed=2)
print(f"clean GS reference: MAE {clean_gs.mae:.2f} ft over {points} points\n")

print(f"{'fraction':>9} {'corrupted':>10} {'MGS MAE':>8} {'GS MAE':>8} {'CS MAE':>8} "
      f"{'recall':>7} {'false+':>7}")
for fraction in (0.0, 0.1, 0.2, 0.3, 0.4):
    spec = OutlierSpec(fraction_of_aps=fraction, magnitude_db=30.0)
    mgs, recs = evaluate_localization(
        scene, LocalizerConfig(mode="mgs", num_aps=21, k=5), points, seed=2,
        outliers=spec if fraction else None,
    )
    gs, _ = evaluate_localization(
        scene, LocalizerConfig(mode="gs", num_aps=21, k=5), points, seed=2,
        outliers=spec if fraction else None,
    )
    cs, _ = evaluate_localization(
        scene, LocalizerConfig(mode="cs", num_aps=21, k=5), points, seed=2,
        outliers=spec if fraction else None,
    )
    recalls = [r["recall"] for r in recs if "recall" in r]
    false_pos = [len(set(r.get("detected_aps", [])) - set(r.get("corrupted_aps", [])))
                 for r in recs if "corrupted_aps" in r]
    n_bad = spec.num_corrupted(scene.num_aps)
    print(f"{fraction:>9.1f} {n_bad:>10d} {mgs.mae:>8.2f} {gs.mae:>8.2f} {cs.mae:>8.2f} "
          f"{np.mean(recalls) if recalls else float('nan'):>7.2f} "
          f"{np.mean(false_pos) if false_pos else 0.0:>7.1f}")

print("\nThe robust mode holds its accuracy while the unguarded solves degrade;")
print("detected outliers are the kappa entries beyond the adaptive threshold.")

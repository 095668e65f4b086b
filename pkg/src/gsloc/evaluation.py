"""Metrics and desk-scale experiment drivers.

MAE is the mean Euclidean positioning error over test points (feet);
percentiles use the nearest-rank convention. RE is the mean absolute
entrywise difference between two radio maps (dBm). ``run_experiment`` turns a
JSON config into per-axis sweep CSVs, all deterministic under the seeds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .interpolation import interpolate_map, make_sampling
from .localization import LocalizerConfig, localize
from .radio_map import RadioMap, build_radio_map, _fmt
from .simulator import OutlierSpec, SyntheticScene, generate_online, generate_tensor

PERCENTILES = (25, 50, 75, 100)

_AP_LAYOUT_STREAM = 505
_TEST_POINT_STREAM = 606

# Desk-scale defaults: 12x16 grid at 3 ft (192 RPs), 21 APs, 100 test points.
DESK_GRID_ROWS = 12
DESK_GRID_COLS = 16
DESK_SPACING_FT = 3.0
DESK_NUM_APS = 21
DESK_TX_POWER_DBM = -40.0
DESK_TEST_POINTS = 100
DESK_SAMPLES_PER_RP = 10


def percentile_nearest_rank(values, p: float) -> float:
    """Smallest value with at least p percent of the data at or below it."""
    data = np.sort(np.asarray(values, dtype=np.float64))
    if data.size == 0:
        raise DataError("percentile of empty data")
    if not 0 < p <= 100:
        raise DataError("percentile must be in (0, 100]")
    rank = int(np.ceil(p / 100.0 * data.size))
    return float(data[rank - 1])


@dataclass(eq=False)
class ErrorReport:
    errors: tuple[float, ...]
    mae: float
    percentiles: dict[int, float]
    cdf: tuple[float, ...]

    @classmethod
    def from_errors(cls, errors) -> "ErrorReport":
        errs = tuple(float(e) for e in errors)
        if not errs:
            raise DataError("need at least one error value")
        return cls(
            errors=errs,
            mae=float(np.mean(errs)),
            percentiles={p: percentile_nearest_rank(errs, p) for p in PERCENTILES},
            cdf=tuple(sorted(errs)),
        )

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "percentiles": {str(p): v for p, v in self.percentiles.items()},
            "num_points": len(self.errors),
        }

    def write_cdf_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "error_ft", "cdf"])
            n = len(self.cdf)
            for i, e in enumerate(self.cdf, start=1):
                w.writerow([i, _fmt(e), _fmt(i / n)])


def mae(estimates, truths) -> ErrorReport:
    """Per-point Euclidean errors between estimated and true positions."""
    est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    tru = np.atleast_2d(np.asarray(truths, dtype=np.float64))
    if est.shape != tru.shape or est.shape[1] != 2:
        raise DataError(f"estimate/truth shape mismatch: {est.shape} vs {tru.shape}")
    errors = np.linalg.norm(est - tru, axis=1)
    return ErrorReport.from_errors(errors)


def reconstruction_error(truth: RadioMap, estimate: RadioMap) -> float:
    """Mean absolute entrywise difference between two radio maps, in dBm."""
    if truth.psi.shape != estimate.psi.shape:
        raise DataError("radio maps differ in shape")
    if truth.ap_ids != estimate.ap_ids:
        raise DataError("radio maps differ in AP order")
    return float(np.abs(truth.psi - estimate.psi).mean())


def desk_scene(
    seed: int = 0,
    num_aps: int = DESK_NUM_APS,
    grid_rows: int = DESK_GRID_ROWS,
    grid_cols: int = DESK_GRID_COLS,
    spacing_ft: float = DESK_SPACING_FT,
    tx_power_dbm: float = DESK_TX_POWER_DBM,
    path_loss_exponent: float = 3.0,
    shadowing_sigma_db: float = 4.0,
) -> SyntheticScene:
    """Desk-scale synthetic scene with seeded uniform AP placement."""
    rng = np.random.default_rng([int(seed), _AP_LAYOUT_STREAM])
    width = (grid_cols - 1) * spacing_ft
    height = (grid_rows - 1) * spacing_ft
    aps = tuple(
        (float(rng.uniform(0.0, width)), float(rng.uniform(0.0, height)))
        for _ in range(num_aps)
    )
    return SyntheticScene(
        ap_positions=aps,
        tx_power_dbm=tx_power_dbm,
        path_loss_exponent=path_loss_exponent,
        shadowing_sigma_db=shadowing_sigma_db,
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        spacing_ft=spacing_ft,
        rng_seed=int(seed),
    )


def draw_test_points(scene: SyntheticScene, count: int, seed: int) -> np.ndarray:
    """(count, 2) uniform positions inside the RP bounding box."""
    rng = np.random.default_rng([int(seed), _TEST_POINT_STREAM])
    x0, y0, x1, y1 = scene.bounding_box()
    return np.column_stack(
        [rng.uniform(x0, x1, size=count), rng.uniform(y0, y1, size=count)]
    )


def evaluate_localization(
    scene: SyntheticScene,
    config: LocalizerConfig,
    num_test_points: int = DESK_TEST_POINTS,
    seed: int = 0,
    samples_per_rp: int = DESK_SAMPLES_PER_RP,
    outliers: OutlierSpec | None = None,
    radio_map: RadioMap | None = None,
    tensor=None,
):
    """Run the pipeline over seeded test points; returns (ErrorReport, records).

    ``radio_map``/``tensor`` may be passed to reuse a prebuilt campaign (e.g.
    an interpolated map with the original tensor). Each record carries the
    truth, estimate, error, and when outliers were injected, the corrupted
    and detected AP index sets.
    """
    if tensor is None:
        tensor, rps = generate_tensor(scene, samples_per_rp)
        built = build_radio_map(tensor, rps)
        radio_map = built if radio_map is None else radio_map
    elif radio_map is None:
        raise DataError("radio_map is required when passing a prebuilt tensor")
    points = draw_test_points(scene, num_test_points, seed)
    records = []
    errors = []
    for t, (x, y) in enumerate(points):
        point_seed = int(seed) * 1_000_003 + t
        spec = None
        if outliers is not None and outliers.fraction_of_aps > 0:
            spec = replace(outliers, rng_seed=point_seed)
        measurement = generate_online(scene, (x, y), outliers=spec, rng_seed=point_seed)
        result = localize(radio_map, tensor, measurement, config)
        err = float(np.hypot(result.position[0] - x, result.position[1] - y))
        errors.append(err)
        record = {
            "index": t,
            "truth": (float(x), float(y)),
            "estimate": result.position,
            "error_ft": err,
            "converged": result.diagnostics["solver_converged"],
        }
        if spec is not None:
            corrupted = set(measurement.corrupted_aps)
            detected = set(result.detected_outlier_aps)
            record["corrupted_aps"] = sorted(corrupted)
            record["detected_aps"] = sorted(detected)
            record["recall"] = (
                len(corrupted & detected) / len(corrupted) if corrupted else 1.0
            )
        records.append(record)
    return ErrorReport.from_errors(errors), records


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def run_experiment(config: dict, out_dir) -> dict:
    """Run the sweeps described by ``config`` and write one CSV per axis.

    Recognized sweep axes: num_aps, outlier_fraction, groups, lambda_ratio,
    sampling_fraction. Returns {axis: csv path} plus the base-run CDF file.
    """
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    unknown = set(config) - {
        "seed", "samples_per_rp", "test_points", "scene", "localizer", "sweeps",
    }
    if unknown:
        raise DataError(f"unknown experiment config keys: {', '.join(sorted(unknown))}")

    seed = int(config.get("seed", 0))
    samples = int(config.get("samples_per_rp", DESK_SAMPLES_PER_RP))
    num_points = int(config.get("test_points", DESK_TEST_POINTS))
    scene = (
        SyntheticScene.from_config(config["scene"])
        if "scene" in config
        else desk_scene(seed)
    )
    base = LocalizerConfig(**config.get("localizer", {}))
    sweeps = config.get("sweeps", {})
    known_axes = {"num_aps", "outlier_fraction", "groups", "lambda_ratio", "sampling_fraction"}
    unknown_axes = set(sweeps) - known_axes
    if unknown_axes:
        raise DataError(f"unknown sweep axes: {', '.join(sorted(unknown_axes))}")

    written: dict[str, str] = {}

    report, _ = evaluate_localization(scene, base, num_points, seed, samples)
    cdf_path = out / "cdf_base.csv"
    report.write_cdf_csv(cdf_path)
    written["cdf_base"] = str(cdf_path)

    if "num_aps" in sweeps:
        rows = []
        for s in sweeps["num_aps"]:
            gs, _ = evaluate_localization(
                scene, replace(base, mode="gs", num_aps=int(s)), num_points, seed, samples
            )
            cs, _ = evaluate_localization(
                scene, replace(base, mode="cs", num_aps=int(s)), num_points, seed, samples
            )
            rows.append([int(s), gs.mae, cs.mae])
        path = out / "sweep_num_aps.csv"
        _write_csv(path, ["num_aps", "mae_gs_ft", "mae_cs_ft"], rows)
        written["num_aps"] = str(path)

    if "outlier_fraction" in sweeps:
        rows = []
        for fraction in sweeps["outlier_fraction"]:
            spec = OutlierSpec(fraction_of_aps=float(fraction))
            mgs, recs = evaluate_localization(
                scene, replace(base, mode="mgs"), num_points, seed, samples, outliers=spec
            )
            cs, _ = evaluate_localization(
                scene, replace(base, mode="cs"), num_points, seed, samples, outliers=spec
            )
            recalls = [r["recall"] for r in recs if "recall" in r]
            rows.append(
                [float(fraction), mgs.mae, cs.mae,
                 float(np.mean(recalls)) if recalls else 1.0]
            )
        path = out / "sweep_outlier_fraction.csv"
        _write_csv(path, ["outlier_fraction", "mae_mgs_ft", "mae_cs_ft", "recall_mgs"], rows)
        written["outlier_fraction"] = str(path)

    if "groups" in sweeps:
        rows = []
        for k in sweeps["groups"]:
            rep, _ = evaluate_localization(
                scene, replace(base, k=int(k)), num_points, seed, samples
            )
            rows.append([int(k), rep.mae])
        path = out / "sweep_groups.csv"
        _write_csv(path, ["num_groups", "mae_ft"], rows)
        written["groups"] = str(path)

    if "lambda_ratio" in sweeps:
        _, lam2, _ = base.resolved_lambdas()
        rows = []
        for ratio in sweeps["lambda_ratio"]:
            rep, _ = evaluate_localization(
                scene,
                replace(base, lambda1=float(ratio) * lam2, lambda2=lam2),
                num_points, seed, samples,
            )
            rows.append([float(ratio), rep.mae])
        path = out / "sweep_lambda_ratio.csv"
        _write_csv(path, ["lambda1_over_lambda2", "mae_ft"], rows)
        written["lambda_ratio"] = str(path)

    if "sampling_fraction" in sweeps:
        tensor, rps = generate_tensor(scene, samples)
        full_map = build_radio_map(tensor, rps)
        rows = []
        for fraction in sweeps["sampling_fraction"]:
            v = max(1, int(np.floor(float(fraction) * full_map.num_rps)))
            plan = make_sampling("random", full_map.num_rps, num_selected=v, seed=seed)
            rebuilt = interpolate_map(full_map, plan)
            rows.append([float(fraction), v, reconstruction_error(full_map, rebuilt)])
        path = out / "sweep_sampling_fraction.csv"
        _write_csv(path, ["sampling_fraction", "num_sampled_rps", "re_dbm"], rows)
        written["sampling_fraction"] = str(path)

    return written

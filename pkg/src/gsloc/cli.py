"""Command-line front end.

Subcommands: simulate, localize, interpolate, evaluate, sweep. All outputs
are CSV/JSON; reruns with the same argv (and --threads 1) are byte-identical.
Exit codes: 0 success, 1 usage error, 2 data error, 3 solver non-convergence
in --strict mode. Errors print as one line: ``ERROR <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import DataError, GslocError
from .evaluation import (
    DESK_SAMPLES_PER_RP,
    DESK_TEST_POINTS,
    desk_scene,
    draw_test_points,
    evaluate_localization,
    reconstruction_error,
    run_experiment,
)
from .interpolation import DEFAULT_LAMBDA1, interpolate_map, make_sampling
from .localization import LocalizerConfig, localize
from .radio_map import (
    build_radio_map,
    load_online,
    load_radio_map,
    load_tensor,
    save_online,
    save_radio_map,
    save_tensor,
)
from .simulator import OutlierSpec, SyntheticScene, generate_online, generate_tensor


class UsageError(GslocError):
    pass


class SolverNotConverged(GslocError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gsloc", description=__doc__)
    parser.add_argument("--seed", type=int, default=None,
                        help="override every stochastic seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap internal (BLAS) parallelism; 1 for bit-reproducibility")
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic campaign")
    sim.add_argument("--scene", help="scene config JSON (default: desk-scale scene)")
    sim.add_argument("--samples", type=int, default=DESK_SAMPLES_PER_RP,
                     help="time samples per RP")
    sim.add_argument("--test-points", type=int, default=0,
                     help="also write this many online measurement CSVs")
    sim.add_argument("--outlier-fraction", type=float, default=0.0)
    sim.add_argument("--outlier-db", type=float, default=30.0)
    sim.add_argument("--outlier-mode", choices=["additive", "dropout"], default="additive")

    loc = sub.add_parser("localize", help="locate one online measurement")
    loc.add_argument("--map", required=True,
                     help="radio-map CSV, or fingerprint-tensor CSV (detected by header)")
    loc.add_argument("--tensor", help="fingerprint-tensor CSV when --map is a plain map")
    loc.add_argument("--online", required=True, help="online measurement CSV")
    loc.add_argument("--mode", choices=["gs", "mgs", "cs"], default="gs")
    loc.add_argument("--k", type=int, default=15, help="number of RP groups")
    loc.add_argument("--num-aps", type=int, default=12)
    loc.add_argument("--ap-select", choices=["fisher", "strongest"], default="fisher")
    loc.add_argument("--gamma", type=float, default=-85.0, help="coverage threshold (dBm)")
    loc.add_argument("--lambda1", type=float, default=None)
    loc.add_argument("--lambda2", type=float, default=None)
    loc.add_argument("--lambda3", type=float, default=None)
    loc.add_argument("--strict", action="store_true",
                     help="exit 3 if the solver did not converge")
    loc.add_argument("--out", help="write the result JSON here instead of stdout")

    itp = sub.add_parser("interpolate", help="densify a radio map from sampled RPs")
    itp.add_argument("--map", required=True, help="radio-map CSV with measured rows")
    itp.add_argument("--plan", required=True,
                     help="random:V:seed or periodic:s")
    itp.add_argument("--lambda1", type=float, default=DEFAULT_LAMBDA1)
    itp.add_argument("--outlier-lambda", type=float, default=None)
    itp.add_argument("--pin-samples", action="store_true",
                     help="copy measured values back over the reconstruction")
    itp.add_argument("--truth", help="dense ground-truth map CSV for an RE report")
    itp.add_argument("--strict", action="store_true")
    itp.add_argument("--out", required=True, help="output dense radio-map CSV")

    ev = sub.add_parser("evaluate", help="MAE evaluation over seeded test points")
    ev.add_argument("--scene", help="scene config JSON (default: desk-scale scene)")
    ev.add_argument("--mode", choices=["gs", "mgs", "cs"], default="gs")
    ev.add_argument("--k", type=int, default=15)
    ev.add_argument("--num-aps", type=int, default=12)
    ev.add_argument("--ap-select", choices=["fisher", "strongest"], default="fisher")
    ev.add_argument("--samples", type=int, default=DESK_SAMPLES_PER_RP)
    ev.add_argument("--test-points", type=int, default=DESK_TEST_POINTS)
    ev.add_argument("--outlier-fraction", type=float, default=0.0)
    ev.add_argument("--outlier-db", type=float, default=30.0)
    ev.add_argument("--strict", action="store_true")

    sw = sub.add_parser("sweep", help="run the sweeps from an experiment config")
    sw.add_argument("--config", required=True, help="experiment config JSON")

    return parser


def _load_scene(path: str | None, seed: int | None) -> SyntheticScene:
    if path is None:
        return desk_scene(seed if seed is not None else 0)
    scene = SyntheticScene.from_json(path)
    if seed is not None:
        scene = replace(scene, rng_seed=seed)
    return scene


def _parse_plan_spec(spec: str, num_rps: int):
    parts = spec.split(":")
    if parts[0] == "random" and len(parts) in (2, 3):
        count = int(parts[1])
        seed = int(parts[2]) if len(parts) == 3 else 0
        return make_sampling("random", num_rps, num_selected=count, seed=seed)
    if parts[0] == "periodic" and len(parts) == 2:
        return make_sampling("periodic", num_rps, stride=int(parts[1]))
    raise UsageError(f"bad --plan {spec!r}, expected random:V[:seed] or periodic:s")


def _dump_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _is_tensor_csv(path: str) -> bool:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                return "t_index" in [c.strip() for c in line.split(",")]
    raise DataError("no header")


def _cmd_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = _load_scene(args.scene, args.seed)
    tensor, rps = generate_tensor(scene, args.samples)
    save_tensor(tensor, rps, out / "tensor.csv")
    save_radio_map(build_radio_map(tensor, rps), out / "map.csv")
    (out / "scene.json").write_text(
        json.dumps(scene.to_config(), sort_keys=True, indent=2) + "\n"
    )
    if args.test_points > 0:
        points = draw_test_points(scene, args.test_points, scene.rng_seed)
        for t, (x, y) in enumerate(points):
            point_seed = scene.rng_seed * 1_000_003 + t
            spec = None
            if args.outlier_fraction > 0:
                spec = OutlierSpec(
                    fraction_of_aps=args.outlier_fraction,
                    magnitude_db=args.outlier_db,
                    mode=args.outlier_mode,
                    rng_seed=point_seed,
                )
            measurement = generate_online(scene, (x, y), outliers=spec, rng_seed=point_seed)
            save_online(measurement, out / f"online_{t:04d}.csv")
    return 0


def _cmd_localize(args) -> int:
    if _is_tensor_csv(args.map):
        tensor, rps = load_tensor(args.map)
        radio_map = build_radio_map(tensor, rps)
    else:
        radio_map = load_radio_map(args.map)
        tensor = None
    if args.tensor:
        tensor, _ = load_tensor(args.tensor)
    if tensor is None and (args.ap_select == "fisher" or args.mode != "cs"):
        raise DataError(
            "coverage and fisher selection need per-sample data: pass a "
            "fingerprint-tensor CSV via --map or --tensor"
        )
    measurement = load_online(args.online, radio_map.ap_ids)
    config = LocalizerConfig(
        mode=args.mode,
        k=args.k,
        gamma_dbm=args.gamma,
        ap_method=args.ap_select,
        num_aps=args.num_aps,
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        lambda3=args.lambda3,
    )
    result = localize(radio_map, tensor, measurement, config)
    if args.strict and not result.diagnostics["solver_converged"]:
        raise SolverNotConverged("solver did not reach the KKT tolerance")
    payload = {
        "position": [result.position[0], result.position[1]],
        "detected_outlier_aps": sorted(result.detected_outlier_aps),
        "diagnostics": result.diagnostics,
    }
    if result.grouping is not None:
        payload["grouping"] = result.grouping.to_dict()
    if measurement.truth is not None:
        dx = result.position[0] - measurement.truth[0]
        dy = result.position[1] - measurement.truth[1]
        payload["truth"] = list(measurement.truth)
        payload["error_ft"] = float(np.hypot(dx, dy))
    _dump_json(payload, args.out)
    return 0


def _cmd_interpolate(args) -> int:
    coarse = load_radio_map(args.map)
    plan = _parse_plan_spec(args.plan, coarse.num_rps)
    dense = interpolate_map(
        coarse,
        plan,
        lambda1=args.lambda1,
        outlier_lambda2=args.outlier_lambda,
        pin_samples=args.pin_samples,
    )
    if args.strict and dense.meta["rows_not_converged"]:
        raise SolverNotConverged(
            f"{dense.meta['rows_not_converged']} row solves did not converge"
        )
    save_radio_map(dense, args.out)
    report = {
        "plan": {"strategy": plan.strategy, "num_selected": plan.num_selected},
        "lambda1": args.lambda1,
        "max_imag_residual": dense.meta["max_imag_residual"],
        "out": str(args.out),
    }
    if args.truth:
        truth = load_radio_map(args.truth)
        report["re_dbm"] = reconstruction_error(truth, dense)
    _dump_json(report, None)
    return 0


def _cmd_evaluate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    scene = _load_scene(args.scene, args.seed)
    config = LocalizerConfig(
        mode=args.mode, k=args.k, ap_method=args.ap_select, num_aps=args.num_aps
    )
    outliers = None
    if args.outlier_fraction > 0:
        outliers = OutlierSpec(
            fraction_of_aps=args.outlier_fraction, magnitude_db=args.outlier_db
        )
    report, records = evaluate_localization(
        scene, config, args.test_points, seed, args.samples, outliers=outliers
    )
    if args.strict and not all(r["converged"] for r in records):
        raise SolverNotConverged("at least one test-point solve did not converge")
    import csv as _csv

    with open(out / f"errors_{args.mode}.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["index", "truth_x_ft", "truth_y_ft", "est_x_ft", "est_y_ft", "error_ft"])
        for r in records:
            w.writerow(
                [r["index"]]
                + [repr(v) for v in (*r["truth"], *r["estimate"], r["error_ft"])]
            )
    payload = report.to_dict()
    if outliers is not None:
        payload["mean_recall"] = float(
            np.mean([r["recall"] for r in records if "recall" in r])
        )
    _dump_json(payload, out / f"report_{args.mode}.json")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"experiment config is not valid JSON: {exc}") from None
    if args.seed is not None:
        config["seed"] = args.seed
    written = run_experiment(config, args.out_dir)
    _dump_json({"written": written}, None)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "localize": _cmd_localize,
    "interpolate": _cmd_interpolate,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ERROR 1: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        import threadpoolctl

        limit = args.threads if args.threads and args.threads > 0 else None
        with threadpoolctl.threadpool_limits(limits=limit):
            return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ERROR 1: {exc}", file=sys.stderr)
        return 1
    except SolverNotConverged as exc:
        print(f"ERROR 3: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"ERROR 2: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

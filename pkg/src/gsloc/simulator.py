"""Synthetic scene generator: log-distance path loss with Gaussian shadowing.

Stands in for a real measurement campaign. RSS follows

    rss = tx_power - 10 * n * log10(max(d, d0)) + N(0, sigma^2)

with d0 = 1 ft, clipped into [-95, min(tx_power, 0)] dBm so the sentinel and
"RSS <= 0" invariants of the radio-map types hold. Everything is deterministic
given the scene seed; online draws and outlier corruption use independent
derived streams.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .radio_map import SENTINEL_DBM, FingerprintTensor, OnlineMeasurement, ReferencePoint

REFERENCE_DISTANCE_FT = 1.0

# Sub-stream tags so tensor, online, and corruption draws never collide.
_TENSOR_STREAM = 101
_ONLINE_STREAM = 202
_OUTLIER_STREAM = 303

_SCENE_KEYS = (
    "aps",
    "tx_power_dbm",
    "path_loss_exponent",
    "shadowing_sigma_db",
    "grid_rows",
    "grid_cols",
    "spacing_ft",
    "seed",
)


@dataclass(frozen=True)
class SyntheticScene:
    """Ground truth for a synthetic campaign: AP layout, propagation, RP grid."""

    ap_positions: tuple[tuple[float, float], ...]
    tx_power_dbm: float
    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 4.0
    grid_rows: int = 12
    grid_cols: int = 16
    spacing_ft: float = 3.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "ap_positions", tuple((float(x), float(y)) for x, y in self.ap_positions)
        )
        if not self.ap_positions:
            raise DataError("scene needs at least one AP")
        if self.spacing_ft <= 0:
            raise DataError("grid spacing must be > 0")
        if self.shadowing_sigma_db < 0:
            raise DataError("shadowing sigma must be >= 0")
        if self.path_loss_exponent <= 0:
            raise DataError("path-loss exponent must be > 0")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise DataError("grid must be at least 1x1")

    @property
    def num_aps(self) -> int:
        return len(self.ap_positions)

    @property
    def num_rps(self) -> int:
        return self.grid_rows * self.grid_cols

    def reference_points(self) -> tuple[ReferencePoint, ...]:
        """Row-major RP lattice: index = row * cols + col, x = col * spacing."""
        rps = []
        for r in range(self.grid_rows):
            for c in range(self.grid_cols):
                rps.append(
                    ReferencePoint(r * self.grid_cols + c, c * self.spacing_ft, r * self.spacing_ft)
                )
        return tuple(rps)

    def ap_ids(self) -> tuple[str, ...]:
        return tuple(f"02:00:00:00:{i >> 8:02x}:{i & 0xFF:02x}" for i in range(self.num_aps))

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the RP lattice."""
        return (
            0.0,
            0.0,
            (self.grid_cols - 1) * self.spacing_ft,
            (self.grid_rows - 1) * self.spacing_ft,
        )

    def mean_rss(self, positions: np.ndarray) -> np.ndarray:
        """Noise-free model RSS, shape (L, len(positions)), before clipping."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        ap_xy = np.asarray(self.ap_positions)
        d = np.hypot(
            ap_xy[:, None, 0] - positions[None, :, 0],
            ap_xy[:, None, 1] - positions[None, :, 1],
        )
        d = np.maximum(d, REFERENCE_DISTANCE_FT)
        return self.tx_power_dbm - 10.0 * self.path_loss_exponent * np.log10(d)

    def to_config(self) -> dict:
        return {
            "aps": [list(p) for p in self.ap_positions],
            "tx_power_dbm": self.tx_power_dbm,
            "path_loss_exponent": self.path_loss_exponent,
            "shadowing_sigma_db": self.shadowing_sigma_db,
            "grid_rows": self.grid_rows,
            "grid_cols": self.grid_cols,
            "spacing_ft": self.spacing_ft,
            "seed": self.rng_seed,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SyntheticScene":
        unknown = set(cfg) - set(_SCENE_KEYS)
        if unknown:
            raise DataError(f"unknown scene config keys: {', '.join(sorted(unknown))}")
        missing = {"aps", "tx_power_dbm"} - set(cfg)
        if missing:
            raise DataError(f"scene config missing keys: {', '.join(sorted(missing))}")
        return cls(
            ap_positions=tuple((float(x), float(y)) for x, y in cfg["aps"]),
            tx_power_dbm=float(cfg["tx_power_dbm"]),
            path_loss_exponent=float(cfg.get("path_loss_exponent", 3.0)),
            shadowing_sigma_db=float(cfg.get("shadowing_sigma_db", 4.0)),
            grid_rows=int(cfg.get("grid_rows", 12)),
            grid_cols=int(cfg.get("grid_cols", 16)),
            spacing_ft=float(cfg.get("spacing_ft", 3.0)),
            rng_seed=int(cfg.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, path) -> "SyntheticScene":
        with open(path) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"scene config is not valid JSON: {exc}") from None
        return cls.from_config(cfg)


@dataclass(frozen=True)
class OutlierSpec:
    """How to corrupt an online vector: which fraction of APs, and how hard."""

    fraction_of_aps: float
    magnitude_db: float = 30.0
    mode: str = "additive"  # or "dropout-to-sentinel"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction_of_aps <= 1.0:
            raise DataError(f"outlier fraction must be in [0, 1], got {self.fraction_of_aps}")
        mode = "dropout-to-sentinel" if self.mode == "dropout" else self.mode
        if mode not in ("additive", "dropout-to-sentinel"):
            raise DataError(f"unknown outlier mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)

    def num_corrupted(self, num_aps: int) -> int:
        # ceil(fraction * L) with a guard against float dust (0.3 * 10 = 3.0000...4).
        return max(0, math.ceil(self.fraction_of_aps * num_aps - 1e-9))


def _clip_rss(values: np.ndarray, tx_power_dbm: float) -> np.ndarray:
    return np.clip(values, SENTINEL_DBM, min(tx_power_dbm, 0.0))


def generate_tensor(
    scene: SyntheticScene, num_samples: int
) -> tuple[FingerprintTensor, tuple[ReferencePoint, ...]]:
    """Draw the offline fingerprint tensor: (L, N, M), deterministic in the seed."""
    if num_samples < 1:
        raise DataError("need at least one time sample")
    rps = scene.reference_points()
    mean = scene.mean_rss(np.array([rp.coords for rp in rps]))
    rng = np.random.default_rng([scene.rng_seed, _TENSOR_STREAM])
    noise = rng.normal(0.0, scene.shadowing_sigma_db, size=mean.shape + (num_samples,))
    rss = _clip_rss(mean[:, :, None] + noise, scene.tx_power_dbm)
    return FingerprintTensor(rss=rss, ap_ids=scene.ap_ids()), rps


def generate_online(
    scene: SyntheticScene,
    position: tuple[float, float],
    outliers: OutlierSpec | None = None,
    rng_seed: int | None = None,
) -> OnlineMeasurement:
    """Draw one online vector at ``position``, optionally corrupted.

    Corruption picks exactly ceil(fraction * L) APs via the outlier spec's own
    seed and records them in ``corrupted_aps`` for ground-truth scoring.
    Additive outliers are applied after clipping and may exceed 0 dBm.
    """
    x, y = float(position[0]), float(position[1])
    x0, y0, x1, y1 = scene.bounding_box()
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        warnings.warn(f"position {(x, y)} outside the RP bounding box", stacklevel=2)
    mean = scene.mean_rss(np.array([[x, y]]))[:, 0]
    if rng_seed is None:
        rng = np.random.default_rng([scene.rng_seed, _ONLINE_STREAM])
    else:
        rng = np.random.default_rng([int(rng_seed), _ONLINE_STREAM])
    values = _clip_rss(mean + rng.normal(0.0, scene.shadowing_sigma_db, size=mean.shape),
                       scene.tx_power_dbm)
    corrupted: tuple[int, ...] = ()
    if outliers is not None:
        n_bad = outliers.num_corrupted(scene.num_aps)
        if n_bad > 0:
            pick = np.random.default_rng([outliers.rng_seed, _OUTLIER_STREAM])
            idx = np.sort(pick.choice(scene.num_aps, size=n_bad, replace=False))
            if outliers.mode == "additive":
                values = values.copy()
                values[idx] += outliers.magnitude_db
            else:
                values = values.copy()
                values[idx] = SENTINEL_DBM
            corrupted = tuple(int(i) for i in idx)
    return OnlineMeasurement(
        y=values, ap_ids=scene.ap_ids(), truth=(x, y), corrupted_aps=corrupted
    )

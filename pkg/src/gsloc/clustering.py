"""Online layered clustering of RPs by AP-coverage Hamming distance.

An AP covers an RP when its readings exceed the threshold gamma for at least
90% of the time samples (strictly greater, both offline and online). RPs are
then binned into K layers by the Hamming distance between their coverage
vector and the online one; each layer gets weight 2 / (d_{k-1} + d_k).

Layer boundaries are d_k = d_min + k * (d_max - d_min) / K, computed as exact
rationals over the integer distances so boundary readings are never
misassigned by float rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DataError
from .radio_map import FingerprintTensor, OnlineMeasurement

DEFAULT_GAMMA_DBM = -85.0
DEFAULT_AVAILABILITY = 0.90

# Weight when a boundary sum degenerates to zero (d_min = d_max = 0).
_DEGENERATE_WEIGHT = 2.0


@dataclass(frozen=True, eq=False)
class CoverageProfile:
    """Per-RP binary AP availability: rp_coverage[j, i] is AP i at RP j."""

    rp_coverage: np.ndarray
    threshold_gamma_dbm: float
    availability_fraction: float = DEFAULT_AVAILABILITY

    def __post_init__(self):
        cov = np.asarray(self.rp_coverage)
        if cov.ndim != 2:
            raise DataError("coverage must be 2-d (rps, aps)")
        if not np.isin(cov, (0, 1)).all():
            raise DataError("coverage entries must be 0 or 1")
        cov = np.ascontiguousarray(cov, dtype=np.uint8)
        cov.flags.writeable = False
        object.__setattr__(self, "rp_coverage", cov)

    @property
    def num_rps(self) -> int:
        return self.rp_coverage.shape[0]

    @property
    def num_aps(self) -> int:
        return self.rp_coverage.shape[1]


@dataclass(frozen=True)
class Grouping:
    """A partition of RP indices into K layers with their weights.

    boundaries has K+1 entries; groups[k] collects the RPs whose distance
    falls in [boundaries[k], boundaries[k+1]] (ties go to the lower layer
    unless the seeded-random tie mode was used).
    """

    groups: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    boundaries: tuple[float, ...]
    d_min: int
    d_max: int

    def __post_init__(self):
        if len(self.groups) != len(self.weights):
            raise DataError("one weight per group required")
        if len(self.boundaries) != len(self.groups) + 1:
            raise DataError("need K+1 boundaries for K groups")
        if any(w <= 0 for w in self.weights):
            raise DataError("group weights must be strictly positive")

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    def to_dict(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "weights": list(self.weights),
            "boundaries": list(self.boundaries),
            "d_min": self.d_min,
            "d_max": self.d_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_coverage(
    tensor: FingerprintTensor,
    gamma_dbm: float = DEFAULT_GAMMA_DBM,
    availability_fraction: float = DEFAULT_AVAILABILITY,
) -> CoverageProfile:
    """Binary availability per (RP, AP) from the offline tensor."""
    if gamma_dbm <= -95.0:
        raise DataError("gamma must be above the -95 dBm sentinel")
    if not 0.0 < availability_fraction <= 1.0:
        raise DataError("availability fraction must be in (0, 1]")
    above = (tensor.rss > gamma_dbm).sum(axis=2)  # (L, N) counts
    # Small slack so e.g. 9 of 10 samples passes a 0.90 requirement exactly.
    needed = availability_fraction * tensor.num_samples - 1e-9
    coverage = (above >= needed).T.astype(np.uint8)
    return CoverageProfile(
        rp_coverage=coverage,
        threshold_gamma_dbm=gamma_dbm,
        availability_fraction=availability_fraction,
    )


def online_coverage(measurement, gamma_dbm: float = DEFAULT_GAMMA_DBM) -> np.ndarray:
    """Binary availability of each AP in the online vector (strictly above gamma)."""
    y = measurement.y if isinstance(measurement, OnlineMeasurement) else np.asarray(measurement)
    return (y > gamma_dbm).astype(np.uint8)


def hamming(a, b) -> int:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())


def layered_cluster(
    profile: CoverageProfile,
    online_vector,
    num_groups: int,
    tie_break: str = "lower",
    tie_seed: int | None = None,
) -> Grouping:
    """Partition RPs into ``num_groups`` layers around the online coverage vector.

    ``tie_break`` is "lower" (deterministic: a distance landing exactly on a
    boundary goes to the lower-index layer) or "random" (seeded choice among
    the adjoining layers). Empty layers are kept; their weights are still
    defined so downstream penalties see a full partition.
    """
    if num_groups < 1:
        raise DataError("need at least one group")
    if tie_break not in ("lower", "random"):
        raise DataError(f"unknown tie_break {tie_break!r}")
    i_y = np.asarray(online_vector).astype(np.uint8)
    if i_y.shape != (profile.num_aps,):
        raise DataError(
            f"online coverage length {i_y.shape} does not match {profile.num_aps} APs"
        )
    dists = np.abs(profile.rp_coverage.astype(np.int64) - i_y.astype(np.int64)).sum(axis=1)
    d_min = int(dists.min())
    d_max = int(dists.max())

    k = num_groups
    step = Fraction(d_max - d_min, k)
    bounds = [Fraction(d_min) + i * step for i in range(k + 1)]

    rng = np.random.default_rng(tie_seed) if tie_break == "random" else None
    members: list[list[int]] = [[] for _ in range(k)]
    for j, dist in enumerate(dists):
        d = Fraction(int(dist))
        candidates = [g for g in range(k) if bounds[g] <= d <= bounds[g + 1]]
        if rng is not None and len(candidates) > 1:
            choice = candidates[int(rng.integers(len(candidates)))]
        else:
            choice = candidates[0]
        members[choice].append(j)

    weights = []
    for g in range(k):
        s = bounds[g] + bounds[g + 1]
        weights.append(_DEGENERATE_WEIGHT if s == 0 else float(Fraction(2) / s))

    return Grouping(
        groups=tuple(tuple(m) for m in members),
        weights=tuple(weights),
        boundaries=tuple(float(b) for b in bounds),
        d_min=d_min,
        d_max=d_max,
    )

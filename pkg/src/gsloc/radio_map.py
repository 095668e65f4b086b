"""Fingerprint tensors, the time-averaged radio map, and their CSV formats.

RSS values are dBm throughout (never linearized to milliwatts). An AP that
was not heard is stored as the sentinel -95.0 dBm. All container types are
immutable after construction; the wrapped numpy arrays are marked read-only
so instances can be shared across threads freely.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SENTINEL_DBM = -95.0

# 17 significant digits round-trips any finite double exactly.
_FLOAT_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _FLOAT_FMT)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ReferencePoint:
    """A surveyed grid location. Coordinates are in feet."""

    index: int
    x: float
    y: float

    def __post_init__(self):
        if self.index < 0:
            raise DataError(f"RP index must be >= 0, got {self.index}")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise DataError(f"RP {self.index} has non-finite coordinates")

    @property
    def coords(self) -> tuple[float, float]:
        return (self.x, self.y)


def _check_rps(rps) -> tuple[ReferencePoint, ...]:
    rps = tuple(rps)
    if not rps:
        raise DataError("need at least one reference point")
    indices = sorted(rp.index for rp in rps)
    if indices != list(range(len(rps))):
        raise DataError("RP indices must be unique and contiguous from 0")
    return tuple(sorted(rps, key=lambda rp: rp.index))


@dataclass(frozen=True, eq=False)
class FingerprintTensor:
    """Raw offline readings: rss[i, j, m] is AP i at RP j, time sample m (dBm)."""

    rss: np.ndarray
    ap_ids: tuple[str, ...]

    def __post_init__(self):
        rss = np.asarray(self.rss, dtype=np.float64)
        if rss.ndim != 3:
            raise DataError(f"rss must be 3-d (aps, rps, samples), got ndim={rss.ndim}")
        if any(n < 1 for n in rss.shape):
            axis = ("ap", "rp", "time")[[n < 1 for n in rss.shape].index(True)]
            raise DataError(f"empty {axis} axis in fingerprint tensor")
        if not np.all(np.isfinite(rss)):
            raise DataError("fingerprint tensor contains non-finite RSS")
        if np.any(rss > 0.0):
            raise DataError("RSS must be <= 0 dBm")
        ap_ids = tuple(self.ap_ids)
        if len(ap_ids) != rss.shape[0]:
            raise DataError(
                f"ap axis mismatch: {rss.shape[0]} tensor rows, {len(ap_ids)} ap ids"
            )
        object.__setattr__(self, "rss", _readonly(rss))
        object.__setattr__(self, "ap_ids", ap_ids)

    @property
    def num_aps(self) -> int:
        return self.rss.shape[0]

    @property
    def num_rps(self) -> int:
        return self.rss.shape[1]

    @property
    def num_samples(self) -> int:
        return self.rss.shape[2]


@dataclass(frozen=True, eq=False)
class RadioMap:
    """Time-averaged radio map: psi[i, j] is the mean RSS of AP i at RP j."""

    psi: np.ndarray
    rps: tuple[ReferencePoint, ...]
    ap_ids: tuple[str, ...]
    meta: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.float64)
        if psi.ndim != 2:
            raise DataError(f"psi must be 2-d (aps, rps), got ndim={psi.ndim}")
        if not np.all(np.isfinite(psi)):
            raise DataError("radio map contains non-finite RSS")
        rps = _check_rps(self.rps)
        if psi.shape[1] != len(rps):
            raise DataError(
                f"rp axis mismatch: {psi.shape[1]} columns, {len(rps)} reference points"
            )
        ap_ids = tuple(self.ap_ids)
        if psi.shape[0] != len(ap_ids):
            raise DataError(
                f"ap axis mismatch: {psi.shape[0]} rows, {len(ap_ids)} ap ids"
            )
        object.__setattr__(self, "psi", _readonly(psi))
        object.__setattr__(self, "rps", rps)
        object.__setattr__(self, "ap_ids", ap_ids)

    @property
    def num_aps(self) -> int:
        return self.psi.shape[0]

    @property
    def num_rps(self) -> int:
        return self.psi.shape[1]

    @property
    def rp_xy(self) -> np.ndarray:
        """(N, 2) array of RP coordinates in feet, ordered by RP index."""
        return np.array([[rp.x, rp.y] for rp in self.rps])


@dataclass(frozen=True, eq=False)
class OnlineMeasurement:
    """One online RSS vector, aligned with a radio map's AP order."""

    y: np.ndarray
    ap_ids: tuple[str, ...]
    truth: tuple[float, float] | None = None
    corrupted_aps: tuple[int, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise DataError("online measurement must be a vector")
        if not np.all(np.isfinite(y)):
            raise DataError("online measurement contains non-finite RSS")
        ap_ids = tuple(self.ap_ids)
        if len(ap_ids) != y.shape[0]:
            raise DataError(
                f"ap axis mismatch: {y.shape[0]} readings, {len(ap_ids)} ap ids"
            )
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "ap_ids", ap_ids)
        object.__setattr__(self, "corrupted_aps", tuple(self.corrupted_aps))

    @property
    def num_aps(self) -> int:
        return self.y.shape[0]


def build_radio_map(tensor: FingerprintTensor, rps) -> RadioMap:
    """Average the tensor over its time axis (the radio map definition).

    psi[i, j] = mean over m of rss[i, j, m]. AP and RP order are preserved.
    An AP never heard at an RP (all samples at the sentinel) stays at -95.0.
    """
    rps = _check_rps(rps)
    if tensor.num_rps != len(rps):
        raise DataError(
            f"rp axis mismatch: tensor has {tensor.num_rps} rps, got {len(rps)}"
        )
    psi = tensor.rss.mean(axis=2)
    return RadioMap(psi=psi, rps=rps, ap_ids=tensor.ap_ids)


# ---------------------------------------------------------------------------
# CSV I/O
#
# Radio map:         ap_id,rp_index,x_ft,y_ft,rss_dbm          (one row per AP,RP)
# Fingerprint tensor: ap_id,rp_index,x_ft,y_ft,t_index,rss_dbm (one row per AP,RP,t)
# Online:            ap_id,rss_dbm  with optional '# truth_x_ft=..' comment lines
#
# Absent (ap, rp) rows read back as the sentinel -95.0.
# ---------------------------------------------------------------------------

_MAP_HEADER = ["ap_id", "rp_index", "x_ft", "y_ft", "rss_dbm"]
_TENSOR_HEADER = ["ap_id", "rp_index", "x_ft", "y_ft", "t_index", "rss_dbm"]
_ONLINE_HEADER = ["ap_id", "rss_dbm"]


def save_radio_map(radio_map: RadioMap, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_MAP_HEADER)
        for i, ap in enumerate(radio_map.ap_ids):
            for rp in radio_map.rps:
                w.writerow(
                    [ap, rp.index, _fmt(rp.x), _fmt(rp.y), _fmt(radio_map.psi[i, rp.index])]
                )


def save_tensor(tensor: FingerprintTensor, rps, path) -> None:
    rps = _check_rps(rps)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_TENSOR_HEADER)
        for i, ap in enumerate(tensor.ap_ids):
            for rp in rps:
                for m in range(tensor.num_samples):
                    w.writerow(
                        [ap, rp.index, _fmt(rp.x), _fmt(rp.y), m,
                         _fmt(tensor.rss[i, rp.index, m])]
                    )


def save_online(measurement: OnlineMeasurement, path) -> None:
    with open(path, "w", newline="") as fh:
        if measurement.truth is not None:
            fh.write(f"# truth_x_ft={_fmt(measurement.truth[0])}\n")
            fh.write(f"# truth_y_ft={_fmt(measurement.truth[1])}\n")
        w = csv.writer(fh)
        w.writerow(_ONLINE_HEADER)
        for ap, val in zip(measurement.ap_ids, measurement.y):
            w.writerow([ap, _fmt(val)])


def _parse_float(cell: str, line: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"non-numeric {col} value {cell!r}", line=line) from None


def _parse_int(cell: str, line: int, col: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise DataError(f"non-integer {col} value {cell!r}", line=line) from None


def _read_rows(path, header: list[str]):
    """Yield (line_number, row) for data rows, validating header and arity."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        line = 0
        got_header = False
        for row in reader:
            line += 1
            if not row or row[0].startswith("#"):
                continue
            if not got_header:
                if [c.strip() for c in row] != header:
                    raise DataError(
                        f"bad header {row!r}, expected {','.join(header)}", line=line
                    )
                got_header = True
                continue
            if len(row) != len(header):
                raise DataError(
                    f"expected {len(header)} columns, got {len(row)}", line=line
                )
            yield line, row
        if not got_header:
            raise DataError("no header")


def _collect_coords(coords, rp_index, x, y, line):
    prev = coords.get(rp_index)
    if prev is None:
        coords[rp_index] = (x, y)
    elif prev != (x, y):
        raise DataError(
            f"rp {rp_index} listed with conflicting coordinates {prev} vs {(x, y)}",
            line=line,
        )


def _rps_from_coords(coords) -> tuple[ReferencePoint, ...]:
    indices = sorted(coords)
    if indices != list(range(len(indices))):
        raise DataError("rp_index values must be contiguous from 0")
    return tuple(ReferencePoint(j, coords[j][0], coords[j][1]) for j in indices)


def load_radio_map(path) -> RadioMap:
    ap_order: list[str] = []
    coords: dict[int, tuple[float, float]] = {}
    values: dict[tuple[str, int], float] = {}
    for line, row in _read_rows(path, _MAP_HEADER):
        ap, rp_s, x_s, y_s, rss_s = row
        rp = _parse_int(rp_s, line, "rp_index")
        x = _parse_float(x_s, line, "x_ft")
        y = _parse_float(y_s, line, "y_ft")
        rss = _parse_float(rss_s, line, "rss_dbm")
        if ap not in ap_order:
            ap_order.append(ap)
        _collect_coords(coords, rp, x, y, line)
        values[(ap, rp)] = rss
    rps = _rps_from_coords(coords)
    ap_row = {ap: i for i, ap in enumerate(ap_order)}
    psi = np.full((len(ap_order), len(rps)), SENTINEL_DBM)
    for (ap, rp), rss in values.items():
        psi[ap_row[ap], rp] = rss
    return RadioMap(psi=psi, rps=rps, ap_ids=tuple(ap_order))


def load_tensor(path) -> tuple[FingerprintTensor, tuple[ReferencePoint, ...]]:
    ap_order: list[str] = []
    coords: dict[int, tuple[float, float]] = {}
    values: dict[tuple[str, int, int], float] = {}
    max_t = -1
    for line, row in _read_rows(path, _TENSOR_HEADER):
        ap, rp_s, x_s, y_s, t_s, rss_s = row
        rp = _parse_int(rp_s, line, "rp_index")
        x = _parse_float(x_s, line, "x_ft")
        y = _parse_float(y_s, line, "y_ft")
        t = _parse_int(t_s, line, "t_index")
        rss = _parse_float(rss_s, line, "rss_dbm")
        if t < 0:
            raise DataError(f"t_index must be >= 0, got {t}", line=line)
        if ap not in ap_order:
            ap_order.append(ap)
        _collect_coords(coords, rp, x, y, line)
        values[(ap, rp, t)] = rss
        max_t = max(max_t, t)
    rps = _rps_from_coords(coords)
    ap_row = {ap: i for i, ap in enumerate(ap_order)}
    rss = np.full((len(ap_order), len(rps), max_t + 1), SENTINEL_DBM)
    for (ap, rp, t), val in values.items():
        rss[ap_row[ap], rp, t] = val
    tensor = FingerprintTensor(rss=rss, ap_ids=tuple(ap_order))
    return tensor, rps


def load_online(path, ap_ids) -> OnlineMeasurement:
    """Load an online vector and align it to ``ap_ids`` (a radio map's order).

    APs absent from the file read as the sentinel; file APs unknown to the
    map are dropped with a warning.
    """
    ap_ids = tuple(ap_ids)
    truth_x = truth_y = None
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw.startswith("#"):
                continue
            body = raw.lstrip("#").strip()
            if "=" in body:
                key, _, val = body.partition("=")
                if key.strip() == "truth_x_ft":
                    truth_x = float(val)
                elif key.strip() == "truth_y_ft":
                    truth_y = float(val)
    readings: dict[str, float] = {}
    for line, row in _read_rows(path, _ONLINE_HEADER):
        ap, rss_s = row
        readings[ap] = _parse_float(rss_s, line, "rss_dbm")
    unknown = sorted(set(readings) - set(ap_ids))
    if unknown:
        warnings.warn(
            f"dropping {len(unknown)} AP id(s) not present in the radio map: "
            f"{', '.join(unknown[:5])}{'...' if len(unknown) > 5 else ''}",
            stacklevel=2,
        )
    y = np.array([readings.get(ap, SENTINEL_DBM) for ap in ap_ids])
    truth = None
    if truth_x is not None and truth_y is not None:
        truth = (truth_x, truth_y)
    return OnlineMeasurement(y=y, ap_ids=ap_ids, truth=truth)

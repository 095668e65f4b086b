"""AP ranking and the row-gather selection matrix.

Two rankings: strongest online reading, and the Fisher criterion

    score_i = sum_j (psi_ij - mean_j psi_ij)^2
              / [ (1/(M-1)) sum_m sum_j (r_ijm - psi_ij)^2 ]

i.e. spatial differentiability over temporal variance, computed from the raw
tensor because the denominator needs per-sample residuals. Ties break toward
the lower AP index. Degenerate scores: 0/0 is 0 (an AP carrying no
information), positive/0 is +inf (noiseless and discriminative, ranked first).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .radio_map import FingerprintTensor, OnlineMeasurement


@dataclass(frozen=True)
class SelectionMatrix:
    """Ordered choice of S of L APs; equivalent to a binary S x L row gather."""

    selected: tuple[int, ...]
    num_aps_total: int

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if len(set(sel)) != len(sel):
            raise DataError("selected AP indices must be distinct")
        if any(i < 0 or i >= self.num_aps_total for i in sel):
            raise DataError("selected AP index out of range")
        if not sel:
            raise DataError("must select at least one AP")
        object.__setattr__(self, "selected", sel)

    @property
    def num_selected(self) -> int:
        return len(self.selected)

    def as_matrix(self) -> np.ndarray:
        """Materialize the binary selection matrix (one 1 per row)."""
        phi = np.zeros((len(self.selected), self.num_aps_total))
        phi[np.arange(len(self.selected)), self.selected] = 1.0
        return phi


def _top_by_score(scores: np.ndarray, count: int) -> tuple[int, ...]:
    # Descending score, ties by lower index. lexsort's last key is primary.
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    return tuple(int(i) for i in order[:count])


def select_strongest(
    measurement, count: int, floor_dbm: float | None = None
) -> SelectionMatrix:
    """Top ``count`` APs by online RSS, optionally dropping readings below a floor."""
    y = measurement.y if isinstance(measurement, OnlineMeasurement) else np.asarray(measurement, dtype=float)
    num_aps = y.shape[0]
    if not 1 <= count <= num_aps:
        raise DataError(f"cannot select {count} of {num_aps} APs")
    scores = y.astype(float).copy()
    if floor_dbm is not None:
        eligible = int((y > floor_dbm).sum())
        if eligible < count:
            raise DataError(
                f"only {eligible} APs above {floor_dbm} dBm, need {count}"
            )
        scores[y <= floor_dbm] = -np.inf
    return SelectionMatrix(selected=_top_by_score(scores, count), num_aps_total=num_aps)


def fisher_scores(tensor: FingerprintTensor) -> np.ndarray:
    """Per-AP Fisher score vector, length L."""
    if tensor.num_samples < 2:
        raise DataError("Fisher scores need at least 2 time samples")
    psi = tensor.rss.mean(axis=2)  # (L, N)
    numerator = ((psi - psi.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)
    residuals = tensor.rss - psi[:, :, None]
    denominator = (residuals**2).sum(axis=(1, 2)) / (tensor.num_samples - 1)
    scores = np.empty(tensor.num_aps)
    zero_den = denominator == 0.0
    with np.errstate(divide="ignore"):
        scores[~zero_den] = numerator[~zero_den] / denominator[~zero_den]
    scores[zero_den & (numerator == 0.0)] = 0.0
    scores[zero_den & (numerator > 0.0)] = np.inf
    return scores


def select_fisher(tensor: FingerprintTensor, count: int) -> SelectionMatrix:
    """Top ``count`` APs by Fisher score."""
    if not 1 <= count <= tensor.num_aps:
        raise DataError(f"cannot select {count} of {tensor.num_aps} APs")
    return SelectionMatrix(
        selected=_top_by_score(fisher_scores(tensor), count),
        num_aps_total=tensor.num_aps,
    )


def apply_selection(selection: SelectionMatrix, values: np.ndarray) -> np.ndarray:
    """Gather the selected AP rows from a length-L vector or L x N matrix."""
    values = np.asarray(values)
    if values.shape[0] != selection.num_aps_total:
        raise DataError(
            f"ap axis mismatch: {values.shape[0]} rows, selection over "
            f"{selection.num_aps_total} APs"
        )
    return values[list(selection.selected)]

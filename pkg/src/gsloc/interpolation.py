"""Radio-map interpolation by sparse recovery in the DFT domain.

A radio-map row sampled at V of N RPs is reconstructed by solving a complex
LASSO for its spectrum: least squares on the measured entries plus a penalty
on the sum of complex spectral magnitudes. The DFT is unitary (1/sqrt(N) both
ways) so Parseval holds and the penalty scale does not drift with N.

The complex problem is encoded for the real solver kernel: each spectral
coefficient becomes a size-2 group (real, imaginary) with unit weight, so the
group shrinkage applies exactly the complex-modulus penalty. Plain l1 on
stacked real/imag parts would not be rotation invariant and is not used. The
observation is doubled (real and imaginary residual rows); the optional
outlier vector has length V and attaches to the real rows only, since
measured RSS is real.

RPs are ordered by a serpentine (boustrophedon) traversal of the grid before
the DFT so spatially adjacent RPs stay adjacent in the vector, which is what
makes the spectrum compressible. Periodic RP sampling is pathological: the
zero-stuffed decimated row satisfies the measurement equation exactly, so the
spectrum is not identifiable; ``periodic_pathology_check`` demonstrates this
against a random plan of equal size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .radio_map import RadioMap
from .solver import LinearDesign, SglProblem, solve

DEFAULT_LAMBDA1 = 0.1

_RANDOM_PLAN_STREAM = 404


@dataclass(frozen=True)
class SamplingPlan:
    """Which RP indices carry measured fingerprints."""

    indices: tuple[int, ...]
    strategy: str
    num_rps_total: int
    stride: int | None = None
    seed: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise DataError("sampling plan must select at least one RP")
        if len(set(idx)) != len(idx):
            raise DataError("sampling plan indices must be distinct")
        if any(i < 0 or i >= self.num_rps_total for i in idx):
            raise DataError("sampling plan index out of range")
        object.__setattr__(self, "indices", tuple(sorted(idx)))
        if self.strategy not in ("random", "periodic"):
            raise DataError(f"unknown sampling strategy {self.strategy!r}")

    @property
    def num_selected(self) -> int:
        return len(self.indices)


def make_sampling(
    strategy: str,
    num_rps: int,
    num_selected: int | None = None,
    stride: int | None = None,
    seed: int = 0,
) -> SamplingPlan:
    """Build a sampling plan.

    random: ``num_selected`` seeded draws without replacement.
    periodic: every ``stride``-th RP, 0-based indices {s-1, 2s-1, ...}.
    """
    if num_rps < 1:
        raise DataError("need at least one RP")
    if strategy == "random":
        if num_selected is None or not 1 <= num_selected <= num_rps:
            raise DataError(f"random plan needs 1 <= num_selected <= {num_rps}")
        rng = np.random.default_rng([int(seed), _RANDOM_PLAN_STREAM])
        idx = np.sort(rng.choice(num_rps, size=num_selected, replace=False))
        return SamplingPlan(
            indices=tuple(int(i) for i in idx),
            strategy="random",
            num_rps_total=num_rps,
            seed=int(seed),
        )
    if strategy == "periodic":
        if stride is None or stride < 1:
            raise DataError("periodic plan needs stride >= 1")
        idx = tuple(range(stride - 1, num_rps, stride))
        if not idx:
            raise DataError(f"stride {stride} selects no RPs out of {num_rps}")
        return SamplingPlan(
            indices=idx, strategy="periodic", num_rps_total=num_rps, stride=int(stride)
        )
    raise DataError(f"unknown sampling strategy {strategy!r}")


def serpentine_order(rps) -> np.ndarray:
    """RP indices in boustrophedon traversal: rows by ascending y, alternating x
    direction, so spatial neighbors stay adjacent in the 1-d signal."""
    items = [(rp.index, rp.x, rp.y) for rp in rps]
    ys = sorted({round(y, 6) for _, _, y in items})
    rows: dict[float, list[tuple[float, int]]] = {y: [] for y in ys}
    for index, x, y in items:
        rows[round(y, 6)].append((x, index))
    order = []
    for r, y in enumerate(ys):
        row = sorted(rows[y])
        if r % 2 == 1:
            row.reverse()
        order.extend(index for _, index in row)
    return np.array(order, dtype=np.int64)


def _spectral_design(n: int, positions: np.ndarray) -> LinearDesign:
    """Real encoding of c -> (IDFT(c))[positions], complex c as [Re; Im]."""
    v = len(positions)

    def forward(x: np.ndarray) -> np.ndarray:
        z = np.fft.ifft(x[:n] + 1j * x[n:], norm="ortho")
        zs = z[positions]
        return np.concatenate([zs.real, zs.imag])

    def adjoint(w: np.ndarray) -> np.ndarray:
        e = np.zeros(n, dtype=complex)
        e[positions] = w[:v] + 1j * w[v:]
        g = np.fft.fft(e, norm="ortho")
        return np.concatenate([g.real, g.imag])

    return LinearDesign(shape=(2 * v, 2 * n), forward=forward, adjoint=adjoint)


@dataclass(eq=False)
class RowReconstruction:
    psi_hat: np.ndarray
    kappa: np.ndarray | None
    imag_residual: float
    iterations: int
    converged: bool
    kkt_residual: float
    objective_value: float


def interpolate_ap(
    psi_row: np.ndarray,
    plan: SamplingPlan,
    lambda1: float = DEFAULT_LAMBDA1,
    outlier_lambda2: float | None = None,
    order: np.ndarray | None = None,
    tolerance: float = 1e-6,
    max_iterations: int = 20_000,
) -> RowReconstruction:
    """Reconstruct one AP's full row from its sampled entries.

    ``order`` is an optional RP traversal permutation (e.g. from
    ``serpentine_order``); the DFT runs over the permuted signal and the
    reconstruction is returned in original RP-index order. Measured entries
    are NOT copied back over the reconstruction. ``outlier_lambda2`` enables
    the robust variant with a sparse per-measurement outlier vector; the
    returned kappa is aligned with ``plan.indices``.
    """
    row = np.asarray(psi_row, dtype=np.float64)
    if row.ndim != 1:
        raise DataError("psi_row must be a vector")
    n = row.shape[0]
    if plan.num_rps_total != n:
        raise DataError(
            f"plan covers {plan.num_rps_total} RPs but the row has {n}"
        )
    if not np.all(np.isfinite(row)):
        raise DataError("psi_row contains non-finite values")

    if order is None:
        order = np.arange(n)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n)):
            raise DataError("order must be a permutation of the RP indices")

    inverse = np.empty(n, dtype=np.int64)
    inverse[order] = np.arange(n)
    positions = np.sort(inverse[list(plan.indices)])
    signal = row[order]
    measured = signal[positions]

    v = len(positions)
    design = _spectral_design(n, positions)
    observation = np.concatenate([measured, np.zeros(v)])
    problem = SglProblem(
        design=design,
        observation=observation,
        lambda1=0.0,
        lambda2=lambda1,
        groups=[(j, n + j) for j in range(n)],
        outlier_lambda3=outlier_lambda2,
        outlier_rows=range(v) if outlier_lambda2 is not None else None,
        tolerance=tolerance,
        max_iterations=max_iterations,
    )
    solution = solve(problem)

    spectrum = solution.theta[:n] + 1j * solution.theta[n:]
    z = np.fft.ifft(spectrum, norm="ortho")
    psi_hat = np.empty(n)
    psi_hat[order] = z.real

    kappa = None
    if solution.kappa is not None:
        by_rp = dict(zip(order[positions].tolist(), solution.kappa))
        kappa = np.array([by_rp[i] for i in plan.indices])

    return RowReconstruction(
        psi_hat=psi_hat,
        kappa=kappa,
        imag_residual=float(np.abs(z.imag).max()),
        iterations=solution.iterations,
        converged=solution.converged,
        kkt_residual=solution.kkt_residual,
        objective_value=solution.objective_value,
    )


def interpolate_map(
    radio_map: RadioMap,
    plan: SamplingPlan,
    lambda1: float = DEFAULT_LAMBDA1,
    outlier_lambda2: float | None = None,
    pin_samples: bool = False,
    serpentine: bool = True,
) -> RadioMap:
    """Reconstruct every AP row independently from the sampled RPs.

    ``pin_samples`` restores the measured values at sampled RPs afterwards.
    The traversal order and per-row diagnostics land in the result's meta.
    """
    if plan.num_rps_total != radio_map.num_rps:
        raise DataError(
            f"plan covers {plan.num_rps_total} RPs but the map has {radio_map.num_rps}"
        )
    order = serpentine_order(radio_map.rps) if serpentine else None
    psi_hat = np.empty_like(radio_map.psi)
    imag_residuals = []
    non_converged = 0
    for i in range(radio_map.num_aps):
        rec = interpolate_ap(
            radio_map.psi[i],
            plan,
            lambda1=lambda1,
            outlier_lambda2=outlier_lambda2,
            order=order,
        )
        psi_hat[i] = rec.psi_hat
        imag_residuals.append(rec.imag_residual)
        non_converged += 0 if rec.converged else 1
    if pin_samples:
        psi_hat[:, list(plan.indices)] = radio_map.psi[:, list(plan.indices)]
    meta = {
        "traversal_order": [] if order is None else [int(i) for i in order],
        "max_imag_residual": max(imag_residuals),
        "rows_not_converged": non_converged,
        "lambda1": lambda1,
        "plan_strategy": plan.strategy,
        "plan_size": plan.num_selected,
    }
    return RadioMap(psi=psi_hat, rps=radio_map.rps, ap_ids=radio_map.ap_ids, meta=meta)


def zero_stuffed_spectrum(psi_row: np.ndarray, plan: SamplingPlan) -> np.ndarray:
    """Spectrum of the decimate-then-zero-stuff signal for a periodic plan.

    This point satisfies the sampled measurement equation exactly, which is
    why periodic sampling cannot identify the true spectrum.
    """
    row = np.asarray(psi_row, dtype=np.float64)
    stuffed = np.zeros_like(row)
    idx = list(plan.indices)
    stuffed[idx] = row[idx]
    return np.fft.fft(stuffed, norm="ortho")


def periodic_pathology_check(
    psi_row: np.ndarray,
    stride: int,
    lambda1: float = DEFAULT_LAMBDA1,
    seed: int = 0,
) -> dict:
    """Compare periodic vs equal-size random sampling on one row.

    The row is taken as already being in traversal order. Returns the
    per-plan reconstruction errors and verifies that the zero-stuffed
    signal's spectrum satisfies the periodic measurement equation.
    """
    row = np.asarray(psi_row, dtype=np.float64)
    n = row.shape[0]
    periodic = make_sampling("periodic", n, stride=stride)
    random_plan = make_sampling(
        "random", n, num_selected=periodic.num_selected, seed=seed
    )

    spectrum = zero_stuffed_spectrum(row, periodic)
    z = np.fft.ifft(spectrum, norm="ortho")
    residual = z[list(periodic.indices)] - row[list(periodic.indices)]
    scale = max(1.0, float(np.abs(row).max()))
    zero_stuffed_residual = float(np.abs(residual).max())

    rec_periodic = interpolate_ap(row, periodic, lambda1=lambda1)
    rec_random = interpolate_ap(row, random_plan, lambda1=lambda1)
    return {
        "stride": stride,
        "num_sampled": periodic.num_selected,
        "periodic_re": float(np.abs(rec_periodic.psi_hat - row).mean()),
        "random_re": float(np.abs(rec_random.psi_hat - row).mean()),
        "zero_stuffed_feasible": zero_stuffed_residual <= 1e-9 * scale,
        "zero_stuffed_residual": zero_stuffed_residual,
    }


def tune_lambda1(
    psi_row: np.ndarray,
    plan: SamplingPlan,
    candidates=None,
    order: np.ndarray | None = None,
) -> float:
    """Pick lambda1 by a small grid search against the known full row."""
    row = np.asarray(psi_row, dtype=np.float64)
    if candidates is None:
        candidates = np.geomspace(1e-3, 10.0, 10)
    best_lambda, best_re = None, np.inf
    for lam in candidates:
        rec = interpolate_ap(row, plan, lambda1=float(lam), order=order)
        re = float(np.abs(rec.psi_hat - row).mean())
        if re < best_re:
            best_lambda, best_re = float(lam), re
    return best_lambda

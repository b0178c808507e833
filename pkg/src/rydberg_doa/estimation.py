"""Prony spectral estimation: linear prediction on the channel samples,
characteristic-polynomial rooting, signal-root selection, and the inverse
map from spatial frequency to bearing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientSamples,
    InsufficientSignalRoots,
    RootfindingFailure,
)

FIXED_ORDER = "fixed"
SV_THRESHOLD = "singular_value_threshold"

# Roots within this |arg z| band of DC are calibration-residual leakage,
# not resolvable signal frequencies; the guard scales as 2*pi/(4K).
DC_GUARD_CYCLES = 0.25

ROOT_RESIDUAL_TOL = 1e-8
CLAMP_TOL = 1e-6


@dataclass(frozen=True)
class PronyConfig:
    """Model order and root-selection settings.

    model_order p must satisfy 2N <= p < K. target_count may be an integer
    or None for singular-value-based order selection.
    """

    model_order: int
    target_count: int | None = None
    unit_circle_tolerance: float = 0.2
    order_selection: str = FIXED_ORDER
    sv_threshold: float = 1e-3

    def __post_init__(self):
        if self.model_order < 1:
            raise ValueError("model_order must be at least 1")
        if not 0 < self.unit_circle_tolerance < 1:
            raise ValueError("unit_circle_tolerance must lie in (0, 1)")
        if self.order_selection not in (FIXED_ORDER, SV_THRESHOLD):
            raise ValueError("unknown order_selection mode")
        if self.order_selection == FIXED_ORDER:
            if self.target_count is None:
                raise ValueError("fixed order selection needs target_count")
            if self.target_count < 1:
                raise ValueError("target_count must be at least 1")
            if self.model_order < 2 * self.target_count:
                raise ValueError("model_order must be at least 2*target_count")


@dataclass(frozen=True)
class EstimationResult:
    """Recovered spatial frequencies and bearings plus solver diagnostics.

    roots holds the selected near-unit-circle representatives (one per
    conjugate pair, positive angle), aligned with spatial_frequencies.
    """

    spatial_frequencies: np.ndarray
    doas: np.ndarray
    roots: np.ndarray
    lpc_coefficients: np.ndarray
    lpc_residual_norm: float
    clamped_flags: np.ndarray
    rank_deficient: bool = False

    def __post_init__(self):
        for name in ("spatial_frequencies", "doas", "roots",
                     "lpc_coefficients", "clamped_flags"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if len(self.spatial_frequencies) != len(self.doas):
            raise ValueError("frequency and DoA counts must agree")


def build_hankel(values: np.ndarray, order: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Linear prediction system for samples y: row r predicts y[p+r] from
    the p preceding samples. Returns (matrix, rhs) with K-p rows."""
    y = np.asarray(values, dtype=float)
    k = len(y)
    if not 1 <= order < k:
        raise InsufficientSamples(
            f"need K > p >= 1, got K={k}, p={order}")
    rows = k - order
    idx = order + np.arange(rows)[:, None] - (1 + np.arange(order))[None, :]
    return y[idx], -y[order:]


def solve_lpc(matrix: np.ndarray, rhs: np.ndarray
              ) -> tuple[np.ndarray, float, bool]:
    """Least-squares prediction coefficients via SVD (minimum-norm when the
    system is rank deficient). Returns (a, residual_norm, rank_deficient)."""
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.size == 0:
        raise InsufficientSamples("empty prediction system")
    coeffs, _, rank, _ = np.linalg.lstsq(matrix, rhs, rcond=None)
    residual = float(np.linalg.norm(matrix @ coeffs - rhs))
    return coeffs, residual, rank < matrix.shape[1]


def char_poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of z^p + a_1 z^(p-1) + ... + a_p via companion eigenvalues,
    polished with a Newton step and residual-checked."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("prediction coefficients must be finite")
    monic = np.concatenate(([1.0], coeffs))
    roots = np.roots(monic)
    deriv = np.polyder(monic)
    with np.errstate(all="ignore"):
        for _ in range(2):
            dp = np.polyval(deriv, roots)
            step = np.where(dp != 0, np.polyval(monic, roots)
                            / np.where(dp == 0, 1.0, dp), 0.0)
            refined = roots - step
            keep = np.isfinite(refined) & (
                np.abs(np.polyval(monic, refined))
                <= np.abs(np.polyval(monic, roots)))
            roots = np.where(keep, refined, roots)
    scale = 1.0 + np.abs(roots) ** len(coeffs)
    residuals = np.abs(np.polyval(monic, roots)) / scale
    worst = residuals.max(initial=0.0)
    if worst > ROOT_RESIDUAL_TOL * max(1.0, np.abs(coeffs).max(initial=0.0)):
        raise RootfindingFailure(
            f"root residual {worst:.3e} above tolerance")
    return roots


def select_signal_roots(roots: np.ndarray, n_targets: int, delta: float,
                        angle_floor: float = 0.0) -> np.ndarray:
    """Pick one representative per conjugate pair for the N signal roots.

    Roots are ranked by distance from the unit circle; the DC guard
    rejects |arg z| below angle_floor. Ties on circle distance prefer the
    candidate farthest in angle from those already chosen.
    """
    roots = np.asarray(roots, dtype=complex)
    angles = np.angle(roots)
    # One representative per conjugate pair: the positive-imag member, plus
    # real negative roots (self-conjugate at the folding frequency).
    is_rep = (roots.imag > 0) | ((roots.imag == 0) & (roots.real < 0))
    keep = is_rep & (np.abs(angles) >= angle_floor) \
        & (np.abs(np.abs(roots) - 1.0) <= delta)
    candidates = roots[keep]
    if len(candidates) < n_targets:
        raise InsufficientSignalRoots(
            f"found {len(candidates)} usable root pairs, need {n_targets}")
    dist = np.abs(np.abs(candidates) - 1.0)
    chosen: list[complex] = []
    remaining = list(range(len(candidates)))
    while len(chosen) < n_targets:
        best = min(dist[i] for i in remaining)
        tied = [i for i in remaining if dist[i] <= best + 1e-12]
        if len(tied) > 1 and chosen:
            sep = [min(abs(abs(np.angle(candidates[i]))
                           - abs(np.angle(c))) for c in chosen)
                   for i in tied]
            pick = tied[int(np.argmax(sep))]
        else:
            pick = tied[0]
        chosen.append(candidates[pick])
        remaining.remove(pick)
    reps = np.array(chosen)
    return np.where(reps.imag < 0, reps.conj(), reps)


def frequencies_from_roots(representatives: np.ndarray,
                           spacing: float) -> np.ndarray:
    """Spatial frequencies arg(z)/spacing, mapped into (0, pi/spacing]."""
    if spacing <= 0:
        raise ValueError("spacing must be strictly positive")
    angles = np.abs(np.angle(np.asarray(representatives, dtype=complex)))
    return angles / spacing


def doa_from_frequency(delta_k: float, wavenumber: float,
                       lo_angle: float) -> tuple[float, bool]:
    """Bearing arcsin(sin(theta_0) - dk/k); out-of-range arguments are
    clamped and flagged when they exceed the clamp tolerance."""
    if wavenumber <= 0:
        raise ValueError("wavenumber must be strictly positive")
    arg = np.sin(lo_angle) - delta_k / wavenumber
    clamped = bool(abs(arg) > 1 + CLAMP_TOL)
    return float(np.arcsin(np.clip(arg, -1.0, 1.0))), clamped


def estimate_target_count(matrix: np.ndarray, threshold: float) -> int:
    """Half the count of Hankel singular values above threshold * largest
    (each real sinusoid contributes a rank-2 pair)."""
    sv = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    significant = int(np.sum(sv > threshold * sv[0]))
    return max(1, round(significant / 2))


def estimate_doa(measurement, scene_meta: tuple[float, float],
                 config: PronyConfig) -> EstimationResult:
    """Full Prony pipeline on a calibrated measurement vector.

    scene_meta carries (carrier wavenumber, LO angle). Deterministic for
    fixed inputs; cost is dominated by the O(p^2 K) least-squares solve.
    """
    wavenumber, lo_angle = scene_meta
    values = measurement.values
    spacing = measurement.geometry.spacing
    k_samples = len(values)
    if k_samples <= config.model_order:
        raise InsufficientSamples(
            f"K={k_samples} samples cannot support order p={config.model_order}")
    matrix, rhs = build_hankel(values, config.model_order)
    coeffs, residual, rank_deficient = solve_lpc(matrix, rhs)
    roots = char_poly_roots(coeffs)
    if config.order_selection == SV_THRESHOLD:
        n_targets = estimate_target_count(matrix, config.sv_threshold)
    else:
        n_targets = config.target_count
    angle_floor = 2 * np.pi * DC_GUARD_CYCLES / k_samples
    reps = select_signal_roots(roots, n_targets,
                               config.unit_circle_tolerance, angle_floor)
    freqs = frequencies_from_roots(reps, spacing)
    order = np.argsort(freqs)
    freqs = freqs[order]
    reps = reps[order]
    doas = np.empty(n_targets)
    clamped = np.zeros(n_targets, dtype=bool)
    for i, dk in enumerate(freqs):
        doas[i], clamped[i] = doa_from_frequency(dk, wavenumber, lo_angle)
    return EstimationResult(
        spatial_frequencies=freqs, doas=doas, roots=reps,
        lpc_coefficients=coeffs, lpc_residual_norm=residual,
        clamped_flags=clamped, rank_deficient=rank_deficient)

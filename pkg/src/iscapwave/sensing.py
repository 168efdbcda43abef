"""Sidelobe-level sensing metric over the range-velocity bin grid.

The metric is an upper bound on the integrated sidelobe mass of the
range-velocity estimator relative to its peak at the true bin (0, 0):

    ub = -M (K_G M - 1) 1'p + sum_{(r,v) != (0,0)} sqrt(g_{r,v}(p) + g2(mu))

Deterministic symbol content (large means) shrinks the bound; symbol
randomness inflates it.  Reported values are normalized by the peak-lobe
scale M (K_G M - 1) 1'p so that the floor sits at -1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ofdm import idft_row

__all__ = [
    "SensingGrid",
    "ub_fap",
    "ub_fap_matrix",
    "peak_scale",
    "normalized_ub",
]

RADICAND_TOL = 1e-9


@dataclass(frozen=True)
class SensingGrid:
    """Range bins 0..K_G-1 and M velocity bins centered on zero; (0,0) excluded."""

    k: int
    k_g: int
    m: int

    def __post_init__(self):
        if self.k < 1 or self.m < 1 or not 1 <= self.k_g <= self.k:
            raise ValueError("invalid grid dimensions")

    @property
    def cell_count(self) -> int:
        return self.k_g * self.m - 1

    @property
    def velocities(self) -> np.ndarray:
        half = self.m // 2
        return np.arange(-half, self.m - half)

    def zero_velocity_rows(self) -> np.ndarray:
        """Rows [f_r; f_r] (length 2K, complex) for range bins r = 1..K_G-1.

        Only zero-velocity cells carry the coherent range term; their
        real/imag parts scaled by M are the grid vectors paired with the
        combined power vector p[:K] + p[K:].
        """
        return np.array([np.tile(idft_row(r, self.k), 2) for r in range(1, self.k_g)])

    def f_vectors(self, r: int, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Grid vectors f^R, f^I of one cell (zero for nonzero velocity)."""
        base = np.tile(idft_row(r, self.k), 2)
        scale = self.m if v == 0 else 0.0
        return scale * base.real, scale * base.imag


def peak_scale(grid: SensingGrid, total_power: float) -> float:
    """Average peak-lobe magnitude at full correlation: M (K_G M - 1) 1'p."""
    return grid.m * (grid.k_g * grid.m - 1) * total_power


def _sidelobe_sum(grid: SensingGrid, p: np.ndarray, quartic_term: float) -> float:
    """Sum of sqrt(radicand) over all non-peak cells.

    The incoherent part 2M||p||^2 + quartic cancels exactly for deterministic
    (all-mean) inputs; rounding can leave it a hair off zero on either side.
    Magnitudes inside the clamp tolerance are therefore snapped to zero (and
    counted), beyond-tolerance negatives are an input error.
    """
    m = grid.m
    base = 2.0 * m * float(p @ p) + quartic_term
    scale = max(1.0, abs(2.0 * m * float(p @ p)))
    clamped = 0
    if base < -RADICAND_TOL * scale:
        raise ValueError(f"negative sidelobe radicand {base:.3e}")
    if abs(base) <= RADICAND_TOL * scale:
        if base != 0.0:
            clamped += 1
        base = 0.0

    total = 0.0
    # zero-velocity cells r = 1..K_G-1 carry the coherent range term
    combined = p[: grid.k] + p[grid.k :]
    for rowvec in grid.zero_velocity_rows():
        coherent = rowvec[: grid.k] @ combined
        total += np.sqrt(m * m * abs(coherent) ** 2 + base)
    # every nonzero-velocity cell shares the same radicand
    n_offpeak_v = (m - 1) * grid.k_g
    if n_offpeak_v:
        total += n_offpeak_v * np.sqrt(base)
    if clamped:
        warnings.warn(f"clamped {clamped} near-zero sidelobe radicands", RuntimeWarning)
    return total


def ub_fap(p: np.ndarray, mu: np.ndarray, grid: SensingGrid) -> float:
    """Sidelobe-mass upper bound from the power and mean vectors (length 2K)."""
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if p.shape != (2 * grid.k,) or mu.shape != (2 * grid.k,):
        raise ValueError(f"p and mu must have length {2 * grid.k}")
    if np.any(p < mu**2 - RADICAND_TOL * max(1.0, float(np.max(p, initial=1.0)))):
        raise ValueError("power must dominate squared mean elementwise")
    quartic = -2.0 * grid.m * float(np.sum(mu**4))
    return -peak_scale(grid, float(np.sum(p))) + _sidelobe_sum(grid, p, quartic)


def ub_fap_matrix(p_mat: np.ndarray, u_mat: np.ndarray, grid: SensingGrid) -> float:
    """Same bound from the (P, U) matrices; depends only on their diagonals."""
    p_mat = np.asarray(p_mat, dtype=float)
    u_mat = np.asarray(u_mat, dtype=float)
    d = 2 * grid.k
    if p_mat.shape != (d, d) or u_mat.shape != (d, d):
        raise ValueError(f"P and U must be {d}x{d}")
    p = np.diag(p_mat)
    quartic = -2.0 * grid.m * float(np.diag(u_mat) @ np.diag(u_mat))
    return -peak_scale(grid, float(np.sum(p))) + _sidelobe_sum(grid, p, quartic)


def normalized_ub(ub_value: float, total_power: float, grid: SensingGrid) -> float:
    """Report the bound relative to the peak-lobe scale (floor at -1)."""
    scale = peak_scale(grid, total_power)
    if scale <= 0:
        raise ValueError("total power must be positive to normalize")
    return ub_value / scale

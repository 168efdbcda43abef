"""Closed-form harvested-power moments of the received CP-OFDM waveform.

Every received sub-pulse is a linear map of the real-composite symbol
vector(s), so its second/fourth moments are trace forms in the power
allocation matrix P and the mean matrix U.  This module precomputes the
coefficient matrices of those trace forms and evaluates the per-sub-pulse
moments and the total DC scaling term.

Sub-pulse index n runs over 0..K'-1: indices n < K_G fall in the cyclic
prefix (their samples mix the current symbol with its predecessor), indices
n >= K_G fall in the data duration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import PoweringChannel, carrier_gains
from .ofdm import OFDMConfig, idft_row

__all__ = [
    "RectennaModel",
    "PoweringCoefficients",
    "build_powering_coefficients",
    "zdc_data_second",
    "zdc_data_fourth",
    "zdc_cp_second",
    "zdc_cp_fourth",
    "zdc_total",
    "zdc_per_subpulse",
]


@dataclass(frozen=True)
class RectennaModel:
    """Two-term Taylor model of the rectifying diode: weights k2 and k4."""

    k2: float = 0.024
    k4: float = 19.145

    def __post_init__(self):
        if self.k2 <= 0 or self.k4 <= 0:
            raise ValueError("diode Taylor coefficients must be positive")


def _composite_outer(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real/imag composite rows of a complex row vector c."""
    r = np.concatenate([c.real, -c.imag])
    i = np.concatenate([c.imag, c.real])
    return r, i


def _cp_windows(taps: np.ndarray, k: int, k_g: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Length-K tap windows of CP sub-pulse n.

    Window 1 collects taps hitting the current symbol (time indices
    K-K_G .. K-K_G+n carry tap a_{K-K_G+n-index}); window 2 the taps that
    reach back into the previous symbol.
    """
    L = taps.size
    w1 = np.zeros(k, dtype=complex)
    for p in range(k - k_g, k - k_g + n + 1):
        li = k - k_g + n - p
        if li < L:
            w1[p] = taps[li]
    w2 = np.zeros(k, dtype=complex)
    for p in range(k - k_g + n + 1, k):
        li = k + n - p
        if li < L:
            w2[p] = taps[li]
    return w1, w2


@dataclass(frozen=True)
class _CpSet:
    """Coefficient matrices of one CP sub-pulse for one sample branch.

    ``factors1``/``factors2`` are the composite rows (r, i) whose outer
    products build b1/b2; the rank factors of e are their sums.
    """

    b1: np.ndarray
    b2: np.ndarray
    d: np.ndarray
    factors1: tuple
    factors2: tuple

    @property
    def b(self) -> np.ndarray:
        return self.b1 + self.b2

    @property
    def e(self) -> np.ndarray:
        return self.b1 + self.b2 + self.d + self.d.T

    @property
    def e_factors(self) -> tuple:
        return (self.factors1[0] + self.factors2[0], self.factors1[1] + self.factors2[1])


@dataclass(frozen=True)
class PoweringCoefficients:
    """All trace-form coefficients for one (channel, frame geometry) pair.

    ``a``/``a_half`` hold the data-duration matrices A_n (rank <= 2, PSD) for
    the integer-sample and half-sample branches, keyed in sub-pulse order
    n = K_G..K'-1.  ``cp``/``cp_half`` hold the CP-duration sets in order
    n = 0..K_G-1.
    """

    cfg: OFDMConfig
    noise_var: float
    a: tuple
    a_half: tuple
    cp: tuple
    cp_half: tuple
    a_factors: tuple = ()
    a_half_factors: tuple = ()

    @property
    def dim(self) -> int:
        return 2 * self.cfg.k


def build_powering_coefficients(pchan: PoweringChannel, cfg: OFDMConfig) -> PoweringCoefficients:
    """Assemble all coefficient matrices for the given channel and geometry."""
    if pchan.tap_count > cfg.k_g:
        raise ValueError(
            f"delay spread L={pchan.tap_count} exceeds CP length K_G={cfg.k_g}"
        )
    k, k_g = cfg.k, cfg.k_g

    data, data_half = [], []
    data_f, data_half_f = [], []
    for branch_taps, out, out_f in (
        (pchan.taps, data, data_f),
        (pchan.half_taps, data_half, data_half_f),
    ):
        gains = carrier_gains(branch_taps, k)
        for n in range(k_g, cfg.k_prime):
            c = idft_row(n - k_g, k) * gains
            r, i = _composite_outer(c)
            out.append(np.outer(r, r) + np.outer(i, i))
            out_f.append((r, i))

    cp, cp_half = [], []
    for branch_taps, out in ((pchan.taps, cp), (pchan.half_taps, cp_half)):
        fmat = np.exp(2j * np.pi * np.outer(np.arange(k), np.arange(k)) / k)
        for n in range(k_g):
            w1, w2 = _cp_windows(np.asarray(branch_taps), k, k_g, n)
            b1c, b2c = fmat @ w1, fmat @ w2
            r1, i1 = _composite_outer(b1c)
            r2, i2 = _composite_outer(b2c)
            out.append(
                _CpSet(
                    b1=np.outer(r1, r1) + np.outer(i1, i1),
                    b2=np.outer(r2, r2) + np.outer(i2, i2),
                    d=np.outer(r1, r2) + np.outer(i1, i2),
                    factors1=(r1, i1),
                    factors2=(r2, i2),
                )
            )

    return PoweringCoefficients(
        cfg=cfg,
        noise_var=pchan.noise_var,
        a=tuple(data),
        a_half=tuple(data_half),
        cp=tuple(cp),
        cp_half=tuple(cp_half),
        a_factors=tuple(data_f),
        a_half_factors=tuple(data_half_f),
    )


def _check_shapes(coeffs: PoweringCoefficients, p: np.ndarray, u: np.ndarray | None = None):
    d = coeffs.dim
    if p.shape != (d, d):
        raise ValueError(f"P must be {d}x{d}, got {p.shape}")
    if u is not None and u.shape != (d, d):
        raise ValueError(f"U must be {d}x{d}, got {u.shape}")


def zdc_data_second(coeffs: PoweringCoefficients, p: np.ndarray, half: bool = False) -> np.ndarray:
    """Second moments over the data duration: Tr(A_n P) + noise, per n."""
    p = np.asarray(p, dtype=float)
    _check_shapes(coeffs, p)
    mats = coeffs.a_half if half else coeffs.a
    return np.array([np.trace(a @ p) for a in mats]) + coeffs.noise_var


def zdc_data_fourth(
    coeffs: PoweringCoefficients, p: np.ndarray, u: np.ndarray, half: bool = False
) -> np.ndarray:
    """Fourth moments over the data duration, per n.

    Tr^2(AP) + 6 s2 Tr(AP) + 2 Tr(APAP) - 2 Tr(AUAU) + 3 s2^2, where A is the
    branch matrix (integer- or half-sample) and s2 the noise power.  The noise
    cross term uses the same branch matrix as the signal terms.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_shapes(coeffs, p, u)
    s2 = coeffs.noise_var
    mats = coeffs.a_half if half else coeffs.a
    out = np.empty(len(mats))
    for idx, a in enumerate(mats):
        t = np.trace(a @ p)
        out[idx] = (
            t * t
            + 6.0 * s2 * t
            + 2.0 * np.trace(a @ p @ a @ p)
            - 2.0 * np.trace(a @ u @ a @ u)
            + 3.0 * s2 * s2
        )
    return out


def zdc_cp_second(
    coeffs: PoweringCoefficients, p: np.ndarray, u: np.ndarray, half: bool = False
) -> np.ndarray:
    """Second moments over the CP duration: Tr(B_n P) + 2 Tr(D_n U) + noise."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_shapes(coeffs, p, u)
    sets = coeffs.cp_half if half else coeffs.cp
    return np.array(
        [np.trace(s.b @ p) + 2.0 * np.trace(s.d @ u) for s in sets]
    ) + coeffs.noise_var


def zdc_cp_fourth(
    coeffs: PoweringCoefficients, p: np.ndarray, u: np.ndarray, half: bool = False
) -> np.ndarray:
    """Fourth moments over the CP duration, per n (one sample branch)."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_shapes(coeffs, p, u)
    s2 = coeffs.noise_var
    sets = coeffs.cp_half if half else coeffs.cp
    out = np.empty(len(sets))
    for idx, s in enumerate(sets):
        b1, b2, d = s.b1, s.b2, s.d
        e = s.e
        t = np.trace(s.b @ p) + 2.0 * np.trace(d @ u)
        val = t * t + 6.0 * s2 * t
        val += 2.0 * np.trace(b1 @ p @ b1 @ p + b2 @ p @ b2 @ p)
        val += 4.0 * np.trace(d @ p @ d.T @ p + d @ u @ d @ u)
        val += 4.0 * np.trace(b1 @ u @ b2 @ u + b1 @ p @ d @ u)
        val += 4.0 * np.trace(b2 @ p @ d.T @ u + b1 @ u @ d.T @ p)
        val += 4.0 * np.trace(b2 @ u @ d @ p)
        val -= 2.0 * np.trace(e @ u @ e.T @ u)
        val += 3.0 * s2 * s2
        out[idx] = val
    return out


def zdc_per_subpulse(
    coeffs: PoweringCoefficients, rect: RectennaModel, p: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Weighted per-sub-pulse contributions, length K' (CP entries first)."""
    w4 = 0.75 * rect.k4
    cp_part = (
        rect.k2 * zdc_cp_second(coeffs, p, u)
        + w4 * (zdc_cp_fourth(coeffs, p, u) + zdc_cp_fourth(coeffs, p, u, half=True))
    )
    data_part = (
        rect.k2 * zdc_data_second(coeffs, p)
        + w4 * (zdc_data_fourth(coeffs, p, u) + zdc_data_fourth(coeffs, p, u, half=True))
    )
    return np.concatenate([cp_part, data_part])


def zdc_total(
    coeffs: PoweringCoefficients, rect: RectennaModel, p: np.ndarray, u: np.ndarray
) -> float:
    """DC scaling term of one OFDM symbol (per-symbol metric, independent of M)."""
    return float(np.sum(zdc_per_subpulse(coeffs, rect, p, u)))

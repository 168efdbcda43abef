"""Achievable rate of the Gaussian input and water-filling helpers.

The real and imaginary streams of each subcarrier are independent Gaussian
channels, so the per-symbol rate averages 2K parallel log terms.  The 2K
factor inside the SNR encodes the per-subcarrier noise bandwidth B/K together
with the real/imag split.
"""

from __future__ import annotations

import numpy as np

from .channels import CommChannel
from .ofdm import OFDMConfig

__all__ = [
    "snr_gains",
    "achievable_rate",
    "achievable_rate_logdet",
    "max_rate_at_power",
    "waterfill_max_rate",
    "waterfill_min_power",
]


def snr_gains(cchan: CommChannel, cfg: OFDMConfig) -> np.ndarray:
    """Per-entry SNR slopes c (length 2K): rate term is log2(1 + c * sigma)."""
    g = 2.0 * cfg.k * np.abs(cchan.h_c) ** 2 / (cfg.bandwidth_hz * cchan.noise_psd)
    return np.tile(g, 2)


def achievable_rate(sigma: np.ndarray, cchan: CommChannel, cfg: OFDMConfig) -> float:
    """Average rate in bits/s/Hz for variance vector sigma (length 2K)."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2 * cfg.k,):
        raise ValueError(f"sigma must have length {2 * cfg.k}")
    if np.any(sigma < 0):
        raise ValueError("variances must be non-negative")
    c = snr_gains(cchan, cfg)
    return float(np.sum(np.log2(1.0 + c * sigma)) / (2 * cfg.k))


def achievable_rate_logdet(sigma: np.ndarray, cchan: CommChannel, cfg: OFDMConfig) -> float:
    """log-det form of the same rate (diagonal effective channel)."""
    sigma = np.asarray(sigma, dtype=float)
    c = snr_gains(cchan, cfg)
    mat = np.eye(2 * cfg.k) + np.diag(c * sigma)
    sign, logdet = np.linalg.slogdet(mat)
    return float(logdet / np.log(2.0) / (2 * cfg.k))


def _waterfill(c: np.ndarray, level: float) -> np.ndarray:
    return np.maximum(0.0, level - 1.0 / c)


def waterfill_max_rate(c: np.ndarray, budget: float) -> tuple[np.ndarray, float]:
    """Allocate ``budget`` over channels with slopes c to maximize sum log2(1+c s).

    Returns (allocation, water level).  Channels with c == 0 never receive
    power.
    """
    c = np.asarray(c, dtype=float)
    active = c > 0
    if budget <= 0 or not np.any(active):
        return np.zeros_like(c), 0.0
    inv = 1.0 / c[active]
    # The water level solves sum max(0, level - inv) = budget; the left side is
    # piecewise linear and increasing, so walk the breakpoints directly.
    order = np.sort(inv)
    cumsum = np.cumsum(order)
    level = None
    for i in range(order.size):
        candidate = (budget + cumsum[i]) / (i + 1)
        if i + 1 == order.size or candidate <= order[i + 1]:
            if candidate >= order[i]:
                level = candidate
                break
    if level is None:
        level = (budget + cumsum[-1]) / order.size
    out = np.zeros_like(c)
    out[active] = _waterfill(c[active], level)
    return out, float(level)


def max_rate_at_power(cchan: CommChannel, cfg: OFDMConfig, budget: float) -> float:
    """Capacity of the link when the whole budget goes into symbol variance."""
    c = snr_gains(cchan, cfg)
    alloc, _ = waterfill_max_rate(c, budget)
    return float(np.sum(np.log2(1.0 + c * alloc)) / (2 * cfg.k))


def waterfill_min_power(
    cchan: CommChannel, cfg: OFDMConfig, rate_target: float, tol: float = 1e-12
) -> np.ndarray:
    """Minimum-power variance vector achieving ``rate_target`` bits/s/Hz.

    Bisects the water level; raises ValueError when the target is positive but
    every channel gain is zero.
    """
    if rate_target <= 0:
        return np.zeros(2 * cfg.k)
    c = snr_gains(cchan, cfg)
    if not np.any(c > 0):
        raise ValueError("rate target unreachable: all channel gains are zero")

    def rate_at(level: float) -> float:
        return float(np.sum(np.log2(1.0 + c * _waterfill(c, level))) / (2 * cfg.k))

    lo, hi = 0.0, 1.0
    while rate_at(hi) < rate_target:
        hi *= 2.0
        if hi > 1e30:
            raise ValueError("rate target unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate_at(mid) < rate_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return _waterfill(c, hi)

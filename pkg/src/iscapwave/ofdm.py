"""CP-OFDM frame arithmetic and Gaussian symbol models.

Conventions used throughout the package:

* The synthesis (inverse) transform is unnormalized: ``idft(v)[n] = sum_k
  v[k] exp(+2j*pi*n*k/K)``.  Its rows are the unit-modulus vectors
  ``f_n = [1, e^{2j pi n/K}, ..., e^{2j pi n(K-1)/K}]``.
* ``dft`` is the exact inverse of ``idft`` (it carries the 1/K factor), so
  ``dft(idft(v)) == v``.
* Real-composite layout: a complex length-K vector x maps to the length-2K
  real vector ``[Re(x); Im(x)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OFDMConfig",
    "GaussianInput",
    "PowerAllocationPair",
    "idft",
    "dft",
    "idft_row",
    "add_cyclic_prefix",
    "pack_composite",
    "unpack_composite",
    "sample_symbols",
]


@dataclass(frozen=True)
class OFDMConfig:
    """Frame geometry: K subcarriers, K_G cyclic-prefix sub-pulses, M symbols."""

    k: int
    k_g: int
    m: int = 1
    bandwidth_hz: float = 30e6
    carrier_hz: float = 5.18e9

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"subcarrier count must be >= 1, got {self.k}")
        if self.m < 1:
            raise ValueError(f"symbol count must be >= 1, got {self.m}")
        if not 1 <= self.k_g <= self.k:
            raise ValueError(
                f"CP length must satisfy 1 <= k_g <= k, got k_g={self.k_g}, k={self.k}"
            )

    @property
    def k_prime(self) -> int:
        """Sub-pulses per symbol including the cyclic prefix."""
        return self.k + self.k_g


@dataclass(frozen=True)
class GaussianInput:
    """Per-subcarrier means and variances of the real-composite symbol vector.

    ``mu[k]``/``sigma[k]`` for k < K describe the real parts, entries K..2K-1
    the imaginary parts.  ``sigma`` holds variances (not standard deviations);
    zero variances (deterministic symbols) are allowed.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.ndim != 1 or mu.shape != sigma.shape or mu.size % 2:
            raise ValueError("mu and sigma must be equal-length 1-D vectors of even length")
        if np.any(sigma < 0):
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def k(self) -> int:
        return self.mu.size // 2

    @property
    def power(self) -> np.ndarray:
        """Per-entry average power p = mu^2 + sigma."""
        return self.mu**2 + self.sigma

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power))

    def complex_mean(self) -> np.ndarray:
        return unpack_composite(self.mu)

    def allocation(self) -> "PowerAllocationPair":
        """The (P, U) pair this input induces: U = mu mu^T, P = U + diag(sigma)."""
        u = np.outer(self.mu, self.mu)
        return PowerAllocationPair(p=u + np.diag(self.sigma), u=u)


@dataclass(frozen=True)
class PowerAllocationPair:
    """Symmetric 2K x 2K power-allocation matrix P and mean matrix U."""

    p: np.ndarray
    u: np.ndarray

    PSD_TOL = 1e-9

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if p.shape != u.shape or p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("P and U must be square matrices of identical shape")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)

    def validate(self):
        """Check symmetry and PSD of U (min eigenvalue >= -1e-9)."""
        if not np.allclose(self.p, self.p.T, atol=1e-8):
            raise ValueError("P is not symmetric")
        if not np.allclose(self.u, self.u.T, atol=1e-8):
            raise ValueError("U is not symmetric")
        w = np.linalg.eigvalsh(0.5 * (self.u + self.u.T))
        if w.min() < -self.PSD_TOL * max(1.0, w.max()):
            raise ValueError(f"U is not PSD: min eigenvalue {w.min():.3e}")


def idft(v: np.ndarray) -> np.ndarray:
    """Unnormalized inverse DFT along the last axis: out[n] = f_n . v."""
    v = np.asarray(v)
    return np.fft.ifft(v, axis=-1) * v.shape[-1]


def dft(v: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`idft` (carries the 1/K factor)."""
    v = np.asarray(v)
    return np.fft.fft(v, axis=-1) / v.shape[-1]


def idft_row(n: int, k: int) -> np.ndarray:
    """The unit-modulus synthesis row f_n = exp(+2j*pi*n*arange(k)/k)."""
    return np.exp(2j * np.pi * (n % k) * np.arange(k) / k)


def add_cyclic_prefix(x: np.ndarray, cfg: OFDMConfig) -> np.ndarray:
    """Prefix the tail: out[n] = x[(n - K_G) mod K] for n = 0..K'-1."""
    x = np.asarray(x)
    if x.shape[-1] != cfg.k:
        raise ValueError(f"expected last axis {cfg.k}, got {x.shape[-1]}")
    idx = (np.arange(cfg.k_prime) - cfg.k_g) % cfg.k
    return x[..., idx]


def pack_composite(x: np.ndarray) -> np.ndarray:
    """Complex length-K vector -> real length-2K vector [Re; Im]."""
    x = np.asarray(x)
    return np.concatenate([x.real, x.imag], axis=-1)


def unpack_composite(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_composite`."""
    v = np.asarray(v)
    k = v.shape[-1] // 2
    if v.shape[-1] != 2 * k:
        raise ValueError("composite vector length must be even")
    return v[..., :k] + 1j * v[..., k:]


def sample_symbols(
    inp: GaussianInput,
    cfg: OFDMConfig,
    seed,
    count: int | None = None,
) -> np.ndarray:
    """Draw symbol vectors, shape (count, K) complex, identically distributed.

    Real and imaginary parts of every subcarrier are independent Gaussians
    with the means/variances of ``inp``; ``count`` defaults to ``cfg.m``.
    """
    if inp.k != cfg.k:
        raise ValueError(f"input is for K={inp.k}, config has K={cfg.k}")
    n = cfg.m if count is None else int(count)
    rng = np.random.default_rng(seed)
    std = np.sqrt(inp.sigma)
    k = cfg.k
    re = inp.mu[:k] + rng.standard_normal((n, k)) * std[:k]
    im = inp.mu[k:] + rng.standard_normal((n, k)) * std[k:]
    return re + 1j * im

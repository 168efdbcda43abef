"""Tapped-delay multipath channels for the powering and communication links.

Taps are spaced at 1/B.  Two frequency-domain views of the same taps appear in
the package:

* :func:`freq_response` -- the synthesis-side response ``h[k] = sum_l a_l
  exp(+2j*pi*k*l/K)`` (unnormalized IDFT of the zero-padded taps).
* :func:`carrier_gains` -- the gain each subcarrier actually experiences when
  the transmitter modulates with the ``f_n`` rows of :mod:`iscapwave.ofdm`,
  ``g[k] = sum_l a_l exp(-2j*pi*k*l/K)``.  The two views are index-reversed
  copies of each other; moment coefficients and the Monte-Carlo simulator must
  both use :func:`carrier_gains` to stay consistent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ofdm import OFDMConfig, idft

__all__ = [
    "PoweringChannel",
    "CommChannel",
    "ChannelGenConfig",
    "half_sample_taps",
    "freq_response",
    "carrier_gains",
    "generate_channels",
    "channels_to_json",
    "channels_from_json",
    "db_to_linear",
    "dbm_to_watt",
]


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def half_sample_taps(a: np.ndarray) -> np.ndarray:
    """Taps seen at half-sample offsets: at[j] = sum_l a_l sinc(j + 1/2 - l).

    Only the first L entries are kept (entries beyond the original delay
    spread are truncated to zero); the Monte-Carlo oracle measures the bias
    this truncation introduces instead of hiding it.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("taps must be a non-empty 1-D vector")
    L = a.size
    j = np.arange(L)[:, None]
    l = np.arange(L)[None, :]
    return (np.sinc(j + 0.5 - l) @ a[:, None]).ravel()


def freq_response(a: np.ndarray, k: int) -> np.ndarray:
    """Synthesis-side frequency response of the zero-padded taps (length k)."""
    a = np.asarray(a, dtype=complex)
    if a.size > k:
        raise ValueError(f"tap count {a.size} exceeds subcarrier count {k}")
    padded = np.zeros(k, dtype=complex)
    padded[: a.size] = a
    return idft(padded)


def carrier_gains(a: np.ndarray, k: int) -> np.ndarray:
    """Per-subcarrier gains under the f_n modulator: g[k] = sum_l a_l e^{-2j pi k l / K}."""
    a = np.asarray(a, dtype=complex)
    if a.size > k:
        raise ValueError(f"tap count {a.size} exceeds subcarrier count {k}")
    padded = np.zeros(k, dtype=complex)
    padded[: a.size] = a
    return np.fft.fft(padded)


@dataclass(frozen=True)
class PoweringChannel:
    """Powering-link taps, their half-sample companions and responses."""

    taps: np.ndarray
    half_taps: np.ndarray
    h_p: np.ndarray
    h_p_half: np.ndarray
    noise_var: float  # W

    @classmethod
    def from_taps(cls, taps, k: int, noise_var: float) -> "PoweringChannel":
        taps = np.asarray(taps, dtype=complex)
        half = half_sample_taps(taps)
        return cls(
            taps=taps,
            half_taps=half,
            h_p=freq_response(taps, k),
            h_p_half=freq_response(half, k),
            noise_var=float(noise_var),
        )

    @property
    def tap_count(self) -> int:
        return self.taps.size


@dataclass(frozen=True)
class CommChannel:
    """Per-subcarrier complex gains and noise PSD of the communication link."""

    h_c: np.ndarray
    noise_psd: float  # W/Hz

    def __post_init__(self):
        object.__setattr__(self, "h_c", np.asarray(self.h_c, dtype=complex))

    @property
    def k(self) -> int:
        return self.h_c.size


@dataclass(frozen=True)
class ChannelGenConfig:
    """Randomized NLOS-style channel generator settings.

    Taps are zero-mean complex Gaussian with an exponentially decaying power
    profile (decay constant in taps) normalized to unit total power, then
    scaled by the link path loss.  Noise figures are given as total dBW and
    converted to linear at generation time; for the communication link the
    stored quantity is a PSD (W/Hz over the signal bandwidth).
    """

    tap_count: int = 3
    decay: float = 1.0
    powering_path_loss_db: float = 58.0
    comm_path_loss_db: float = 108.0
    powering_noise_dbw: float = -108.0
    comm_noise_dbw: float = -110.0
    comm_snr_target_db: float | None = None

    def __post_init__(self):
        if self.tap_count < 1:
            raise ValueError("tap_count must be >= 1")
        if self.decay <= 0:
            raise ValueError("decay must be positive")


def _draw_taps(rng: np.random.Generator, cfg: ChannelGenConfig, path_loss_db: float) -> np.ndarray:
    profile = np.exp(-np.arange(cfg.tap_count) / cfg.decay)
    profile = profile / profile.sum() * db_to_linear(-path_loss_db)
    std = np.sqrt(profile / 2.0)
    return rng.standard_normal(cfg.tap_count) * std + 1j * rng.standard_normal(cfg.tap_count) * std


def generate_channels(
    cfg: ChannelGenConfig, ofdm: OFDMConfig, seed
) -> tuple[PoweringChannel, CommChannel]:
    """Draw one (powering, communication) channel pair, deterministic per seed."""
    rng = np.random.default_rng(seed)
    p_taps = _draw_taps(rng, cfg, cfg.powering_path_loss_db)
    c_taps = _draw_taps(rng, cfg, cfg.comm_path_loss_db)
    h_c = carrier_gains(c_taps, ofdm.k)

    noise_c = db_to_linear(cfg.comm_noise_dbw)  # total W over bandwidth
    if cfg.comm_snr_target_db is not None:
        # Rescale comm gains so that uniform full-power loading hits the target
        # average per-subcarrier SNR (the 2K factor matches the rate metric).
        p_uniform = 1.0 / (2 * ofdm.k)
        snr_now = np.mean(np.abs(h_c) ** 2) * 2 * ofdm.k * p_uniform / noise_c
        h_c = h_c * np.sqrt(db_to_linear(cfg.comm_snr_target_db) / snr_now)

    pchan = PoweringChannel.from_taps(p_taps, ofdm.k, noise_var=db_to_linear(cfg.powering_noise_dbw))
    cchan = CommChannel(h_c=h_c, noise_psd=noise_c / ofdm.bandwidth_hz)
    return pchan, cchan


def _complex_list(v: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex)]


def _from_complex_list(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


def channels_to_json(pchan: PoweringChannel, cchan: CommChannel, k: int) -> str:
    """Serialize a channel pair; floats round-trip bit-exactly via repr."""
    doc = {
        "k": k,
        "powering": {"taps": _complex_list(pchan.taps), "noise_var": pchan.noise_var},
        "comm": {"h_c": _complex_list(cchan.h_c), "noise_psd": cchan.noise_psd},
    }
    return json.dumps(doc, indent=2)


def channels_from_json(text: str) -> tuple[PoweringChannel, CommChannel, int]:
    doc = json.loads(text)
    k = int(doc["k"])
    pchan = PoweringChannel.from_taps(
        _from_complex_list(doc["powering"]["taps"]), k, doc["powering"]["noise_var"]
    )
    cchan = CommChannel(h_c=_from_complex_list(doc["comm"]["h_c"]), noise_psd=doc["comm"]["noise_psd"])
    return pchan, cchan, k

"""TOML configuration parsing for the batch front-end.

dB and dBm figures are converted to linear units while loading; every
conversion is logged so runs are auditable.
"""

from __future__ import annotations

import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass

from .channels import ChannelGenConfig, dbm_to_watt
from .design import Constraints, SolverConfig
from .ofdm import OFDMConfig

__all__ = ["SweepSpec", "ValidateSpec", "ConfigError", "load_config"]

log = logging.getLogger("iscapwave.config")

KNOWN_FAMILIES = ("OPT", "Symmetric", "CSCG", "Coexist")


class ConfigError(Exception):
    """Malformed or inconsistent configuration file."""


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    c_min_grid: tuple
    s_max_grid: tuple
    p_max: float
    realizations: int
    families: tuple
    ofdm: OFDMConfig
    channel: ChannelGenConfig
    solver: SolverConfig
    seed: int
    output: str = "sweep.csv"

    def constraint_points(self):
        for c_min in self.c_min_grid:
            for s_max in self.s_max_grid:
                yield Constraints(p_max=self.p_max, c_min=c_min, s_max=s_max)


@dataclass(frozen=True)
class ValidateSpec:
    ofdm: OFDMConfig
    tap_count: int
    frames: int
    instances: int
    seed: int
    include_noise: bool = True
    k4_error: float = 0.0  # injected relative fault for self-tests


@dataclass(frozen=True)
class SnapshotSpec:
    family: str
    c_min: float
    s_max: float
    realization: int
    channel_file: str | None = None


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _take(sec: dict, key: str, default=None, required=False):
    if key in sec:
        return sec.pop(key)
    if required:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _no_leftovers(sec: dict, name: str):
    if sec:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(sec)}")


def _parse_ofdm(doc: dict) -> OFDMConfig:
    sec = _section(doc, "ofdm")
    cfg = OFDMConfig(
        k=int(_take(sec, "subcarriers", required=True)),
        k_g=int(_take(sec, "cp_length", required=True)),
        m=int(_take(sec, "symbols", 16)),
        bandwidth_hz=float(_take(sec, "bandwidth_hz", 30e6)),
        carrier_hz=float(_take(sec, "carrier_hz", 5.18e9)),
    )
    _no_leftovers(sec, "ofdm")
    return cfg


def _parse_channel(doc: dict) -> ChannelGenConfig:
    sec = _section(doc, "channel")
    target = _take(sec, "comm_snr_target_db", None)
    cfg = ChannelGenConfig(
        tap_count=int(_take(sec, "tap_count", 3)),
        decay=float(_take(sec, "decay", 1.0)),
        powering_path_loss_db=float(_take(sec, "powering_path_loss_db", 58.0)),
        comm_path_loss_db=float(_take(sec, "comm_path_loss_db", 108.0)),
        powering_noise_dbw=float(_take(sec, "powering_noise_dbw", -108.0)),
        comm_noise_dbw=float(_take(sec, "comm_noise_dbw", -110.0)),
        comm_snr_target_db=None if target is None else float(target),
    )
    _no_leftovers(sec, "channel")
    log.info(
        "channel: powering path loss %.1f dB -> gain %.3e, noise %.1f dBW -> %.3e W",
        cfg.powering_path_loss_db,
        10 ** (-cfg.powering_path_loss_db / 10),
        cfg.powering_noise_dbw,
        10 ** (cfg.powering_noise_dbw / 10),
    )
    return cfg


def _parse_solver(doc: dict) -> SolverConfig:
    sec = _section(doc, "solver")
    cfg = SolverConfig(
        rho=float(_take(sec, "rho", 1.0)),
        eps0=float(_take(sec, "eps0", 1e-4)),
        max_admm_iters=int(_take(sec, "max_admm_iters", 20)),
        max_sca_iters=int(_take(sec, "max_sca_iters", 15)),
        u2_lo=float(_take(sec, "u2_lo", 0.0)),
        u2_hi=float(_take(sec, "u2_hi", 1e6)),
        randomization_count=int(_take(sec, "randomization_count", 100)),
        inner_tol=float(_take(sec, "inner_tol", 1e-7)),
        bisect_tol=float(_take(sec, "bisect_tol", 1e-8)),
        rho_growth=float(_take(sec, "rho_growth", 1.6)),
        rho_growth_start=int(_take(sec, "rho_growth_start", 3)),
        seed=int(_take(sec, "seed", 0)),
    )
    _no_leftovers(sec, "solver")
    return cfg


def _parse_constraint_grid(sec: dict, key: str) -> tuple:
    raw = _take(sec, key, [0.0])
    if not isinstance(raw, list):
        raw = [raw]
    if not raw:
        raise ConfigError(f"{key} grid must be nonempty")
    return tuple(float(x) for x in raw)


def load_config(path: str) -> dict:
    """Read a TOML config; returns parsed specs keyed by section group.

    Raises ConfigError with the decoder's line-level message on bad syntax.
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err

    try:
        ofdm = _parse_ofdm(doc)
        channel = _parse_channel(doc)
        solver = _parse_solver(doc)

        cons = _section(doc, "constraints")
        p_max_dbm = float(_take(cons, "p_max_dbm", 40.0))
        p_max = dbm_to_watt(p_max_dbm)
        log.info("transmit budget %.1f dBm -> %.4f W", p_max_dbm, p_max)
        c_grid = _parse_constraint_grid(cons, "c_min")
        s_grid = _parse_constraint_grid(cons, "s_max")
        _no_leftovers(cons, "constraints")

        sweep_sec = _section(doc, "sweep")
        families = tuple(_take(sweep_sec, "families", list(KNOWN_FAMILIES)))
        for fam in families:
            if fam not in KNOWN_FAMILIES:
                raise ConfigError(f"unknown family {fam!r}; known: {KNOWN_FAMILIES}")
        kind = str(_take(sweep_sec, "kind", "SCP")).upper()
        if kind not in ("SP", "CP", "SCP"):
            raise ConfigError(f"sweep kind must be SP, CP or SCP, got {kind!r}")
        realizations = int(_take(sweep_sec, "realizations", 20))
        if realizations < 1:
            raise ConfigError("realizations must be >= 1")
        sweep = SweepSpec(
            kind=kind,
            c_min_grid=c_grid,
            s_max_grid=s_grid,
            p_max=p_max,
            realizations=realizations,
            families=families,
            ofdm=ofdm,
            channel=channel,
            solver=solver,
            seed=int(_take(sweep_sec, "seed", 0)),
            output=str(_take(sweep_sec, "output", "sweep.csv")),
        )
        _no_leftovers(sweep_sec, "sweep")

        val_sec = _section(doc, "validate")
        val_ofdm = OFDMConfig(
            k=int(_take(val_sec, "subcarriers", 4)),
            k_g=int(_take(val_sec, "cp_length", 2)),
            m=int(_take(val_sec, "symbols", 2)),
            bandwidth_hz=ofdm.bandwidth_hz,
            carrier_hz=ofdm.carrier_hz,
        )
        validate = ValidateSpec(
            ofdm=val_ofdm,
            tap_count=int(_take(val_sec, "tap_count", 2)),
            frames=int(_take(val_sec, "frames", 1_000_000)),
            instances=int(_take(val_sec, "instances", 20)),
            seed=int(_take(val_sec, "seed", 0)),
            include_noise=bool(_take(val_sec, "include_noise", True)),
        )
        _no_leftovers(val_sec, "validate")

        snap_sec = _section(doc, "snapshot")
        snapshot = SnapshotSpec(
            family=str(_take(snap_sec, "family", "OPT")),
            c_min=float(_take(snap_sec, "c_min", c_grid[0])),
            s_max=float(_take(snap_sec, "s_max", s_grid[0])),
            realization=int(_take(snap_sec, "realization", 0)),
            channel_file=_take(snap_sec, "channels", None),
        )
        _no_leftovers(snap_sec, "snapshot")
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err

    return {"sweep": sweep, "validate": validate, "snapshot": snapshot}

"""Region sweeps over constraint grids, channel realizations and families.

Each (constraint point, realization) task runs the requested families in
nesting order (CSCG -> Symmetric -> OPT): because every family's input is
also a member of every less constrained family, the best feasible result so
far is carried forward, so the reported regions are nested by construction.
Results merge in deterministic (family, point, realization) order regardless
of completion order, making reruns byte-identical at any thread count.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import generate_channels
from .config import SweepSpec
from .design import Constraints, DesignResult, baseline, optimize
from .ofdm import GaussianInput

__all__ = [
    "RegionPoint",
    "run_sweep",
    "region_points_to_csv",
    "emit_distribution_snapshot",
    "parse_snapshot",
    "realization_seed",
]

CSV_HEADER = "family,c_min,s_max,zdc_mean,zdc_std,feasible_frac,seed"


@dataclass
class RegionPoint:
    family: str
    c_min: float
    s_max: float
    zdc_mean: float
    zdc_std: float
    feasible_frac: float
    seed: int
    zdc_values: list = field(default_factory=list)
    results: list = field(default_factory=list)


def realization_seed(base_seed: int, realization: int) -> np.random.SeedSequence:
    """Channel seed of one realization: identical across points and families."""
    return np.random.SeedSequence([int(base_seed), int(realization)])


def _better(a: DesignResult | None, b: DesignResult) -> DesignResult:
    if a is None:
        return b
    if a.feasible != b.feasible:
        return a if a.feasible else b
    return a if a.achieved_zdc >= b.achieved_zdc else b


def _run_cell(spec: SweepSpec, cons: Constraints, realization: int) -> dict:
    """All requested families at one (constraint point, realization)."""
    pchan, cchan = generate_channels(
        spec.channel, spec.ofdm, realization_seed(spec.seed, realization)
    )
    out: dict[str, DesignResult] = {}
    if "Coexist" in spec.families:
        out["Coexist"] = baseline("coexist", spec.ofdm, pchan, cchan, cons, spec.solver)
    carry: DesignResult | None = None
    for family, kind in (("CSCG", "cscg"), ("Symmetric", "symmetric"), ("OPT", None)):
        needed = family in spec.families
        downstream = family == "CSCG" and ("Symmetric" in spec.families or "OPT" in spec.families)
        downstream |= family == "Symmetric" and "OPT" in spec.families
        if not (needed or downstream):
            continue
        if kind is None:
            res = optimize(spec.ofdm, pchan, cchan, cons, spec.solver)
            if "Coexist" in out:
                res = _better(res, out["Coexist"])
        else:
            res = baseline(kind, spec.ofdm, pchan, cchan, cons, spec.solver)
        res = _better(res, carry) if carry is not None else res
        carry = res
        if needed:
            out[family] = res
    return out


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[RegionPoint]:
    """Evaluate the whole grid; rows ordered by (family, c_min, s_max)."""
    points = list(spec.constraint_points())
    tasks = [(pi, r) for pi in range(len(points)) for r in range(spec.realizations)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                (pi, r): pool.submit(_run_cell, spec, points[pi], r) for pi, r in tasks
            }
            cells = {key: fut.result() for key, fut in futures.items()}
    else:
        cells = {(pi, r): _run_cell(spec, points[pi], r) for pi, r in tasks}

    rows = []
    for family in spec.families:
        for pi, cons in enumerate(points):
            results = [cells[(pi, r)][family] for r in range(spec.realizations)]
            zdc = np.array([res.achieved_zdc for res in results])
            feas = np.array([res.feasible for res in results])
            if feas.any():
                mean = float(zdc[feas].mean())
                std = float(zdc[feas].std())
            else:
                mean, std = 0.0, 0.0
            rows.append(
                RegionPoint(
                    family=family,
                    c_min=cons.c_min,
                    s_max=cons.s_max,
                    zdc_mean=mean,
                    zdc_std=std,
                    feasible_frac=float(feas.mean()),
                    seed=spec.seed,
                    zdc_values=[float(z) for z in zdc],
                    results=results,
                )
            )
    return rows


def region_points_to_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(
            f"{row.family},{row.c_min!r},{row.s_max!r},{row.zdc_mean!r},"
            f"{row.zdc_std!r},{row.feasible_frac!r},{row.seed}\n"
        )
    return buf.getvalue()


def emit_distribution_snapshot(result: DesignResult) -> str:
    """Per-subcarrier input records for external ellipse plotting.

    Columns: subcarrier index, mean (real/imag), variance (real/imag).  An
    infeasible result yields only the header.
    """
    lines = ["k,mu_re,mu_im,var_re,var_im"]
    if result.feasible:
        inp = result.input
        k = inp.k
        for i in range(k):
            vals = (inp.mu[i], inp.mu[i + k], inp.sigma[i], inp.sigma[i + k])
            lines.append(f"{i}," + ",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> GaussianInput:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "k,mu_re,mu_im,var_re,var_im":
        raise ValueError("not a distribution snapshot")
    body = lines[1:]
    k = len(body)
    mu = np.zeros(2 * k)
    sigma = np.zeros(2 * k)
    for ln in body:
        idx, mu_re, mu_im, var_re, var_im = ln.split(",")
        i = int(idx)
        mu[i], mu[i + k] = float(mu_re), float(mu_im)
        sigma[i], sigma[i + k] = float(var_re), float(var_im)
    return GaussianInput(mu=mu, sigma=sigma)

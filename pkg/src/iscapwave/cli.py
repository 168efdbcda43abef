"""Batch command line: region sweeps, moment validation, snapshot emission.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channels import channels_from_json, channels_to_json, generate_channels
from .config import ConfigError, load_config
from .design import Constraints, baseline, optimize
from .ofdm import GaussianInput
from .oracle import McRunConfig, render_report, validate_instance
from .powering import RectennaModel
from .sweep import (
    emit_distribution_snapshot,
    realization_seed,
    region_points_to_csv,
    run_sweep,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iscapwave",
        description="Design and validate multi-purpose OFDM input distributions",
    )
    parser.add_argument("--verbose", action="store_true", help="log dB conversions etc.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a constraint-region sweep, write CSV")
    sweep.add_argument("--config", required=True, help="TOML configuration file")
    sweep.add_argument("--seed", type=int, default=None, help="override the sweep seed")
    sweep.add_argument("--threads", type=int, default=1, help="worker threads")
    sweep.add_argument("--out", default=None, help="output CSV path")
    sweep.add_argument(
        "--dump-channels", default=None, metavar="DIR",
        help="write one JSON per channel realization for bit-exact reruns",
    )

    val = sub.add_parser("validate", help="Monte-Carlo validation of the closed forms")
    val.add_argument("--config", required=True)
    val.add_argument("--seed", type=int, default=None)
    val.add_argument("--out", default=None, help="write the full report here")
    val.add_argument(
        "--inject-k4-error", type=float, default=0.0, metavar="FRAC",
        help="self-test: corrupt the quartic diode weight by this fraction",
    )

    snap = sub.add_parser("snapshot", help="emit one design's per-subcarrier distribution")
    snap.add_argument("--config", required=True)
    snap.add_argument("--seed", type=int, default=None)
    snap.add_argument("--out", required=True)
    return parser


def _cmd_sweep(args) -> int:
    specs = load_config(args.config)
    spec = specs["sweep"]
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out_path = Path(args.out or spec.output)

    if args.dump_channels:
        dump_dir = Path(args.dump_channels)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for r in range(spec.realizations):
            pchan, cchan = generate_channels(
                spec.channel, spec.ofdm, realization_seed(spec.seed, r)
            )
            (dump_dir / f"channels_r{r}.json").write_text(
                channels_to_json(pchan, cchan, spec.ofdm.k)
            )

    rows = run_sweep(spec, threads=max(1, args.threads))
    out_path.write_text(region_points_to_csv(rows))
    print(f"wrote {len(rows)} region points to {out_path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    specs = load_config(args.config)
    vspec = specs["validate"]
    if args.seed is not None:
        vspec = replace(vspec, seed=args.seed)
    rect_true = RectennaModel()
    rect = rect_true
    if args.inject_k4_error:
        # corrupt only the closed form under test; the estimator stays honest
        rect = RectennaModel(k2=rect.k2, k4=rect.k4 * (1.0 + args.inject_k4_error))
        print(f"self-test: quartic weight corrupted by {args.inject_k4_error:+.1%}")

    rng = np.random.default_rng(vspec.seed)
    chunks = []
    all_ok = True
    frac_sum = 0.0
    for inst in range(vspec.instances):
        cfg = vspec.ofdm
        taps = (rng.standard_normal(vspec.tap_count) + 1j * rng.standard_normal(vspec.tap_count))
        taps = taps / np.sqrt(2.0)
        from .channels import PoweringChannel

        pchan = PoweringChannel.from_taps(taps, cfg.k, noise_var=0.05 if vspec.include_noise else 0.0)
        inp = GaussianInput(
            mu=rng.normal(size=2 * cfg.k) * 0.8,
            sigma=rng.uniform(0.05, 1.0, size=2 * cfg.k),
        )
        mc = McRunConfig(
            frame_count=vspec.frames,
            seed=int(rng.integers(2**63)),
            include_noise=vspec.include_noise,
        )
        report = validate_instance(inp, pchan, cfg, rect, mc, rect_empirical=rect_true)
        ok = report.ok()
        all_ok &= ok
        frac_sum += report.pass_fraction()
        chunks.append(f"--- instance {inst} ({'PASS' if ok else 'FAIL'}) ---")
        chunks.append(render_report(report))
    text = "\n".join(chunks)
    summary = (
        f"\ninstances: {vspec.instances}, mean cell pass rate: "
        f"{frac_sum / vspec.instances:.1%}, overall: {'PASS' if all_ok else 'FAIL'}"
    )
    text += summary
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if all_ok else EXIT_VALIDATION


def _cmd_snapshot(args) -> int:
    specs = load_config(args.config)
    spec = specs["sweep"]
    snap = specs["snapshot"]
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)

    if snap.channel_file:
        pchan, cchan, k = channels_from_json(Path(snap.channel_file).read_text())
        if k != spec.ofdm.k:
            raise ConfigError(f"channel file is for K={k}, config has K={spec.ofdm.k}")
    else:
        pchan, cchan = generate_channels(
            spec.channel, spec.ofdm, realization_seed(spec.seed, snap.realization)
        )
    cons = Constraints(p_max=spec.p_max, c_min=snap.c_min, s_max=snap.s_max)
    family = snap.family
    if family == "OPT":
        result = optimize(spec.ofdm, pchan, cchan, cons, spec.solver)
    else:
        result = baseline(family.lower(), spec.ofdm, pchan, cchan, cons, spec.solver)
    Path(args.out).write_text(emit_distribution_snapshot(result))
    status = "feasible" if result.feasible else "infeasible"
    print(f"{family} design at (c_min={snap.c_min}, s_max={snap.s_max}): {status}")
    print(f"wrote snapshot to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "snapshot":
            return _cmd_snapshot(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

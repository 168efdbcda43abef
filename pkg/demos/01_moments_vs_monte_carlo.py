"""Closed-form harvested-power moments versus brute-force simulation.

Builds a small CP-OFDM system with a random 2-tap powering channel and an
asymmetric Gaussian input, then compares every per-sub-pulse second/fourth
moment (integer- and half-sample branches) against Monte-Carlo estimates.
Finally it measures the bias of the truncated half-sample tap convention
against direct fractional-delay interpolation.
"""

import numpy as np

from iscapwave import (
    GaussianInput,
    McRunConfig,
    OFDMConfig,
    PoweringChannel,
    RectennaModel,
    validate_instance,
)
from iscapwave.oracle import measure_truncation_bias, render_report

rng = np.random.default_rng(42)

cfg = OFDMConfig(k=4, k_g=2, m=2)
taps = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
pchan = PoweringChannel.from_taps(taps, cfg.k, noise_var=0.05)
inp = GaussianInput(
    mu=rng.normal(size=2 * cfg.k) * 0.8,
    sigma=rng.uniform(0.05, 1.0, size=2 * cfg.k),
)

print("taps:", np.round(taps, 3))
print("half-sample taps (truncated):", np.round(pchan.half_taps, 3))
print()

mc = McRunConfig(frame_count=400_000, seed=7, include_noise=True)
report = validate_instance(inp, pchan, cfg, RectennaModel(), mc)
print(render_report(report))
print()

print("half-sample truncation bias (fourth moments, no noise):")
bias = measure_truncation_bias(inp, pchan, cfg, McRunConfig(frame_count=100_000, seed=8), window=32)
for n in range(cfg.k_prime):
    dur = "CP  " if n < cfg.k_g else "data"
    print(
        f"  n={n} ({dur}): truncated={bias['fourth_truncated'][n]:.4f} "
        f"direct={bias['fourth_direct'][n]:.4f} rel gap={bias['rel_gap'][n]:.1%}"
    )
print("\nThe closed forms adopt the truncated convention; the gap above is the")
print("price of that approximation, measured rather than hidden.")

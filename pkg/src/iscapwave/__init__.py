"""Input-distribution design for CP-OFDM waveforms that simultaneously
transfer power, sense a target and carry data.

The package models per-subcarrier asymmetric complex Gaussian symbols and
exposes closed-form metrics for the harvested DC power (including the cyclic
prefix's cross-symbol contributions), the achievable rate and a sidelobe
bound on range-velocity estimation, plus a consensus-ADMM designer of the
symbol means/variances and a Monte-Carlo oracle validating every closed-form
moment.
"""

from .channels import (
    ChannelGenConfig,
    CommChannel,
    PoweringChannel,
    carrier_gains,
    freq_response,
    generate_channels,
    half_sample_taps,
)
from .design import (
    ADMMState,
    Constraints,
    DesignResult,
    InfeasibleError,
    RandomizationError,
    SolverConfig,
    baseline,
    coexist_input,
    gaussian_randomization,
    optimize,
)
from .ofdm import (
    GaussianInput,
    OFDMConfig,
    PowerAllocationPair,
    add_cyclic_prefix,
    dft,
    idft,
    pack_composite,
    sample_symbols,
    unpack_composite,
)
from .oracle import McRunConfig, empirical_zdc, simulate_received, validate_instance
from .powering import (
    PoweringCoefficients,
    RectennaModel,
    build_powering_coefficients,
    zdc_cp_fourth,
    zdc_cp_second,
    zdc_data_fourth,
    zdc_data_second,
    zdc_total,
)
from .rate import achievable_rate, waterfill_max_rate, waterfill_min_power
from .sensing import SensingGrid, normalized_ub, ub_fap, ub_fap_matrix
from .sweep import RegionPoint, emit_distribution_snapshot, parse_snapshot, run_sweep

__version__ = "0.1.0"

"""Coefficient assembly and closed-form moment evaluation."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from iscapwave.channels import PoweringChannel
from iscapwave.ofdm import GaussianInput, OFDMConfig
from iscapwave.powering import (
    RectennaModel,
    build_powering_coefficients,
    zdc_cp_fourth,
    zdc_cp_second,
    zdc_data_fourth,
    zdc_data_second,
    zdc_per_subpulse,
    zdc_total,
)


def _random_instance(seed, k=4, k_g=2, taps=2, noise=0.0):
    rng = np.random.default_rng(seed)
    cfg = OFDMConfig(k=k, k_g=k_g, m=2)
    a = rng.normal(size=taps) + 1j * rng.normal(size=taps)
    pchan = PoweringChannel.from_taps(a, k, noise_var=noise)
    mu = rng.normal(size=2 * k)
    sigma = rng.uniform(0.05, 1.0, size=2 * k)
    return cfg, pchan, GaussianInput(mu=mu, sigma=sigma)


def test_rectenna_defaults():
    rect = RectennaModel()
    assert rect.k2 == 0.024 and rect.k4 == 19.145
    with pytest.raises(ValueError):
        RectennaModel(k2=0.0)


def test_flat_unit_channel_trace():
    cfg = OFDMConfig(k=8, k_g=4)
    pchan = PoweringChannel.from_taps(np.array([1.0]), 8, noise_var=0.0)
    coeffs = build_powering_coefficients(pchan, cfg)
    for a in coeffs.a:
        assert_allclose(np.trace(a), 2 * cfg.k, rtol=1e-12)


def test_coefficients_psd_random_channels():
    cfg = OFDMConfig(k=4, k_g=2)
    for seed in range(100):
        _, pchan, _ = _random_instance(seed)
        coeffs = build_powering_coefficients(pchan, cfg)
        for mats in (coeffs.a, coeffs.a_half):
            for m in mats:
                assert np.linalg.eigvalsh(m).min() >= -1e-9 * max(1.0, np.abs(m).max())
        for sets in (coeffs.cp, coeffs.cp_half):
            for s in sets:
                e = s.e
                assert np.linalg.eigvalsh(0.5 * (e + e.T)).min() >= -1e-9 * max(
                    1.0, np.abs(e).max()
                )


def test_coefficients_rank_at_most_two():
    cfg, pchan, _ = _random_instance(3)
    coeffs = build_powering_coefficients(pchan, cfg)
    for m in coeffs.a + coeffs.a_half:
        assert np.linalg.matrix_rank(m, tol=1e-9) <= 2


def test_single_tap_has_no_intersymbol_window():
    cfg = OFDMConfig(k=4, k_g=2)
    pchan = PoweringChannel.from_taps(np.array([0.7 + 0.2j]), 4, noise_var=0.0)
    coeffs = build_powering_coefficients(pchan, cfg)
    for s in coeffs.cp:
        assert_allclose(s.b2, 0.0, atol=1e-15)
        assert_allclose(s.d, 0.0, atol=1e-15)


def test_delay_spread_beyond_cp_rejected():
    cfg = OFDMConfig(k=8, k_g=2)
    pchan = PoweringChannel.from_taps(np.ones(3), 8, noise_var=0.0)
    with pytest.raises(ValueError):
        build_powering_coefficients(pchan, cfg)


def test_zero_input_zero_noise():
    cfg, pchan, _ = _random_instance(0)
    coeffs = build_powering_coefficients(pchan, cfg)
    z = np.zeros((8, 8))
    assert_allclose(zdc_data_second(coeffs, z), 0.0, atol=1e-15)
    assert_allclose(zdc_data_fourth(coeffs, z, z), 0.0, atol=1e-15)
    assert_allclose(zdc_cp_second(coeffs, z, z), 0.0, atol=1e-15)
    assert_allclose(zdc_cp_fourth(coeffs, z, z), 0.0, atol=1e-15)


def test_noise_only_moments():
    s = 0.37
    cfg, pchan, _ = _random_instance(1, noise=s)
    coeffs = build_powering_coefficients(pchan, cfg)
    z = np.zeros((8, 8))
    assert_allclose(zdc_data_second(coeffs, z), s, rtol=1e-12)
    assert_allclose(zdc_data_fourth(coeffs, z, z), 3 * s * s, rtol=1e-12)
    assert_allclose(zdc_cp_second(coeffs, z, z), s, rtol=1e-12)
    assert_allclose(zdc_cp_fourth(coeffs, z, z), 3 * s * s, rtol=1e-12)


def test_cscg_substitution_matches_u_zero():
    cfg, pchan, inp = _random_instance(2)
    coeffs = build_powering_coefficients(pchan, cfg)
    p = np.diag(inp.sigma + inp.mu**2)
    u0 = np.zeros_like(p)
    # with U = 0 the CP fourth moment must reduce to the pure-P trace terms
    expected = []
    for s in coeffs.cp:
        t = np.trace(s.b @ p)
        expected.append(
            t * t
            + 2 * np.trace(s.b1 @ p @ s.b1 @ p + s.b2 @ p @ s.b2 @ p)
            + 4 * np.trace(s.d @ p @ s.d.T @ p)
        )
    assert_allclose(zdc_cp_fourth(coeffs, p, u0), expected, rtol=1e-12)


def test_single_tap_cp_moments_match_shifted_data_moments():
    # with one tap the CP sample duplicates a data sub-pulse exactly
    cfg = OFDMConfig(k=4, k_g=2, m=2)
    rng = np.random.default_rng(5)
    pchan = PoweringChannel.from_taps(
        np.array([rng.normal() + 1j * rng.normal()]), 4, noise_var=0.0
    )
    coeffs = build_powering_coefficients(pchan, cfg)
    inp = GaussianInput(mu=rng.normal(size=8), sigma=rng.uniform(0.1, 1, size=8))
    alloc = inp.allocation()
    cp2 = zdc_cp_second(coeffs, alloc.p, alloc.u)
    cp4 = zdc_cp_fourth(coeffs, alloc.p, alloc.u)
    d2 = zdc_data_second(coeffs, alloc.p)
    d4 = zdc_data_fourth(coeffs, alloc.p, alloc.u)
    for n in range(cfg.k_g):
        # CP sample n copies data sub-pulse n + K (data array index n + K - K_G)
        assert_allclose(cp2[n], d2[n + cfg.k - cfg.k_g], rtol=1e-12)
        assert_allclose(cp4[n], d4[n + cfg.k - cfg.k_g], rtol=1e-12)


def test_total_decomposition_identity():
    cfg, pchan, inp = _random_instance(6, noise=0.01)
    coeffs = build_powering_coefficients(pchan, cfg)
    rect = RectennaModel()
    alloc = inp.allocation()
    parts = zdc_per_subpulse(coeffs, rect, alloc.p, alloc.u)
    assert parts.shape == (cfg.k_prime,)
    assert_allclose(zdc_total(coeffs, rect, alloc.p, alloc.u), parts.sum(), rtol=1e-14)


def test_zdc_independent_of_m():
    rng = np.random.default_rng(7)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    inp = GaussianInput(mu=rng.normal(size=8), sigma=rng.uniform(0, 1, size=8))
    rect = RectennaModel()
    vals = []
    for m in (1, 2, 8):
        cfg = OFDMConfig(k=4, k_g=2, m=m)
        pchan = PoweringChannel.from_taps(a, 4, noise_var=0.0)
        coeffs = build_powering_coefficients(pchan, cfg)
        alloc = inp.allocation()
        vals.append(zdc_total(coeffs, rect, alloc.p, alloc.u))
    assert_allclose(vals, vals[0], rtol=1e-14)


def test_shape_mismatch_raises():
    cfg, pchan, _ = _random_instance(8)
    coeffs = build_powering_coefficients(pchan, cfg)
    with pytest.raises(ValueError):
        zdc_data_second(coeffs, np.zeros((4, 4)))

"""Frame arithmetic, composite packing and symbol sampling."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from iscapwave.ofdm import (
    GaussianInput,
    OFDMConfig,
    add_cyclic_prefix,
    dft,
    idft,
    idft_row,
    pack_composite,
    sample_symbols,
    unpack_composite,
)


def test_config_validation():
    OFDMConfig(k=8, k_g=4, m=2)
    with pytest.raises(ValueError):
        OFDMConfig(k=0, k_g=1)
    with pytest.raises(ValueError):
        OFDMConfig(k=4, k_g=5)
    with pytest.raises(ValueError):
        OFDMConfig(k=4, k_g=0)
    assert OFDMConfig(k=8, k_g=4).k_prime == 12


def test_dft_idft_roundtrip():
    rng = np.random.default_rng(0)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert_allclose(dft(idft(v)), v, atol=1e-12)
    assert_allclose(idft(dft(v)), v, atol=1e-12)


def test_idft_of_delta_is_all_ones():
    e0 = np.zeros(8)
    e0[0] = 1.0
    assert_allclose(idft(e0), np.ones(8), atol=1e-12)


def test_f0_row_is_all_ones():
    assert_allclose(idft_row(0, 8), np.ones(8), atol=1e-15)


def test_idft_matches_row_definition():
    rng = np.random.default_rng(1)
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    expected = np.array([idft_row(n, 6) @ v for n in range(6)])
    assert_allclose(idft(v), expected, atol=1e-12)


def test_add_cyclic_prefix_values():
    cfg = OFDMConfig(k=4, k_g=2)
    x = np.array([0.0, 1.0, 2.0, 3.0])
    assert_allclose(add_cyclic_prefix(x, cfg), [2, 3, 0, 1, 2, 3])


def test_cp_index_kg_is_first_sample():
    cfg = OFDMConfig(k=8, k_g=3)
    x = np.arange(8.0)
    out = add_cyclic_prefix(x, cfg)
    assert out[cfg.k_g] == x[0]


def test_cp_full_repeat():
    cfg = OFDMConfig(k=4, k_g=4)
    x = np.arange(4.0)
    assert_allclose(add_cyclic_prefix(x, cfg), np.concatenate([x, x]))


def test_cp_roundtrip():
    cfg = OFDMConfig(k=8, k_g=5)
    rng = np.random.default_rng(2)
    x = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert_allclose(add_cyclic_prefix(x, cfg)[cfg.k_g :], x)


def test_composite_pack_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.normal(size=5) + 1j * rng.normal(size=5)
        assert_allclose(unpack_composite(pack_composite(x)), x)


def test_gaussian_input_power_identity():
    rng = np.random.default_rng(4)
    for _ in range(10):
        mu = rng.normal(size=8)
        sigma = rng.uniform(0, 2, size=8)
        inp = GaussianInput(mu=mu, sigma=sigma)
        assert_allclose(inp.power, mu**2 + sigma)


def test_gaussian_input_rejects_negative_variance():
    with pytest.raises(ValueError):
        GaussianInput(mu=np.zeros(4), sigma=np.array([0.1, -0.1, 0, 0]))


def test_allocation_consensus_structure():
    rng = np.random.default_rng(5)
    inp = GaussianInput(mu=rng.normal(size=8), sigma=rng.uniform(0, 1, size=8))
    pair = inp.allocation()
    pair.validate()
    gap = pair.p - pair.u
    assert_allclose(gap, np.diag(np.diag(gap)))
    assert np.all(np.diag(gap) >= 0)


def test_sampling_degenerate_sigma_zero():
    cfg = OFDMConfig(k=4, k_g=2, m=3)
    mu = np.arange(8.0)
    inp = GaussianInput(mu=mu, sigma=np.zeros(8))
    x = sample_symbols(inp, cfg, seed=0)
    assert x.shape == (3, 4)
    expected = mu[:4] + 1j * mu[4:]
    assert_allclose(x, np.broadcast_to(expected, (3, 4)))


def test_sampling_statistics():
    cfg = OFDMConfig(k=2, k_g=1, m=1)
    mu = np.array([0.5, -1.0, 2.0, 0.0])
    sigma = np.array([0.8, 1.5, 0.3, 2.0])
    inp = GaussianInput(mu=mu, sigma=sigma)
    x = sample_symbols(inp, cfg, seed=11, count=1_000_000)
    comp = np.concatenate([x.real, x.imag], axis=-1)
    # law-of-large-numbers bound: 4 sigma / sqrt(N)
    tol = 4.0 * np.sqrt(sigma) / 1e3
    assert np.all(np.abs(comp.mean(axis=0) - mu) <= tol + 1e-12)
    assert np.all(np.abs(comp.var(axis=0) / sigma - 1.0) < 0.01)


def test_sampling_deterministic_per_seed():
    cfg = OFDMConfig(k=4, k_g=2, m=2)
    inp = GaussianInput(mu=np.ones(8), sigma=np.ones(8))
    a = sample_symbols(inp, cfg, seed=42)
    b = sample_symbols(inp, cfg, seed=42)
    assert_allclose(a, b)

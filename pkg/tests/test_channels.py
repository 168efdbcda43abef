"""Multipath channel construction, responses and serialization."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from iscapwave.channels import (
    ChannelGenConfig,
    PoweringChannel,
    carrier_gains,
    channels_from_json,
    channels_to_json,
    db_to_linear,
    freq_response,
    generate_channels,
    half_sample_taps,
)
from iscapwave.ofdm import OFDMConfig


def test_half_taps_single_unit_tap():
    assert_allclose(half_sample_taps(np.array([1.0])), [2.0 / np.pi], atol=1e-12)


def test_half_taps_two_unit_taps():
    out = half_sample_taps(np.array([1.0, 1.0]))
    # at_0 = sinc(1/2) + sinc(-1/2) = 4/pi
    assert_allclose(out[0], 4.0 / np.pi, atol=1e-12)
    assert_allclose(out[1], np.sinc(1.5) + np.sinc(0.5), atol=1e-12)


def test_half_taps_zero():
    assert_allclose(half_sample_taps(np.zeros(3)), np.zeros(3))


def test_freq_response_flat_for_delta():
    h = freq_response(np.array([1.0]), 8)
    assert_allclose(h, np.ones(8), atol=1e-12)


def test_freq_response_shift_linear_phase():
    h = freq_response(np.array([0.0, 1.0]), 8)
    assert_allclose(np.abs(h), np.ones(8), atol=1e-12)
    assert_allclose(h, np.exp(2j * np.pi * np.arange(8) / 8), atol=1e-12)


def test_freq_response_parseval():
    rng = np.random.default_rng(0)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    h = freq_response(a, 16)
    assert_allclose(np.sum(np.abs(h) ** 2), 16 * np.sum(np.abs(a) ** 2), rtol=1e-12)


def test_freq_response_rejects_too_many_taps():
    with pytest.raises(ValueError):
        freq_response(np.ones(9), 8)


def test_carrier_gains_are_index_reversed_response():
    rng = np.random.default_rng(1)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    h = freq_response(a, 8)
    g = carrier_gains(a, 8)
    assert_allclose(g, h[(-np.arange(8)) % 8], atol=1e-12)


def test_half_tap_response_consistency():
    rng = np.random.default_rng(2)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    chan = PoweringChannel.from_taps(a, 8, noise_var=0.0)
    assert_allclose(chan.h_p_half, freq_response(half_sample_taps(a), 8), atol=1e-13)


def test_generation_deterministic():
    cfg = ChannelGenConfig(tap_count=3)
    ofdm = OFDMConfig(k=8, k_g=4)
    p1, c1 = generate_channels(cfg, ofdm, seed=7)
    p2, c2 = generate_channels(cfg, ofdm, seed=7)
    assert_allclose(p1.taps, p2.taps)
    assert_allclose(c1.h_c, c2.h_c)
    p3, _ = generate_channels(cfg, ofdm, seed=8)
    assert not np.allclose(p1.taps, p3.taps)


def test_generation_path_loss_scale():
    cfg = ChannelGenConfig(tap_count=3, powering_path_loss_db=20.0)
    ofdm = OFDMConfig(k=8, k_g=4)
    total = 0.0
    n = 10_000
    for s in range(n):
        p, _ = generate_channels(cfg, ofdm, seed=s)
        total += np.sum(np.abs(p.taps) ** 2)
    gain = total / n
    assert abs(gain / db_to_linear(-20.0) - 1.0) < 0.05


def test_single_tap_rayleigh_magnitude():
    cfg = ChannelGenConfig(tap_count=1, powering_path_loss_db=0.0)
    ofdm = OFDMConfig(k=4, k_g=2)
    mags = np.array(
        [np.abs(generate_channels(cfg, ofdm, seed=s)[0].taps[0]) for s in range(4000)]
    )
    assert abs(np.mean(mags**2) - 1.0) < 0.05
    # empirical CDF against Rayleigh(scale=1/sqrt(2)) at a few quantiles
    for q in (0.25, 0.5, 0.75):
        x = np.quantile(mags, q)
        cdf = 1.0 - np.exp(-(x**2))
        assert abs(cdf - q) < 0.03


def test_comm_snr_normalization():
    ofdm = OFDMConfig(k=8, k_g=4, bandwidth_hz=30e6)
    cfg = ChannelGenConfig(comm_snr_target_db=0.0)
    _, cchan = generate_channels(cfg, ofdm, seed=3)
    noise_total = cchan.noise_psd * ofdm.bandwidth_hz
    snr = np.mean(np.abs(cchan.h_c) ** 2) * 2 * ofdm.k / (2 * ofdm.k) / noise_total
    assert_allclose(snr, 1.0, rtol=1e-9)


def test_channel_json_roundtrip_bit_exact():
    cfg = ChannelGenConfig()
    ofdm = OFDMConfig(k=8, k_g=4)
    pchan, cchan = generate_channels(cfg, ofdm, seed=5)
    text = channels_to_json(pchan, cchan, ofdm.k)
    p2, c2, k = channels_from_json(text)
    assert k == 8
    assert np.array_equal(pchan.taps, p2.taps)
    assert np.array_equal(cchan.h_c, c2.h_c)
    assert pchan.noise_var == p2.noise_var
    assert cchan.noise_psd == c2.noise_psd

#!/usr/bin/env python3
"""Tests for OFDM framing, cyclic prefix and noise scaling."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.channel import NoiseSpec, awgn
from src.errors import ConfigurationError, InputShapeError
from src.modem import Scheme, SymbolBlock, build_constellation, modulate
from src.ofdm import (OfdmConfig, TimeDomainBlock, frame, ofdm_demodulate, ofdm_modulate,
                      time_domain_noise_variance)


def test_default_geometry():
    cfg = OfdmConfig()
    assert cfg.fft_size == 256
    assert cfg.cp_length == 32
    assert cfg.block_length == 288


def test_cp_fraction_accepts_strings():
    assert OfdmConfig(64, "1/4").cp_length == 16


@pytest.mark.parametrize("fft_size, cp", [(100, Fraction(1, 8)), (1, Fraction(1, 8)),
                                          (256, Fraction(1, 3)), (8, Fraction(0))])
def test_invalid_geometry_rejected(fft_size, cp):
    with pytest.raises(ConfigurationError):
        OfdmConfig(fft_size, cp)


def test_roundtrip_with_batch_axes(rng):
    """Test that demodulation inverts modulation to 1e-10 across a batch"""
    cfg = OfdmConfig(64)
    c = build_constellation(Scheme.QAM64)
    bits = rng.integers(0, 2, 64 * 6 * 12).astype(np.uint8)
    symbols = frame(modulate(bits, c), cfg)
    assert symbols.symbols.shape == (12, 64)

    block = ofdm_modulate(symbols, cfg)
    assert block.samples.shape == (12, cfg.block_length)
    recovered = ofdm_demodulate(block, Scheme.QAM64)
    assert np.max(np.abs(recovered.symbols - symbols.symbols)) < 1e-10
    assert recovered.source_scheme is Scheme.QAM64


def test_cyclic_prefix_is_exact_tail_copy(rng):
    cfg = OfdmConfig(256)
    x = rng.standard_normal((3, 256)) + 1j * rng.standard_normal((3, 256))
    samples = ofdm_modulate(SymbolBlock(x), cfg).samples
    np.testing.assert_array_equal(samples[:, :cfg.cp_length], samples[:, -cfg.cp_length:])


def test_shape_errors():
    cfg = OfdmConfig(16)
    with pytest.raises(InputShapeError):
        ofdm_modulate(SymbolBlock(np.ones(15, dtype=complex)), cfg)
    with pytest.raises(InputShapeError):
        TimeDomainBlock(np.ones(16, dtype=complex), cfg)
    with pytest.raises(InputShapeError):
        frame(SymbolBlock(np.ones(20, dtype=complex)), cfg)


def test_time_domain_noise_gives_n0_per_subcarrier(rng):
    """Test that time-domain noise of N0/N leaves N0 on each subcarrier"""
    cfg = OfdmConfig(256)
    n0 = 0.2
    silent = np.zeros((2000, cfg.block_length), dtype=complex)
    noisy = awgn(silent, NoiseSpec(time_domain_noise_variance(n0, cfg)), rng)
    spectrum = ofdm_demodulate(TimeDomainBlock(noisy, cfg)).symbols
    assert np.mean(np.abs(spectrum) ** 2) == pytest.approx(n0, rel=0.02)


@pytest.mark.parametrize("fft_size", [64, 256, 1024])
def test_roundtrip_for_standard_sizes(fft_size, rng):
    cfg = OfdmConfig(fft_size)
    x = rng.standard_normal((4, fft_size)) + 1j * rng.standard_normal((4, fft_size))
    recovered = ofdm_demodulate(ofdm_modulate(SymbolBlock(x), cfg)).symbols
    assert np.max(np.abs(recovered - x)) < 1e-10


def test_single_subcarrier_impulse_is_flat():
    """Test that energy on subcarrier 0 alone gives the constant 1/N in time"""
    cfg = OfdmConfig(64)
    x = np.zeros(64, dtype=complex)
    x[0] = 1.0
    samples = ofdm_modulate(SymbolBlock(x), cfg).samples
    np.testing.assert_allclose(samples, np.full(cfg.block_length, 1 / 64), atol=1e-15)


def test_body_energy_follows_parseval(rng):
    cfg = OfdmConfig(256)
    x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    body = ofdm_modulate(SymbolBlock(x), cfg).samples[cfg.cp_length:]
    assert np.sum(np.abs(body) ** 2) == pytest.approx(np.sum(np.abs(x) ** 2) / 256, rel=1e-12)


finite = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(a=finite, b=finite, seed=st.integers(0, 2 ** 32 - 1))
def test_modulation_is_linear(a, b, seed):
    cfg = OfdmConfig(32)
    gen = np.random.default_rng(seed)
    x = gen.standard_normal(32) + 1j * gen.standard_normal(32)
    y = gen.standard_normal(32) + 1j * gen.standard_normal(32)
    combined = ofdm_modulate(SymbolBlock(a * x + b * y), cfg).samples
    separate = (a * ofdm_modulate(SymbolBlock(x), cfg).samples
                + b * ofdm_modulate(SymbolBlock(y), cfg).samples)
    np.testing.assert_allclose(combined, separate, atol=1e-9)

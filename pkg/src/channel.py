"""
Flat block-fading and thermal-noise channel with Eb/N0 calibration.

Gains are indexed ``[tx_antenna][rx_antenna]`` so that, for the 2x2 link,
``h0 = gains[0, 0]``, ``h1 = gains[1, 0]``, ``h2 = gains[0, 1]`` and
``h3 = gains[1, 1]``. Any trailing axes of ``gains`` are batch axes (one
realization per OFDM symbol or per STBC block).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import ParameterError

Rate = Union[float, Fraction]


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.gains.shape[0]

    @property
    def n_rx(self) -> int:
        return self.gains.shape[1]

    @property
    def h0(self):
        return self.gains[0, 0]

    @property
    def h1(self):
        return self.gains[1, 0]

    @property
    def h2(self):
        return self.gains[0, 1]

    @property
    def h3(self):
        return self.gains[1, 1]

    @property
    def power(self) -> np.ndarray:
        """Sum of squared amplitudes over every tx/rx pair."""
        return np.sum(np.abs(self.gains) ** 2, axis=(0, 1))


@dataclass(frozen=True)
class NoiseSpec:
    variance: float  # total per complex sample; variance / 2 per real dimension

    def __post_init__(self):
        if not self.variance >= 0:
            raise ParameterError(f"noise variance must be non-negative, got {self.variance}")


def ebno_to_noise_variance(ebno_db: float, bits_per_symbol: int, code_rate: Rate = 1) -> float:
    """N0 for unit-energy symbols: ``1 / (R * k * 10^(EbN0/10))``."""
    if bits_per_symbol < 1:
        raise ParameterError(f"bits_per_symbol must be >= 1, got {bits_per_symbol}")
    if not 0 < code_rate <= 1:
        raise ParameterError(f"code rate must lie in (0, 1], got {code_rate}")
    return 1.0 / (float(code_rate) * bits_per_symbol * 10.0 ** (ebno_db / 10.0))


def complex_gaussian(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def awgn(samples, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(samples, dtype=complex)
    if noise.variance == 0:
        return x.copy()
    return x + complex_gaussian(rng, x.shape, noise.variance)


def rayleigh_block(n_tx: int, n_rx: int, rng: np.random.Generator,
                   batch: Sequence[int] = ()) -> ChannelRealization:
    """Unit-power Rayleigh gains, held fixed over one block per batch entry."""
    _check_dims(n_tx, n_rx)
    return ChannelRealization(complex_gaussian(rng, (n_tx, n_rx, *batch)))


def unit_channel(n_tx: int, n_rx: int, batch: Sequence[int] = ()) -> ChannelRealization:
    """All gains exactly one: the unfaded (pure AWGN) link."""
    _check_dims(n_tx, n_rx)
    return ChannelRealization(np.ones((n_tx, n_rx, *batch), dtype=complex))


def _check_dims(n_tx: int, n_rx: int):
    if n_tx not in (1, 2) or n_rx not in (1, 2):
        raise ParameterError(f"only 1 or 2 antennas per side are modelled, got {n_tx}x{n_rx}")


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial, keyed by its indices."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))

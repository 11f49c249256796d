"""
Bit/symbol mapping for the four 802.16 modulation schemes.

Constellations are Gray labelled per axis and normalised to unit average
energy, so all Eb/N0 bookkeeping lives in :mod:`src.channel`. Point ``i`` of a
constellation carries label ``i`` (bits MSB first), which makes "lowest label
index" tie breaking fall out of ``argmin``.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import InputShapeError, ParameterError


class Scheme(Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    QAM16 = "QAM16"
    QAM64 = "QAM64"

    @property
    def bits_per_symbol(self) -> int:
        return _BITS_PER_SYMBOL[self]

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        """Accept ``QAM16``, ``16-QAM``, ``16qam`` and friends."""
        key = name.strip().upper().replace("-", "").replace("_", "")
        aliases = {"16QAM": "QAM16", "64QAM": "QAM64"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown modulation scheme: {name!r}") from None


_BITS_PER_SYMBOL = {Scheme.BPSK: 1, Scheme.QPSK: 2, Scheme.QAM16: 4, Scheme.QAM64: 6}


@dataclass(frozen=True, eq=False)
class Constellation:
    """A normalised, Gray-mapped modulation alphabet."""
    scheme: Scheme
    points: np.ndarray       # complex, index == label
    labels: np.ndarray       # (M, bits_per_symbol) uint8, MSB first
    bits_per_symbol: int

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SymbolBlock:
    symbols: np.ndarray
    source_scheme: Optional[Scheme] = None

    def __post_init__(self):
        if np.asarray(self.symbols).size == 0:
            raise InputShapeError("symbol block must not be empty")


def _gray_levels(bits_per_axis: int) -> np.ndarray:
    """Amplitude carried by each per-axis Gray label, label 0 on the positive edge."""
    m = 1 << bits_per_axis
    position = np.arange(m)
    gray = position ^ (position >> 1)
    levels = np.empty(m)
    levels[gray] = (m - 1) - 2 * position
    return levels


def _label_bits(m: int, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((np.arange(m)[:, None] >> shifts) & 1).astype(np.uint8)


@lru_cache(maxsize=None)
def build_constellation(scheme: Scheme) -> Constellation:
    k = scheme.bits_per_symbol
    m = 1 << k
    labels = np.arange(m)
    if scheme is Scheme.BPSK:
        points = _gray_levels(1)[labels].astype(complex)
    else:
        half = k // 2
        axis = _gray_levels(half)
        in_phase = axis[labels >> half]
        quadrature = axis[labels & ((1 << half) - 1)]
        points = in_phase + 1j * quadrature
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    points.setflags(write=False)
    bits = _label_bits(m, k)
    bits.setflags(write=False)
    return Constellation(scheme=scheme, points=points, labels=bits, bits_per_symbol=k)


def _bits_to_indices(bits: np.ndarray, k: int) -> np.ndarray:
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits.reshape(-1, k) @ weights


def modulate(bits, c: Constellation) -> SymbolBlock:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size == 0 or bits.size % c.bits_per_symbol:
        raise InputShapeError(
            f"{bits.size} bits is not a positive multiple of "
            f"{c.bits_per_symbol} bits per {c.scheme.value} symbol"
        )
    if np.any((bits < 0) | (bits > 1)):
        raise InputShapeError("bits must be 0 or 1")
    return SymbolBlock(c.points[_bits_to_indices(bits, c.bits_per_symbol)], c.scheme)


def nearest_indices(symbols, c: Constellation) -> np.ndarray:
    """Index of the Euclidean-nearest point for every received symbol."""
    y = np.asarray(symbols, dtype=complex)
    distances = np.abs(y[..., None] - c.points) ** 2
    return np.argmin(distances, axis=-1)


def indices_to_bits(indices, c: Constellation) -> np.ndarray:
    return c.labels[np.asarray(indices).ravel()].ravel()


def demodulate_hard(sb: SymbolBlock, c: Constellation) -> np.ndarray:
    return indices_to_bits(nearest_indices(sb.symbols, c), c)


def demodulate_soft(sb: SymbolBlock, c: Constellation, noise_variance: float,
                    channel_gain=1.0) -> np.ndarray:
    """
    Exact log-sum-exp bit LLRs, ``log P(b=0) / P(b=1)``.

    ``noise_variance`` is the total complex noise variance N0; ``channel_gain``
    is a real amplitude (scalar, or broadcastable against the symbols) applied
    to every constellation point.
    """
    if noise_variance <= 0:
        raise ParameterError(f"noise variance must be positive, got {noise_variance}")
    gain = np.asarray(channel_gain, dtype=float)
    if np.any(gain < 0):
        raise ParameterError("channel gain must be non-negative")

    y = np.asarray(sb.symbols, dtype=complex)
    scaled = np.broadcast_to(gain, y.shape)[..., None] * c.points
    metrics = -np.abs(y[..., None] - scaled) ** 2 / noise_variance
    metrics = metrics.reshape(-1, c.size)

    llrs = np.empty((metrics.shape[0], c.bits_per_symbol))
    for b in range(c.bits_per_symbol):
        zero = c.labels[:, b] == 0
        llrs[:, b] = (logsumexp(metrics[:, zero], axis=1)
                      - logsumexp(metrics[:, ~zero], axis=1))
    return llrs.ravel()


def hard_decisions(llrs) -> np.ndarray:
    """Bit decisions from LLRs; a zero LLR decides 0."""
    return (np.asarray(llrs) < 0).astype(np.uint8)

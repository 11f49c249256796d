"""
Two-branch Alamouti transmit diversity with two receive antennas.

All operations accept scalars or equally shaped arrays for ``s0``/``s1``;
channel gains broadcast against them, so a packet's worth of symbol pairs is
encoded, transmitted, combined and detected in one call.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, NoiseSpec, complex_gaussian
from .errors import DegenerateChannelError, ParameterError
from .modem import Constellation

# Each antenna radiates half the power so the pair spends what one antenna would.
TX_AMPLITUDE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class StbcBlock:
    tx: np.ndarray  # [time slot][antenna][...]

    @property
    def s0(self):
        return self.tx[0, 0]

    @property
    def s1(self):
        return self.tx[0, 1]


@dataclass(frozen=True)
class StbcReceived:
    r: np.ndarray  # r0..r3 stacked on the first axis


@dataclass(frozen=True)
class CombinedPair:
    s0: np.ndarray
    s1: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.gain) < 0):
            raise ParameterError("combining gain must be non-negative")


def stbc_encode(s0, s1) -> StbcBlock:
    s0 = np.asarray(s0, dtype=complex)
    s1 = np.asarray(s1, dtype=complex)
    return StbcBlock(np.array([[s0, s1], [-np.conj(s1), np.conj(s0)]]))


def stbc_transmit(block: StbcBlock, ch: ChannelRealization, noise: NoiseSpec,
                  rng: np.random.Generator) -> StbcReceived:
    if ch.gains.shape[:2] != (2, 2):
        raise ParameterError(f"Alamouti needs a 2x2 channel, got {ch.gains.shape[:2]}")
    (x00, x01), (x10, x11) = block.tx
    r = np.array([
        ch.h0 * x00 + ch.h1 * x01,
        ch.h0 * x10 + ch.h1 * x11,
        ch.h2 * x00 + ch.h3 * x01,
        ch.h2 * x10 + ch.h3 * x11,
    ])
    if noise.variance > 0:
        r = r + complex_gaussian(rng, r.shape, noise.variance)
    return StbcReceived(r)


def stbc_combine(rx: StbcReceived, ch: ChannelRealization) -> CombinedPair:
    r0, r1, r2, r3 = rx.r
    h0, h1, h2, h3 = ch.h0, ch.h1, ch.h2, ch.h3
    s0 = np.conj(h0) * r0 + h1 * np.conj(r1) + np.conj(h2) * r2 + h3 * np.conj(r3)
    s1 = np.conj(h1) * r0 - h0 * np.conj(r1) + np.conj(h3) * r2 - h2 * np.conj(r3)
    return CombinedPair(s0, s1, ch.power)


def ml_metric(combined, gain, c: Constellation) -> np.ndarray:
    """``(gain - 1)|s_i|^2 + |s~ - s_i|^2`` for every constellation point."""
    combined = np.asarray(combined, dtype=complex)[..., None]
    gain = np.asarray(gain, dtype=float)[..., None]
    energy = np.abs(c.points) ** 2
    return (gain - 1.0) * energy + np.abs(combined - c.points) ** 2


def ml_detect(pair: CombinedPair, c: Constellation):
    """Exhaustive minimum of the decision metric; ties go to the lowest index."""
    if np.any(np.asarray(pair.gain) <= 0):
        raise DegenerateChannelError("combining gain is zero; the block is erased")
    gain = np.broadcast_to(pair.gain, np.broadcast_shapes(np.shape(pair.s0), np.shape(pair.gain)))
    first = np.argmin(ml_metric(pair.s0, gain, c), axis=-1)
    second = np.argmin(ml_metric(pair.s1, gain, c), axis=-1)
    return first, second

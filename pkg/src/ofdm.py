"""
OFDM framing: inverse FFT onto orthogonal subcarriers plus a cyclic-prefix guard.

Arrays may carry leading batch axes; the last axis is always the subcarrier
(or time-sample) axis, so a whole packet of OFDM symbols is processed at once.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InputShapeError
from .modem import Scheme, SymbolBlock


@dataclass(frozen=True)
class OfdmConfig:
    fft_size: int = 256
    cp_fraction: Fraction = Fraction(1, 8)

    def __post_init__(self):
        object.__setattr__(self, "cp_fraction", Fraction(self.cp_fraction))
        self.validate()

    def problems(self) -> list:
        found = []
        n = self.fft_size
        if not isinstance(n, int) or n < 2 or n & (n - 1):
            found.append(f"fft_size must be a power of two >= 2, got {n!r}")
            return found
        cp = self.cp_fraction * n
        if cp.denominator != 1 or cp <= 0:
            found.append(f"cp_fraction * fft_size must be a positive integer, got {cp}")
        return found

    def validate(self) -> "OfdmConfig":
        problems = self.problems()
        if problems:
            raise ConfigurationError("; ".join(problems))
        return self

    @property
    def cp_length(self) -> int:
        return int(self.cp_fraction * self.fft_size)

    @property
    def block_length(self) -> int:
        return self.fft_size + self.cp_length


@dataclass(frozen=True)
class TimeDomainBlock:
    samples: np.ndarray
    config: OfdmConfig

    def __post_init__(self):
        length = np.shape(self.samples)[-1] if np.ndim(self.samples) else 0
        if length != self.config.block_length:
            raise InputShapeError(
                f"time block has {length} samples, expected {self.config.block_length}"
            )


def ofdm_modulate(symbols: SymbolBlock, cfg: OfdmConfig) -> TimeDomainBlock:
    x = np.asarray(symbols.symbols, dtype=complex)
    if x.shape[-1] != cfg.fft_size:
        raise InputShapeError(
            f"{x.shape[-1]} subcarrier symbols do not fill an FFT of size {cfg.fft_size}"
        )
    body = np.fft.ifft(x, axis=-1)
    samples = np.concatenate([body[..., -cfg.cp_length:], body], axis=-1)
    return TimeDomainBlock(samples, cfg)


def ofdm_demodulate(block: TimeDomainBlock, scheme: Optional[Scheme] = None) -> SymbolBlock:
    cfg = block.config
    body = np.asarray(block.samples)[..., cfg.cp_length:]
    return SymbolBlock(np.fft.fft(body, axis=-1), scheme)


def frame(symbols: SymbolBlock, cfg: OfdmConfig) -> SymbolBlock:
    """Fold a flat symbol stream into rows of ``fft_size`` subcarriers."""
    x = np.asarray(symbols.symbols).ravel()
    if x.size % cfg.fft_size:
        raise InputShapeError(f"{x.size} symbols do not fill whole OFDM symbols")
    return SymbolBlock(x.reshape(-1, cfg.fft_size), symbols.source_scheme)


def time_domain_noise_variance(n0: float, cfg: OfdmConfig) -> float:
    """Per-sample variance that leaves N0 on every subcarrier after the forward FFT."""
    return n0 / cfg.fft_size

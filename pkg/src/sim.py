"""
Monte Carlo harness: chain assembly, the AMC feedback loop and Eb/N0 sweeps.

Chains
------
baseline  modulate -> IFFT + guard -> channel -> guard removal + FFT -> hard demap
stbc      modulate -> IFFT + guard -> Alamouti 2x2 -> combine -> guard removal + FFT -> ML
turbo     turbo encode -> modulate -> IFFT + guard -> channel -> ... -> soft demap -> decode

Each (chain, point, packet) draws from its own seeded stream, so the sweep is a
pure function of :class:`SimConfig` whatever the worker count.
"""

import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .amc import initial_state, steady_state_scheme, update
from .channel import (NoiseSpec, awgn, ebno_to_noise_variance, rayleigh_block,
                      trial_rng, unit_channel)
from .config import Chain, ChannelKind, SeedMode, SimConfig
from .errors import SimulationError
from .modem import (Scheme, SymbolBlock, build_constellation, demodulate_hard,
                    demodulate_soft, indices_to_bits, modulate)
from .ofdm import (TimeDomainBlock, frame, ofdm_demodulate, ofdm_modulate,
                   time_domain_noise_variance)
from .stbc import TX_AMPLITUDE, CombinedPair, ml_detect, stbc_combine, stbc_encode, stbc_transmit
from .turbo import Interleaver, TurboDecoder, code_rate, default_trellis, turbo_encode

logger = logging.getLogger(__name__)

INTERLEAVER_STREAM = 0x5EED
# Soft demapping needs a positive variance; noiseless runs use this instead.
SOFT_NOISE_FLOOR = 1e-6


@dataclass(frozen=True)
class PacketResult:
    bits_sent: int
    bit_errors: int
    scheme: Scheme
    erased_blocks: int = 0
    turbo_iterations: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent


@dataclass(frozen=True)
class BerRecord:
    """One sweep point (or, inside ``breakdown``, one scheme's share of it)."""
    chain: str
    ebno_db: float
    scheme_used: str
    bits_sent: int
    bit_errors: int
    packets: int
    seed: int
    channel_kind: str
    turbo_iterations_mean: float = 0.0
    ber: float = field(init=False)
    breakdown: Tuple["BerRecord", ...] = field(default=(), compare=False, repr=False)
    scheme_history: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.bits_sent <= 0:
            raise SimulationError("a BER record needs at least one bit sent")
        if not 0 <= self.bit_errors <= self.bits_sent:
            raise SimulationError(
                f"bit errors {self.bit_errors} outside [0, {self.bits_sent}]"
            )
        object.__setattr__(self, "ber", self.bit_errors / self.bits_sent)


@dataclass(frozen=True)
class Link:
    """Run-level objects shared by every packet of a sweep."""
    config: SimConfig
    interleaver: Interleaver

    @classmethod
    def prepare(cls, cfg: SimConfig) -> "Link":
        cfg.validate()
        return cls(cfg, run_interleaver(cfg))

    def decoder(self) -> TurboDecoder:
        return TurboDecoder(default_trellis(), self.interleaver, self.config.max_turbo_iters)


def run_interleaver(cfg: SimConfig) -> Interleaver:
    """The run's turbo interleaver, drawn once from the master seed."""
    return Interleaver.random(cfg.packet_bits, trial_rng(cfg.master_seed, INTERLEAVER_STREAM))


def packet_rng(cfg: SimConfig, chain: Chain, point_index: int, packet_index: int):
    if cfg.seed_mode is SeedMode.INDEPENDENT:
        chain_index = list(Chain).index(chain)
        return trial_rng(cfg.master_seed, chain_index, point_index, packet_index)
    return trial_rng(cfg.master_seed, point_index, packet_index)


def _pad(bits: np.ndarray, multiple: int) -> np.ndarray:
    short = -bits.size % multiple
    return np.concatenate([bits, np.zeros(short, dtype=bits.dtype)]) if short else bits


def _siso_channel(symbols: SymbolBlock, cfg: SimConfig, kind: ChannelKind, n0: float, rng):
    """IFFT + guard, one flat gain per OFDM symbol, noise, guard removal + FFT."""
    tx = ofdm_modulate(symbols, cfg.ofdm)
    batch = (tx.samples.shape[0], 1)
    if kind is ChannelKind.RAYLEIGH:
        ch = rayleigh_block(1, 1, rng, batch=batch)
    else:
        ch = unit_channel(1, 1, batch=batch)
    h = ch.gains[0, 0]
    noise = NoiseSpec(time_domain_noise_variance(n0, cfg.ofdm))
    rx = TimeDomainBlock(awgn(h * tx.samples, noise, rng), cfg.ofdm)
    return ofdm_demodulate(rx, symbols.source_scheme).symbols, h


def _count_errors(sent: np.ndarray, received: np.ndarray, erased: np.ndarray) -> int:
    n = sent.size
    return int(np.count_nonzero((received[:n] != sent) | erased[:n]))


def _erased_bits(erased_blocks: np.ndarray, bits_per_block: int) -> np.ndarray:
    return np.repeat(erased_blocks, bits_per_block)


def _run_baseline(payload, c, n0, cfg, rng) -> Tuple[int, int]:
    per_block = cfg.ofdm.fft_size * c.bits_per_symbol
    symbols = frame(modulate(_pad(payload, per_block), c), cfg.ofdm)
    received, h = _siso_channel(symbols, cfg, cfg.channel_for(Chain.BASELINE), n0, rng)
    erased = h[:, 0] == 0
    safe = np.where(h == 0, 1.0, h)
    bits = demodulate_hard(SymbolBlock(received / safe), c)
    return _count_errors(payload, bits, _erased_bits(erased, per_block)), int(erased.sum())


def _run_stbc(payload, c, n0, cfg, rng) -> Tuple[int, int]:
    per_block = cfg.ofdm.fft_size * c.bits_per_symbol
    symbols = frame(modulate(_pad(payload, 2 * per_block), c), cfg.ofdm)
    samples = ofdm_modulate(symbols, cfg.ofdm).samples * TX_AMPLITUDE

    block = stbc_encode(samples[0::2], samples[1::2])
    batch = (block.tx.shape[2], 1)
    if cfg.channel_for(Chain.STBC) is ChannelKind.RAYLEIGH:
        ch = rayleigh_block(2, 2, rng, batch=batch)
    else:
        ch = unit_channel(2, 2, batch=batch)
    noise = NoiseSpec(time_domain_noise_variance(n0, cfg.ofdm))
    pair = stbc_combine(stbc_transmit(block, ch, noise, rng), ch)

    combined = np.empty_like(samples)
    combined[0::2] = pair.s0 / TX_AMPLITUDE
    combined[1::2] = pair.s1 / TX_AMPLITUDE
    spectrum = ofdm_demodulate(TimeDomainBlock(combined, cfg.ofdm)).symbols

    erased = pair.gain[:, 0] <= 0
    gain = np.where(pair.gain > 0, pair.gain, 1.0)
    first, second = ml_detect(CombinedPair(spectrum[0::2], spectrum[1::2], gain), c)
    indices = np.empty(spectrum.shape, dtype=np.int64)
    indices[0::2], indices[1::2] = first, second
    bits = indices_to_bits(indices, c)
    return (_count_errors(payload, bits, _erased_bits(np.repeat(erased, 2), per_block)),
            2 * int(erased.sum()))


def _run_turbo(payload, c, n0, cfg, rng, link: Link) -> Tuple[int, int, int]:
    trellis = default_trellis()
    coded = turbo_encode(payload, trellis, link.interleaver).bits
    per_block = cfg.ofdm.fft_size * c.bits_per_symbol
    symbols = frame(modulate(_pad(coded, per_block), c), cfg.ofdm)
    received, h = _siso_channel(symbols, cfg, cfg.channel_for(Chain.TURBO), n0, rng)

    magnitude = np.abs(h)
    rotation = np.where(magnitude > 0, np.conj(h) / np.where(magnitude > 0, magnitude, 1.0), 0)
    llrs = demodulate_soft(SymbolBlock(received * rotation), c,
                           max(n0, SOFT_NOISE_FLOOR), channel_gain=magnitude)
    result = link.decoder().decode(llrs[:coded.size])
    erased = int(np.count_nonzero(magnitude == 0))
    return _count_errors(payload, result.bits, np.zeros(payload.size, bool)), erased, result.iterations


def run_packet(chain: Chain, scheme: Scheme, ebno_db: float, cfg: SimConfig,
               rng: np.random.Generator, link: Optional[Link] = None) -> PacketResult:
    """Send one random packet through ``chain`` and count information-bit errors."""
    chain = Chain(chain)
    link = link or Link.prepare(cfg)
    c = build_constellation(scheme)
    payload = rng.integers(0, 2, cfg.packet_bits, dtype=np.uint8)

    iterations = 0
    if chain is Chain.TURBO:
        rate = code_rate(cfg.packet_bits, default_trellis())
        n0 = ebno_to_noise_variance(ebno_db, c.bits_per_symbol, rate)
        errors, erased, iterations = _run_turbo(payload, c, n0, cfg, rng, link)
    else:
        n0 = ebno_to_noise_variance(ebno_db, c.bits_per_symbol, 1)
        runner = _run_stbc if chain is Chain.STBC else _run_baseline
        errors, erased = runner(payload, c, n0, cfg, rng)

    if erased:
        logger.warning("%s: %d OFDM symbol(s) erased by a zero channel gain", chain.value, erased)
    result = PacketResult(cfg.packet_bits, errors, scheme, erased, iterations)
    if result.ber > 0.5:
        logger.warning("%s packet at %.2f dB decoded worse than chance (BER %.3f)",
                       chain.value, ebno_db, result.ber)
    return result


def _aggregate(chain, ebno_db, scheme, results: List[PacketResult], cfg: SimConfig, **extra) -> BerRecord:
    iterations = [r.turbo_iterations for r in results]
    return BerRecord(
        chain=chain.value,
        ebno_db=ebno_db,
        scheme_used=scheme.value,
        bits_sent=sum(r.bits_sent for r in results),
        bit_errors=sum(r.bit_errors for r in results),
        packets=len(results),
        seed=cfg.master_seed,
        channel_kind=cfg.channel_for(chain).value,
        turbo_iterations_mean=float(np.mean(iterations)) if chain is Chain.TURBO else 0.0,
        **extra,
    )


def run_point(chain: Chain, point_index: int, ebno_db: float, cfg: SimConfig,
              link: Optional[Link] = None) -> BerRecord:
    """Run one Eb/N0 point through the AMC loop, starting from the initial scheme."""
    link = link or Link.prepare(cfg)
    state = initial_state(cfg.amc)
    results: List[PacketResult] = []
    try:
        for packet_index in range(cfg.packets_per_point):
            rng = packet_rng(cfg, chain, point_index, packet_index)
            result = run_packet(chain, state.current, ebno_db, cfg, rng, link)
            results.append(result)
            state = update(state, result.ber, cfg.amc)
    except SimulationError as exc:
        raise SimulationError(f"{chain.value} chain at {ebno_db} dB: {exc}") from exc

    history = [r.scheme for r in results]
    by_scheme: Dict[Scheme, List[PacketResult]] = defaultdict(list)
    for r in results:
        by_scheme[r.scheme].append(r)
    breakdown = tuple(
        _aggregate(chain, ebno_db, s, by_scheme[s], cfg)
        for s in cfg.amc.ladder if s in by_scheme
    )
    steady = steady_state_scheme(history, cfg.amc)
    record = _aggregate(chain, ebno_db, steady, results, cfg,
                        breakdown=breakdown,
                        scheme_history=tuple(s.value for s in history))
    logger.info("%s %5.2f dB: BER %.3e over %d bits, steady scheme %s",
                chain.value, ebno_db, record.ber, record.bits_sent, steady.value)
    return record


def _point_task(task) -> BerRecord:
    chain, point_index, ebno_db, cfg = task
    return run_point(chain, point_index, ebno_db, cfg, Link.prepare(cfg))


def run_sweep(cfg: SimConfig) -> List[BerRecord]:
    """
    Every chain over every grid point, in (chain, point) order.

    Points run concurrently when ``cfg.workers > 1``; results are folded back
    in index order so the output does not depend on scheduling.
    """
    link = Link.prepare(cfg)
    tasks = [(chain, i, ebno, cfg)
             for chain in cfg.chains
             for i, ebno in enumerate(cfg.ebno_grid_db)]
    logger.info("sweep: %d chain(s) x %d point(s) x %d packet(s) of %d bits, %d worker(s)",
                len(cfg.chains), len(cfg.ebno_grid_db), cfg.packets_per_point,
                cfg.packet_bits, cfg.workers)
    if cfg.workers == 1:
        return [run_point(chain, i, ebno, cfg, link) for chain, i, ebno, _ in tasks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_point_task, tasks))

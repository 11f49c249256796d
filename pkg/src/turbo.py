"""
Rate-1/3 parallel-concatenated turbo codec with Log-MAP constituent decoders.

Two identical recursive systematic convolutional (RSC) encoders are joined by
a random interleaver. Decoding alternates two BCJR passes in the log domain,
exchanging extrinsic LLRs until both hard decisions agree.

Conventions
-----------
* LLRs are ``log P(bit=0) / P(bit=1)`` and code bits map to antipodal
  symbols as ``c = 1 - 2b``.
* Only encoder 1 is terminated. Encoder 2 also consumes encoder 1's tail
  inputs (unpermuted) but is left open, so its backward recursion starts
  from a uniform state distribution.
* The codeword is multiplexed per trellis step as ``(sys, parity1, parity2)``,
  giving ``3 * (K + memory)`` code bits.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import InputShapeError, NumericalDegeneracyError, ParameterError
from .modem import hard_decisions

logger = logging.getLogger(__name__)

# Extrinsic messages are clipped to this magnitude before being exchanged.
MAX_EXTRINSIC = 512.0
DEFAULT_MAX_ITERS = 8
EXHAUSTIVE_LIMIT = 12


def _taps(poly: int, memory: int) -> Tuple[int, ...]:
    return tuple(int(b) for b in format(poly, f"0{memory + 1}b"))


@dataclass(frozen=True, eq=False)
class Trellis:
    """
    Code graph of an RSC encoder.

    States pack the shift register as ``d1 d2 ... dm`` (``d1`` most recent, MSB).
    ``next_state``/``output_parity``/``feedback`` are indexed ``[state, input]``;
    ``prev_state``/``prev_input`` list, for each state, the two branches entering it.
    """
    memory: int
    generator: Tuple[int, int]  # (feedback, feedforward), octal as written
    next_state: np.ndarray
    output_parity: np.ndarray
    feedback: np.ndarray
    prev_state: np.ndarray
    prev_input: np.ndarray

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @classmethod
    def from_generator(cls, memory: int = 2, feedback: int = 0o7,
                       feedforward: int = 0o5) -> "Trellis":
        fb = _taps(feedback, memory)
        ff = _taps(feedforward, memory)
        if fb[0] != 1:
            raise ParameterError(f"feedback polynomial {feedback:o} has no input tap")
        n_states = 1 << memory
        next_state = np.zeros((n_states, 2), dtype=np.int64)
        parity = np.zeros((n_states, 2), dtype=np.uint8)
        loop = np.zeros((n_states, 2), dtype=np.uint8)
        for state in range(n_states):
            regs = [(state >> (memory - 1 - i)) & 1 for i in range(memory)]
            fed_back = sum(fb[i + 1] & regs[i] for i in range(memory)) & 1
            for u in (0, 1):
                a = u ^ fed_back
                parity[state, u] = (ff[0] & a) ^ (sum(ff[i + 1] & regs[i] for i in range(memory)) & 1)
                next_state[state, u] = (a << (memory - 1)) | (state >> 1)
                loop[state, u] = a

        prev_state = np.zeros((n_states, 2), dtype=np.int64)
        prev_input = np.zeros((n_states, 2), dtype=np.int64)
        filled = np.zeros(n_states, dtype=np.int64)
        for state in range(n_states):
            for u in (0, 1):
                dest = next_state[state, u]
                prev_state[dest, filled[dest]] = state
                prev_input[dest, filled[dest]] = u
                filled[dest] += 1
        for table in (next_state, parity, loop, prev_state, prev_input):
            table.setflags(write=False)
        return cls(memory, (feedback, feedforward), next_state, parity, loop,
                   prev_state, prev_input)


@lru_cache(maxsize=None)
def default_trellis() -> Trellis:
    """The (1, 5/7) constraint-length-3 RSC code."""
    return Trellis.from_generator(2, 0o7, 0o5)


def rsc_encode(bits, t: Trellis, initial_state: int = 0):
    """Returns ``(systematic, parity, final_state)``."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    parity = np.empty(bits.size, dtype=np.uint8)
    state = initial_state
    next_state, output = t.next_state, t.output_parity
    for k, u in enumerate(bits.tolist()):
        parity[k] = output[state, u]
        state = int(next_state[state, u])
    return bits.copy(), parity, state


def terminate(final_state: int, t: Trellis) -> np.ndarray:
    """Tail inputs that zero the feedback, flushing the registers to state 0."""
    if not 0 <= final_state < t.n_states:
        raise ParameterError(f"state {final_state} outside trellis with {t.n_states} states")
    tail = np.empty(t.memory, dtype=np.uint8)
    state = final_state
    for i in range(t.memory):
        u = int(np.flatnonzero(t.feedback[state] == 0)[0])
        tail[i] = u
        state = int(t.next_state[state, u])
    return tail


@dataclass(frozen=True)
class Interleaver:
    permutation: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ParameterError("interleaver permutation is not a bijection on [0, L)")
        perm.setflags(write=False)
        object.__setattr__(self, "permutation", perm)

    @property
    def length(self) -> int:
        return self.permutation.size

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "Interleaver":
        return cls(rng.permutation(length))

    @classmethod
    def identity(cls, length: int) -> "Interleaver":
        return cls(np.arange(length))

    def extended(self, extra: int) -> np.ndarray:
        """Permutation with ``extra`` trailing positions mapped onto themselves."""
        return np.concatenate([self.permutation, np.arange(self.length, self.length + extra)])


def _check_length(values, il: Interleaver) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != il.length:
        raise InputShapeError(f"interleaver of length {il.length} got {values.shape[0]} values")
    return values


def interleave(bits, il: Interleaver) -> np.ndarray:
    return _check_length(bits, il)[il.permutation]


def deinterleave(values, il: Interleaver) -> np.ndarray:
    values = _check_length(values, il)
    out = np.empty_like(values)
    out[il.permutation] = values
    return out


@dataclass(frozen=True)
class Codeword:
    systematic: np.ndarray
    parity1: np.ndarray
    parity2: np.ndarray
    K: int

    def __post_init__(self):
        lengths = {len(self.systematic), len(self.parity1), len(self.parity2)}
        if len(lengths) != 1 or lengths.pop() <= self.K:
            raise InputShapeError("codeword streams must share one length > K")

    @property
    def rate(self) -> float:
        return self.K / self.bits.size

    @property
    def bits(self) -> np.ndarray:
        return np.column_stack([self.systematic, self.parity1, self.parity2]).ravel()


def codeword_length(K: int, t: Trellis) -> int:
    return 3 * (K + t.memory)


def code_rate(K: int, t: Trellis) -> float:
    return K / codeword_length(K, t)


def turbo_encode(bits, t: Trellis, il: Interleaver) -> Codeword:
    bits = _check_length(np.asarray(bits, dtype=np.uint8).ravel(), il)
    _, parity1, state1 = rsc_encode(bits, t)
    tail = terminate(state1, t)
    _, tail_parity1, _ = rsc_encode(tail, t, initial_state=state1)

    _, parity2, state2 = rsc_encode(interleave(bits, il), t)
    _, tail_parity2, _ = rsc_encode(tail, t, initial_state=state2)

    return Codeword(
        systematic=np.concatenate([bits, tail]),
        parity1=np.concatenate([parity1, tail_parity1]),
        parity2=np.concatenate([parity2, tail_parity2]),
        K=bits.size,
    )


@dataclass
class DecoderState:
    """Log-domain metrics of one constituent Log-MAP pass."""
    gamma: np.ndarray      # (L, states, 2)
    alpha: np.ndarray      # (L + 1, states), each row log-normalised
    beta: np.ndarray       # (L + 1, states), each row log-normalised
    llr: np.ndarray        # (L,)
    extrinsic: np.ndarray  # (L,)


def branch_metrics(channel_llrs, extrinsic, t: Trellis) -> np.ndarray:
    """
    Log branch metrics ``gamma[k, s', u]``.

    ``channel_llrs`` has columns ``(systematic, parity)`` holding ``Lc * y``;
    ``extrinsic`` is the a-priori LLR of each input bit.
    """
    channel_llrs = np.asarray(channel_llrs, dtype=float)
    apriori = np.asarray(extrinsic, dtype=float)
    systematic = 0.5 * (apriori + channel_llrs[:, 0])
    parity = 0.5 * channel_llrs[:, 1]
    c_input = np.array([1.0, -1.0])
    c_parity = 1.0 - 2.0 * t.output_parity
    return systematic[:, None, None] * c_input + parity[:, None, None] * c_parity


def _log_normalise(row: np.ndarray, k: int) -> np.ndarray:
    peak = row.max()
    if peak == -np.inf:
        raise NumericalDegeneracyError(f"every trellis state is unreachable at step {k}")
    return row - (peak + np.log(np.exp(row - peak).sum()))


def forward(gamma, t: Trellis) -> np.ndarray:
    steps = gamma.shape[0]
    alpha = np.empty((steps + 1, t.n_states))
    alpha[0] = -np.inf
    alpha[0, 0] = 0.0
    first = (t.prev_state[:, 0] * 2 + t.prev_input[:, 0])
    second = (t.prev_state[:, 1] * 2 + t.prev_input[:, 1])
    for k in range(steps):
        branches = (alpha[k][:, None] + gamma[k]).ravel()
        alpha[k + 1] = _log_normalise(np.logaddexp(branches[first], branches[second]), k + 1)
    return alpha


def backward(gamma, t: Trellis, terminated: bool = True) -> np.ndarray:
    steps = gamma.shape[0]
    beta = np.empty((steps + 1, t.n_states))
    if terminated:
        beta[steps] = -np.inf
        beta[steps, 0] = 0.0
    else:
        beta[steps] = -np.log(t.n_states)
    next_state = t.next_state
    for k in range(steps - 1, -1, -1):
        paths = gamma[k] + beta[k + 1][next_state]
        beta[k] = _log_normalise(np.logaddexp(paths[:, 0], paths[:, 1]), k)
    return beta


def llr(alpha, beta, gamma, t: Trellis) -> np.ndarray:
    metric = alpha[:-1, :, None] + gamma + beta[1:][:, t.next_state]
    zero = logsumexp(metric[:, :, 0], axis=1)
    one = logsumexp(metric[:, :, 1], axis=1)
    dead = np.isneginf(zero) & np.isneginf(one)
    if np.any(dead):
        raise NumericalDegeneracyError(
            f"no surviving branch at step {int(np.flatnonzero(dead)[0])}"
        )
    return zero - one


def log_map(channel_llrs, apriori, t: Trellis, terminated: bool = True) -> DecoderState:
    """One constituent Log-MAP (BCJR) pass."""
    channel_llrs = np.asarray(channel_llrs, dtype=float)
    apriori = np.asarray(apriori, dtype=float)
    gamma = branch_metrics(channel_llrs, apriori, t)
    alpha = forward(gamma, t)
    beta = backward(gamma, t, terminated)
    posterior = llr(alpha, beta, gamma, t)
    extrinsic = np.clip(posterior - channel_llrs[:, 0] - apriori, -MAX_EXTRINSIC, MAX_EXTRINSIC)
    return DecoderState(gamma, alpha, beta, posterior, extrinsic)


@dataclass
class TurboDecodeResult:
    bits: np.ndarray
    iterations: int
    llrs: np.ndarray
    disagreements: List[int] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(self.disagreements) and self.disagreements[-1] == 0


class TurboDecoder:
    """Iterative decoder for codewords produced by :func:`turbo_encode`."""

    def __init__(self, trellis: Trellis, interleaver: Interleaver,
                 max_iters: int = DEFAULT_MAX_ITERS):
        if max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
        self.trellis = trellis
        self.interleaver = interleaver
        self.max_iters = max_iters
        self._order = interleaver.extended(trellis.memory)

    @property
    def K(self) -> int:
        return self.interleaver.length

    def split(self, codeword_llrs) -> np.ndarray:
        llrs = np.asarray(codeword_llrs, dtype=float).ravel()
        expected = codeword_length(self.K, self.trellis)
        if llrs.size != expected:
            raise InputShapeError(f"codeword has {llrs.size} LLRs, expected {expected}")
        return llrs.reshape(-1, 3)

    def decode(self, codeword_llrs) -> TurboDecodeResult:
        streams = self.split(codeword_llrs)
        order = self._order
        first = streams[:, [0, 1]]
        second = np.column_stack([streams[order, 0], streams[:, 2]])

        apriori = np.zeros(len(order))
        disagreements = []
        for iteration in range(1, self.max_iters + 1):
            one = log_map(first, apriori, self.trellis, terminated=True)
            two = log_map(second, one.extrinsic[order], self.trellis, terminated=False)
            apriori = np.empty_like(apriori)
            apriori[order] = two.extrinsic
            posterior = np.empty_like(apriori)
            posterior[order] = two.llr

            mismatched = int(np.count_nonzero(
                hard_decisions(one.llr[:self.K]) != hard_decisions(posterior[:self.K])
            ))
            disagreements.append(mismatched)
            if mismatched == 0:
                break

        logger.debug("turbo decode: %d iteration(s), disagreements %s", iteration, disagreements)
        return TurboDecodeResult(
            bits=hard_decisions(posterior[:self.K]),
            iterations=iteration,
            llrs=posterior[:self.K],
            disagreements=disagreements,
        )


def turbo_decode(codeword_llrs, t: Trellis, il: Interleaver,
                 max_iters: int = DEFAULT_MAX_ITERS):
    """Returns ``(bits, iterations_used)``."""
    result = TurboDecoder(t, il, max_iters).decode(codeword_llrs)
    return result.bits, result.iterations


def _enumerate_messages(K: int) -> np.ndarray:
    if K > EXHAUSTIVE_LIMIT:
        raise ParameterError(f"exhaustive decoding is limited to K <= {EXHAUSTIVE_LIMIT}")
    return ((np.arange(1 << K)[:, None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.uint8)


def _posterior(messages: np.ndarray, log_likelihood: np.ndarray) -> np.ndarray:
    zero = np.where(messages == 0, log_likelihood[:, None], -np.inf)
    one = np.where(messages == 1, log_likelihood[:, None], -np.inf)
    return logsumexp(zero, axis=0) - logsumexp(one, axis=0)


def exhaustive_map_llrs(channel_llrs, t: Trellis, K: Optional[int] = None) -> np.ndarray:
    """
    Brute-force posterior LLRs of the information bits of one terminated RSC
    code, enumerating every message. ``channel_llrs`` is shaped like the input
    of :func:`log_map`.
    """
    channel_llrs = np.asarray(channel_llrs, dtype=float)
    K = channel_llrs.shape[0] - t.memory if K is None else K
    messages = _enumerate_messages(K)
    score = np.empty(len(messages))
    for i, message in enumerate(messages):
        _, parity, state = rsc_encode(message, t)
        tail = terminate(state, t)
        _, tail_parity, _ = rsc_encode(tail, t, initial_state=state)
        c_sys = 1.0 - 2.0 * np.concatenate([message, tail])
        c_par = 1.0 - 2.0 * np.concatenate([parity, tail_parity])
        score[i] = 0.5 * (channel_llrs[:, 0] @ c_sys + channel_llrs[:, 1] @ c_par)
    return _posterior(messages, score)


def exhaustive_turbo_llrs(codeword_llrs, t: Trellis, il: Interleaver) -> np.ndarray:
    """Brute-force posterior LLRs of the information bits of the full turbo code."""
    llrs = np.asarray(codeword_llrs, dtype=float).ravel()
    messages = _enumerate_messages(il.length)
    score = np.array([
        0.5 * llrs @ (1.0 - 2.0 * turbo_encode(message, t, il).bits)
        for message in messages
    ])
    return _posterior(messages, score)

#!/usr/bin/env python3
"""Tests for the RSC trellis, interleaver, turbo encoder and Log-MAP decoder."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from src.errors import InputShapeError, ParameterError
from src.turbo import (Interleaver, TurboDecoder, code_rate, codeword_length, default_trellis,
                       deinterleave, exhaustive_map_llrs, exhaustive_turbo_llrs, forward,
                       branch_metrics, backward, interleave, log_map, rsc_encode, terminate,
                       turbo_decode, turbo_encode)

TRELLIS = default_trellis()


def channel_llrs(bits, ebno_db, rate, rng):
    """BPSK over AWGN, returned as Lc * y."""
    n0 = 1.0 / (rate * 10 ** (ebno_db / 10))
    y = (1.0 - 2.0 * bits) + np.sqrt(n0 / 2) * rng.standard_normal(bits.size)
    return 4.0 / n0 * y


def test_trellis_shape():
    assert TRELLIS.n_states == 4
    assert TRELLIS.generator == (0o7, 0o5)
    # every state is entered by exactly two branches
    counts = np.bincount(TRELLIS.next_state.ravel(), minlength=4)
    np.testing.assert_array_equal(counts, [2, 2, 2, 2])


def test_rsc_known_sequence():
    """Test the (1, 5/7) parity of a short input from the all-zero state"""
    systematic, parity, state = rsc_encode([1, 0, 0, 0], TRELLIS)
    np.testing.assert_array_equal(systematic, [1, 0, 0, 0])
    # impulse response of 5/7: 1 1 1 0 ...
    np.testing.assert_array_equal(parity, [1, 1, 1, 0])
    assert 0 <= state < 4


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=64))
def test_termination_returns_to_zero(bits):
    _, _, state = rsc_encode(bits, TRELLIS)
    tail = terminate(state, TRELLIS)
    assert tail.size == TRELLIS.memory
    _, _, final = rsc_encode(tail, TRELLIS, initial_state=state)
    assert final == 0


def test_terminate_rejects_unknown_state():
    with pytest.raises(ParameterError):
        terminate(9, TRELLIS)


def test_fixed_interleaver_vector():
    """Test the eight-bit reference permutation"""
    il = Interleaver([0, 2, 3, 1, 4, 6, 5, 7])
    out = interleave(np.array([0, 1, 1, 0, 1, 0, 0, 1]), il)
    np.testing.assert_array_equal(out, [0, 1, 0, 1, 1, 0, 0, 1])


@pytest.mark.parametrize("perm", [[0, 0, 1], [1, 2, 3], [[0, 1], [1, 0]]])
def test_interleaver_must_be_bijection(perm):
    with pytest.raises(ParameterError):
        Interleaver(perm)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2 ** 32 - 1))
def test_interleave_roundtrip(length, seed):
    il = Interleaver.random(length, np.random.default_rng(seed))
    values = np.arange(length) * 3 + 1
    np.testing.assert_array_equal(deinterleave(interleave(values, il), il), values)


def test_interleave_length_checked():
    with pytest.raises(InputShapeError):
        interleave(np.zeros(5), Interleaver.identity(4))


def test_extended_permutation_keeps_tail():
    il = Interleaver([2, 0, 1])
    np.testing.assert_array_equal(il.extended(2), [2, 0, 1, 3, 4])


def test_codeword_layout(rng):
    """Test length, rate and per-step multiplexing of the codeword"""
    K = 40
    il = Interleaver.random(K, rng)
    bits = rng.integers(0, 2, K).astype(np.uint8)
    cw = turbo_encode(bits, TRELLIS, il)
    assert cw.bits.size == codeword_length(K, TRELLIS) == 3 * (K + 2)
    assert cw.rate == pytest.approx(code_rate(K, TRELLIS)) == pytest.approx(K / (3 * K + 6))
    np.testing.assert_array_equal(cw.bits[0::3][:K], bits)
    np.testing.assert_array_equal(cw.bits[1::3], cw.parity1)
    np.testing.assert_array_equal(cw.bits[2::3], cw.parity2)

    # encoder 1 ends in state 0 after its tail
    _, _, state = rsc_encode(cw.systematic, TRELLIS)
    assert state == 0


def test_forward_rows_are_normalised(rng):
    bits = rng.integers(0, 2, 30).astype(float)
    llrs = np.column_stack([channel_llrs(bits, 1.0, 0.5, rng), channel_llrs(bits, 1.0, 0.5, rng)])
    gamma = branch_metrics(llrs, np.zeros(30), TRELLIS)
    alpha = forward(gamma, TRELLIS)
    beta = backward(gamma, TRELLIS, terminated=False)
    np.testing.assert_allclose(np.exp(logsumexp(alpha, axis=1)), 1.0, atol=1e-9)
    np.testing.assert_allclose(np.exp(logsumexp(beta, axis=1)), 1.0, atol=1e-9)


def test_log_map_matches_exhaustive_posterior():
    """Test constituent Log-MAP LLRs against brute force over all 2^8 messages"""
    K = 8
    rng = np.random.default_rng(99)
    for _ in range(100):
        message = rng.integers(0, 2, K).astype(np.uint8)
        _, parity, state = rsc_encode(message, TRELLIS)
        tail = terminate(state, TRELLIS)
        _, tail_parity, _ = rsc_encode(tail, TRELLIS, initial_state=state)
        code = np.column_stack([np.concatenate([message, tail]),
                                np.concatenate([parity, tail_parity])]).astype(float)
        llrs = channel_llrs(code.ravel(), 1.0, 0.5, rng).reshape(-1, 2)

        decoded = log_map(llrs, np.zeros(K + 2), TRELLIS, terminated=True)
        reference = exhaustive_map_llrs(llrs, TRELLIS, K)
        np.testing.assert_allclose(decoded.llr[:K], reference, atol=1e-6)


def test_exhaustive_limit():
    with pytest.raises(ParameterError):
        exhaustive_turbo_llrs(np.zeros(3 * 15), TRELLIS, Interleaver.identity(13))


def test_noiseless_decode_in_one_iteration(rng):
    K = 200
    il = Interleaver.random(K, rng)
    bits = rng.integers(0, 2, K).astype(np.uint8)
    llrs = 20.0 * (1.0 - 2.0 * turbo_encode(bits, TRELLIS, il).bits)
    decoded, iterations = turbo_decode(llrs, TRELLIS, il)
    np.testing.assert_array_equal(decoded, bits)
    assert iterations == 1


def test_decoder_agrees_with_full_code_posterior():
    """Test that iterative decoding keeps the sign of every confident full-code posterior"""
    rng = np.random.default_rng(5)
    K = 10
    il = Interleaver.random(K, rng)
    bits = rng.integers(0, 2, K).astype(np.uint8)
    coded = turbo_encode(bits, TRELLIS, il).bits.astype(float)
    llrs = channel_llrs(coded, 6.0, code_rate(K, TRELLIS), rng)

    result = TurboDecoder(TRELLIS, il, max_iters=8).decode(llrs)
    reference = exhaustive_turbo_llrs(llrs, TRELLIS, il)
    assert result.llrs.shape == (K,)
    confident = np.abs(reference) > 5.0
    np.testing.assert_array_equal(result.llrs[confident] < 0, reference[confident] < 0)


def test_decoding_at_moderate_snr(rng):
    K = 1000
    il = Interleaver.random(K, rng)
    bits = rng.integers(0, 2, K).astype(np.uint8)
    coded = turbo_encode(bits, TRELLIS, il).bits.astype(float)
    llrs = channel_llrs(coded, 3.0, code_rate(K, TRELLIS), rng)

    result = TurboDecoder(TRELLIS, il, max_iters=8).decode(llrs)
    assert np.count_nonzero(result.bits != bits) <= 2
    assert 1 <= result.iterations <= 8
    assert len(result.disagreements) == result.iterations
    assert result.converged == (result.disagreements[-1] == 0)


def test_decoder_checks_codeword_length():
    decoder = TurboDecoder(TRELLIS, Interleaver.identity(8))
    with pytest.raises(InputShapeError):
        decoder.decode(np.zeros(29))
    with pytest.raises(ParameterError):
        TurboDecoder(TRELLIS, Interleaver.identity(8), max_iters=0)


@pytest.mark.parametrize("K", [8, 64, 1024])
def test_noiseless_roundtrip_across_lengths(K):
    rng = np.random.default_rng(K)
    il = Interleaver.random(K, rng)
    bits = rng.integers(0, 2, K).astype(np.uint8)
    llrs = 20.0 * (1.0 - 2.0 * turbo_encode(bits, TRELLIS, il).bits)
    decoded, _ = turbo_decode(llrs, TRELLIS, il)
    np.testing.assert_array_equal(decoded, bits)


def test_recursions_match_probability_domain(rng):
    """Test alpha, beta and the LLRs of a K=3 block against direct probability sums"""
    K = 3
    steps = K + TRELLIS.memory
    llrs = rng.normal(0.0, 2.0, (steps, 2))
    apriori = np.concatenate([rng.normal(0.0, 1.0, K), np.zeros(TRELLIS.memory)])

    weight = np.empty((steps, 4, 2))
    for k in range(steps):
        for s in range(4):
            for u in (0, 1):
                c_u = 1 - 2 * u
                c_p = 1 - 2 * int(TRELLIS.output_parity[s, u])
                weight[k, s, u] = np.exp(0.5 * (apriori[k] + llrs[k, 0]) * c_u
                                         + 0.5 * llrs[k, 1] * c_p)

    alpha = np.zeros((steps + 1, 4))
    alpha[0, 0] = 1.0
    for k in range(steps):
        for s in range(4):
            for u in (0, 1):
                alpha[k + 1, TRELLIS.next_state[s, u]] += alpha[k, s] * weight[k, s, u]
        alpha[k + 1] /= alpha[k + 1].sum()

    beta = np.zeros((steps + 1, 4))
    beta[steps, 0] = 1.0
    for k in reversed(range(steps)):
        for s in range(4):
            beta[k, s] = sum(weight[k, s, u] * beta[k + 1, TRELLIS.next_state[s, u]]
                             for u in (0, 1))
        beta[k] /= beta[k].sum()

    expected = np.empty(steps)
    for k in range(steps):
        p = [sum(alpha[k, s] * weight[k, s, u] * beta[k + 1, TRELLIS.next_state[s, u]]
                 for s in range(4)) for u in (0, 1)]
        expected[k] = np.log(p[0] / p[1])

    state = log_map(llrs, apriori, TRELLIS, terminated=True)
    np.testing.assert_allclose(np.exp(state.alpha), alpha, atol=1e-12)
    np.testing.assert_allclose(np.exp(state.beta), beta, atol=1e-12)
    np.testing.assert_allclose(state.llr, expected, rtol=1e-9, atol=1e-9)


@pytest.mark.slow
def test_hard_decisions_match_full_code_map():
    """Test that 99% of 1000 eight-bit blocks decode exactly as the exhaustive MAP decoder"""
    rng = np.random.default_rng(8)
    K = 8
    il = Interleaver.random(K, rng)
    decoder = TurboDecoder(TRELLIS, il, max_iters=8)
    matches = 0
    for _ in range(1000):
        bits = rng.integers(0, 2, K).astype(np.uint8)
        coded = turbo_encode(bits, TRELLIS, il).bits.astype(float)
        llrs = channel_llrs(coded, 7.0, code_rate(K, TRELLIS), rng)
        reference = exhaustive_turbo_llrs(llrs, TRELLIS, il)
        matches += np.array_equal(decoder.decode(llrs).bits, (reference < 0).astype(np.uint8))
    assert matches >= 990


@pytest.mark.slow
def test_more_iterations_do_not_raise_ber():
    """Test that the aggregate BER falls as the iteration cap grows"""
    rng = np.random.default_rng(21)
    K = 1000
    il = Interleaver.random(K, rng)
    frames = []
    for _ in range(10):
        bits = rng.integers(0, 2, K).astype(np.uint8)
        coded = turbo_encode(bits, TRELLIS, il).bits.astype(float)
        frames.append((bits, channel_llrs(coded, 1.0, code_rate(K, TRELLIS), rng)))

    ber = {}
    for cap in (1, 2, 4, 8):
        decoder = TurboDecoder(TRELLIS, il, max_iters=cap)
        errors = sum(np.count_nonzero(decoder.decode(llrs).bits != bits) for bits, llrs in frames)
        ber[cap] = errors / (K * len(frames))
    assert ber[1] > 0
    assert ber[2] <= ber[1]
    assert ber[4] <= ber[2] + 1e-3
    assert ber[8] <= ber[4] + 1e-3
    assert ber[8] < ber[1] / 2


@pytest.mark.slow
def test_long_block_ber_bound():
    """Test K=1024 at 2 dB over AWGN stays below 1e-3"""
    rng = np.random.default_rng(1024)
    K = 1024
    il = Interleaver.random(K, rng)
    decoder = TurboDecoder(TRELLIS, il, max_iters=8)
    errors = 0
    frames = 10
    for _ in range(frames):
        bits = rng.integers(0, 2, K).astype(np.uint8)
        coded = turbo_encode(bits, TRELLIS, il).bits.astype(float)
        llrs = channel_llrs(coded, 2.0, code_rate(K, TRELLIS), rng)
        errors += np.count_nonzero(decoder.decode(llrs).bits != bits)
    assert errors / (K * frames) < 1e-3

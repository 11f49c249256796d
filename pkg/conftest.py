"""Shared fixtures for the simulator test suite."""

from fractions import Fraction

import numpy as np
import pytest

from src.amc import AmcPolicy
from src.config import SimConfig
from src.modem import Scheme
from src.ofdm import OfdmConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_ofdm():
    return OfdmConfig(fft_size=16, cp_fraction=Fraction(1, 8))


@pytest.fixture
def small_config(small_ofdm):
    """A sweep small enough to run in well under a second per chain."""
    return SimConfig(
        chains=("baseline",),
        ebno_grid_db=(4.0, 8.0),
        packet_bits=600,
        packets_per_point=3,
        master_seed=7,
        ofdm=small_ofdm,
        amc=AmcPolicy(),
        channel_kind="rayleigh",
        max_turbo_iters=4,
    )


@pytest.fixture
def bpsk_only():
    return AmcPolicy(ladder=(Scheme.BPSK,), initial=Scheme.BPSK)

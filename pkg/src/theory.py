"""Closed-form and numerically integrated BER references used to validate runs."""

import math

import numpy as np
from scipy import integrate, special, stats


def q_function(x):
    return 0.5 * special.erfc(np.asarray(x) / np.sqrt(2.0))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def ber_bpsk_awgn(ebno_db):
    return q_function(np.sqrt(2.0 * db_to_linear(ebno_db)))


def ber_mrc_bpsk_rayleigh(ebno_db: float, branches: int) -> float:
    """
    BPSK with ``branches``-fold maximal-ratio combining over i.i.d. unit Rayleigh
    gains, ``ebno_db`` being the mean per-branch Eb/N0 (closed form).
    """
    gamma = float(db_to_linear(ebno_db))
    mu = math.sqrt(gamma / (1.0 + gamma))
    low, high = (1.0 - mu) / 2.0, (1.0 + mu) / 2.0
    return low ** branches * sum(
        math.comb(branches - 1 + k, k) * high ** k for k in range(branches)
    )


def ber_mrc_bpsk_rayleigh_numeric(ebno_db: float, branches: int) -> float:
    """Same quantity by integrating Q(sqrt(2g)) against the Gamma(branches) SNR density."""
    gamma = float(db_to_linear(ebno_db))
    density = stats.gamma(a=branches, scale=gamma)
    value, _ = integrate.quad(
        lambda g: float(q_function(math.sqrt(2.0 * g))) * density.pdf(g), 0.0, np.inf,
        limit=200, epsabs=1e-15, epsrel=1e-9,
    )
    return value


def ber_alamouti_bpsk(ebno_db: float) -> float:
    """2x2 Alamouti with the power split over two antennas: 4-branch MRC at half the SNR."""
    return ber_mrc_bpsk_rayleigh_numeric(ebno_db - 10.0 * math.log10(2.0), 4)


def ber_mqam_awgn(ebno_db, bits_per_symbol: int):
    """Nearest-neighbour approximation for Gray square M-QAM."""
    m = 2 ** bits_per_symbol
    ebno = db_to_linear(ebno_db)
    factor = 4.0 / bits_per_symbol * (1.0 - 1.0 / math.sqrt(m))
    return factor * q_function(np.sqrt(3.0 * bits_per_symbol * ebno / (m - 1.0)))


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)

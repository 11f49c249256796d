"""
Adaptive modulation controller driven by per-packet BER feedback.

The transmitter climbs one rung of the modulation ladder when the measured BER
falls below ``up_threshold`` and descends one rung when it exceeds
``down_threshold``; anything in between leaves the scheme alone.
"""

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Tuple

from .errors import ConfigurationError, ParameterError
from .modem import Scheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmcPolicy:
    ladder: Tuple[Scheme, ...] = (Scheme.QPSK, Scheme.QAM16)
    up_threshold: float = 1e-2
    down_threshold: float = 5e-2
    initial: Scheme = Scheme.QAM16

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(self.ladder))
        problems = self.problems()
        if problems:
            raise ConfigurationError("; ".join(problems))

    def problems(self) -> list:
        found = []
        if not self.ladder:
            found.append("AMC ladder must contain at least one scheme")
        if len(set(self.ladder)) != len(self.ladder):
            found.append("AMC ladder contains a scheme twice")
        orders = [s.bits_per_symbol for s in self.ladder]
        if orders != sorted(orders):
            found.append("AMC ladder must be ordered from lowest to highest order")
        for name in ("up_threshold", "down_threshold"):
            value = getattr(self, name)
            if not 0 < value < 1:
                found.append(f"{name} must lie in (0, 1), got {value}")
        if self.up_threshold >= self.down_threshold:
            found.append("up_threshold must be below down_threshold (hysteresis gap)")
        return found

    def rank(self, scheme: Scheme) -> int:
        return self.ladder.index(scheme)

    @property
    def top(self) -> Scheme:
        return self.ladder[-1]


@dataclass(frozen=True)
class AmcState:
    current: Scheme
    last_measured_ber: Optional[float] = None


def initial_state(policy: AmcPolicy) -> AmcState:
    """Start at ``policy.initial``, clamped onto the ladder."""
    if policy.initial in policy.ladder:
        return AmcState(policy.initial)
    fitting = [s for s in policy.ladder
               if s.bits_per_symbol <= policy.initial.bits_per_symbol]
    return AmcState(fitting[-1] if fitting else policy.ladder[0])


def update(state: AmcState, measured_ber: float, policy: AmcPolicy) -> AmcState:
    if not 0 <= measured_ber <= 1:
        raise ParameterError(f"measured BER must lie in [0, 1], got {measured_ber}")
    rung = policy.rank(state.current)
    if measured_ber < policy.up_threshold and rung + 1 < len(policy.ladder):
        rung += 1
    elif measured_ber > policy.down_threshold and rung > 0:
        rung -= 1
    chosen = policy.ladder[rung]
    if chosen is not state.current:
        logger.debug("AMC %s -> %s at BER %.3g", state.current.value, chosen.value, measured_ber)
    return replace(state, current=chosen, last_measured_ber=measured_ber)


def steady_state_scheme(history: Sequence[Scheme], policy: AmcPolicy) -> Scheme:
    """
    Majority scheme over the second half of a point's packet history.

    A tie (a period-2 oscillation) resolves to the lower rung.
    """
    if not history:
        raise ParameterError("empty AMC history")
    tail = history[len(history) // 2:]
    counts = {s: tail.count(s) for s in set(tail)}
    best = max(counts.values())
    return min((s for s, n in counts.items() if n == best), key=policy.rank)


@dataclass(frozen=True)
class Crossover:
    chain: str
    ebno_db: Optional[float]
    scheme: Scheme

    @property
    def reached(self) -> bool:
        return self.ebno_db is not None


def crossover(records: Iterable, policy: AmcPolicy, chain: Optional[str] = None) -> Crossover:
    """
    Lowest Eb/N0 whose steady-state scheme is the top of the ladder.

    ``records`` are sweep records carrying ``chain``, ``ebno_db`` and
    ``scheme_used``; ``ebno_db`` is ``None`` when the top rung is never held.
    """
    points = sorted((r for r in records if chain is None or r.chain == chain),
                    key=lambda r: r.ebno_db)
    if not points:
        raise ParameterError(f"no records for chain {chain!r}")
    for record in points:
        if Scheme.parse(record.scheme_used) is policy.top:
            return Crossover(points[0].chain, record.ebno_db, policy.top)
    return Crossover(points[0].chain, None, policy.top)

#!/usr/bin/env python3
"""
Simulation configuration: dataclasses with defaults, YAML loading and validation.

Precedence is built-in defaults < YAML file < explicit command-line flags.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from .amc import AmcPolicy
from .errors import ConfigurationError, SimulationError
from .modem import Scheme
from .ofdm import OfdmConfig


class Chain(Enum):
    BASELINE = "baseline"
    STBC = "stbc"
    TURBO = "turbo"


class ChannelKind(Enum):
    AWGN = "awgn"
    RAYLEIGH = "rayleigh"


class SeedMode(Enum):
    SHARED = "shared"            # packet streams keyed by (point, packet)
    INDEPENDENT = "independent"  # chain index added to the key


def ebno_grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    """Inclusive grid, rounded so repeated float steps do not drift."""
    if step <= 0:
        raise ConfigurationError(f"Eb/N0 step must be positive, got {step}")
    if stop < start:
        raise ConfigurationError(f"Eb/N0 stop {stop} is below start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 9) for i in range(count))


def _chain_channels(value) -> Tuple[Tuple[Chain, ChannelKind], ...]:
    """Normalise a ``{chain: channel}`` mapping (or pairs) into sorted pairs."""
    value = value or ()
    pairs = value.items() if isinstance(value, dict) else value
    chosen = {Chain(chain): ChannelKind(kind) for chain, kind in pairs}
    return tuple((chain, chosen[chain]) for chain in Chain if chain in chosen)


@dataclass(frozen=True)
class SimConfig:
    """Everything a sweep depends on; the sweep output is a pure function of it."""
    chains: Tuple[Chain, ...] = (Chain.BASELINE,)
    ebno_grid_db: Tuple[float, ...] = ebno_grid(0.0, 10.0, 1.0)
    packet_bits: int = 10_000
    packets_per_point: int = 50
    master_seed: int = 2010
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    amc: AmcPolicy = field(default_factory=AmcPolicy)
    channel_kind: ChannelKind = ChannelKind.RAYLEIGH
    chain_channels: Tuple[Tuple[Chain, ChannelKind], ...] = ()
    max_turbo_iters: int = 8
    seed_mode: SeedMode = SeedMode.SHARED
    workers: int = 1
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(Chain(c) for c in self.chains))
        object.__setattr__(self, "ebno_grid_db", tuple(float(x) for x in self.ebno_grid_db))
        object.__setattr__(self, "channel_kind", ChannelKind(self.channel_kind))
        object.__setattr__(self, "chain_channels", _chain_channels(self.chain_channels))
        object.__setattr__(self, "seed_mode", SeedMode(self.seed_mode))

    def channel_for(self, chain: Chain) -> ChannelKind:
        """Channel a chain runs over: its own override, else ``channel_kind``."""
        return dict(self.chain_channels).get(Chain(chain), self.channel_kind)

    def problems(self) -> List[str]:
        found = []
        if not self.chains:
            found.append("at least one chain is required")
        if not self.ebno_grid_db:
            found.append("Eb/N0 grid is empty")
        if not isinstance(self.packet_bits, int) or self.packet_bits <= 0:
            found.append(f"packet_bits must be a positive integer, got {self.packet_bits!r}")
        if not isinstance(self.packets_per_point, int) or self.packets_per_point <= 0:
            found.append(f"packets_per_point must be a positive integer, got {self.packets_per_point!r}")
        if self.master_seed < 0:
            found.append(f"master_seed must be non-negative, got {self.master_seed}")
        if self.max_turbo_iters < 1:
            found.append(f"max_turbo_iters must be >= 1, got {self.max_turbo_iters}")
        if self.workers < 1:
            found.append(f"workers must be >= 1, got {self.workers}")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            found.append(f"unknown log level {self.log_level!r}")
        return found

    def validate(self) -> "SimConfig":
        problems = self.problems()
        if problems:
            raise ConfigurationError("invalid configuration: " + "; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Plain, YAML/JSON-friendly view of the configuration."""
        plain = _plain(asdict(self))
        plain["chain_channels"] = {c.value: k.value for c, k in self.chain_channels}
        return plain


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value)
    return value


def default_config() -> SimConfig:
    return SimConfig()


def _build_ofdm(data: Dict[str, Any]) -> OfdmConfig:
    return OfdmConfig(
        fft_size=int(data.get("fft_size", 256)),
        cp_fraction=Fraction(str(data.get("cp_fraction", "1/8"))),
    )


def _build_amc(data: Dict[str, Any]) -> AmcPolicy:
    defaults = AmcPolicy()
    ladder = data.get("ladder")
    initial = data.get("initial")
    return AmcPolicy(
        ladder=tuple(Scheme.parse(s) for s in ladder) if ladder else defaults.ladder,
        up_threshold=float(data.get("up_threshold", defaults.up_threshold)),
        down_threshold=float(data.get("down_threshold", defaults.down_threshold)),
        initial=Scheme.parse(initial) if initial else defaults.initial,
    )


def config_from_dict(data: Dict[str, Any]) -> SimConfig:
    data = dict(data or {})
    known = {f.name for f in fields(SimConfig)} | {"ebno", "chain"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    try:
        if "ofdm" in data:
            data["ofdm"] = _build_ofdm(data["ofdm"] or {})
        if "amc" in data:
            data["amc"] = _build_amc(data["amc"] or {})
        if "ebno" in data:
            grid = data.pop("ebno")
            data["ebno_grid_db"] = ebno_grid(grid["start"], grid["stop"], grid["step"])
        if "chain" in data:
            data["chains"] = [data.pop("chain")]
        if "chains" in data and isinstance(data["chains"], str):
            data["chains"] = [data["chains"]]
        return SimConfig(**data).validate()
    except SimulationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc


def load_config(config_path: Optional[Union[str, Path]] = None) -> SimConfig:
    """Load configuration from a YAML file, or the defaults when no path is given."""
    if config_path is None:
        return default_config()
    path = Path(config_path)
    if not path.exists():
        raise ConfigurationError(f"configuration file not found: {path}")
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a mapping at top level")
    return config_from_dict(data)


def with_overrides(cfg: SimConfig, **overrides) -> SimConfig:
    """Replace fields whose override is not ``None`` and re-validate."""
    chosen = {k: v for k, v in overrides.items() if v is not None}
    try:
        return replace(cfg, **chosen).validate()
    except SimulationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc


def write_sample_config(output_path: Union[str, Path] = "config/simulation.yaml") -> str:
    """Write the default configuration as a YAML sample."""
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sample = default_config().to_dict()
    grid = sample.pop("ebno_grid_db")
    sample["ebno"] = {"start": grid[0], "stop": grid[-1],
                      "step": round(grid[1] - grid[0], 9) if len(grid) > 1 else 1.0}
    with open(path, "w") as f:
        yaml.safe_dump(sample, f, default_flow_style=False, indent=2, sort_keys=False)
    return str(path)

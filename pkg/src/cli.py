#!/usr/bin/env python3
"""
``simulate``: run a BER sweep and write the CSV, metadata and plot script.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from fractions import Fraction
from typing import List, Optional

from .amc import crossover
from .config import Chain, ChannelKind, SeedMode, SimConfig, ebno_grid, load_config, with_overrides, write_sample_config
from .errors import ConfigurationError, ExportError, ParameterError, SimulationError
from .export import emit_plot_script, metadata_path, write_csv, write_metadata
from .logging_setup import setup_logging
from .modem import Scheme
from .ofdm import OfdmConfig
from .sim import run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Link-level BER simulation of an 802.16 OFDM physical layer",
    )
    parser.add_argument("--config", "-c", help="YAML configuration file")
    parser.add_argument("--chain", action="append", choices=[c.value for c in Chain],
                        help="Chain to simulate (repeat for several)")
    parser.add_argument("--ebno-start", type=float, help="First Eb/N0 point in dB")
    parser.add_argument("--ebno-stop", type=float, help="Last Eb/N0 point in dB")
    parser.add_argument("--ebno-step", type=float, help="Eb/N0 step in dB")
    parser.add_argument("--packet-bits", type=int, help="Information bits per packet")
    parser.add_argument("--packets", type=int, help="Packets per Eb/N0 point")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--channel", choices=[k.value for k in ChannelKind], help="Channel model")
    parser.add_argument("--chain-channel", action="append", metavar="CHAIN=CHANNEL",
                        help="Channel for one chain, e.g. turbo=awgn (repeat for several)")
    parser.add_argument("--fft-size", type=int, help="Subcarriers per OFDM symbol")
    parser.add_argument("--cp", help="Cyclic prefix fraction, e.g. 1/8")
    parser.add_argument("--amc-up", type=float, help="BER below which AMC steps up")
    parser.add_argument("--amc-down", type=float, help="BER above which AMC steps down")
    parser.add_argument("--ladder", help="Comma-separated modulation ladder, lowest first")
    parser.add_argument("--initial", help="Initial modulation scheme")
    parser.add_argument("--iters", type=int, help="Maximum turbo iterations")
    parser.add_argument("--seed-mode", choices=[m.value for m in SeedMode],
                        help="Share packet streams across chains or not")
    parser.add_argument("--workers", type=int, help="Worker processes for the sweep")
    parser.add_argument("--out", "-o", help="CSV output path")
    parser.add_argument("--plot", help="Also write a plotting script to this path")
    parser.add_argument("--theory", action="store_true",
                        help="Overlay the BPSK over AWGN reference in the plot script")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Console log level")
    parser.add_argument("--log-file", help="Also log at DEBUG level to this file")
    parser.add_argument("--write-sample-config", metavar="PATH",
                        help="Write the default configuration as YAML and exit")
    return parser


def config_from_args(args: argparse.Namespace) -> SimConfig:
    """Defaults < YAML file < explicit flags."""
    cfg = load_config(args.config)

    grid = None
    if any(v is not None for v in (args.ebno_start, args.ebno_stop, args.ebno_step)):
        current = cfg.ebno_grid_db
        step = round(current[1] - current[0], 9) if len(current) > 1 else 1.0
        grid = ebno_grid(
            current[0] if args.ebno_start is None else args.ebno_start,
            current[-1] if args.ebno_stop is None else args.ebno_stop,
            step if args.ebno_step is None else args.ebno_step,
        )

    ofdm = None
    if args.fft_size is not None or args.cp is not None:
        try:
            cp = cfg.ofdm.cp_fraction if args.cp is None else Fraction(args.cp)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"invalid cyclic prefix fraction {args.cp!r}") from exc
        fft_size = cfg.ofdm.fft_size if args.fft_size is None else args.fft_size
        ofdm = OfdmConfig(fft_size=fft_size, cp_fraction=cp)

    chain_channels = None
    if args.chain_channel:
        chain_channels = {c.value: k.value for c, k in cfg.chain_channels}
        for item in args.chain_channel:
            chain, sep, kind = item.partition("=")
            if not sep:
                raise ConfigurationError(f"expected CHAIN=CHANNEL, got {item!r}")
            chain_channels[chain.strip()] = kind.strip()

    amc = None
    if any(v is not None for v in (args.amc_up, args.amc_down, args.ladder, args.initial)):
        try:
            ladder = (tuple(Scheme.parse(s) for s in args.ladder.split(","))
                      if args.ladder else cfg.amc.ladder)
            initial = Scheme.parse(args.initial) if args.initial else cfg.amc.initial
        except ParameterError as exc:
            raise ConfigurationError(str(exc)) from exc
        amc = replace(
            cfg.amc,
            ladder=ladder,
            initial=initial,
            up_threshold=cfg.amc.up_threshold if args.amc_up is None else args.amc_up,
            down_threshold=cfg.amc.down_threshold if args.amc_down is None else args.amc_down,
        )

    return with_overrides(
        cfg,
        chains=tuple(args.chain) if args.chain else None,
        ebno_grid_db=grid,
        packet_bits=args.packet_bits,
        packets_per_point=args.packets,
        master_seed=args.seed,
        channel_kind=args.channel,
        chain_channels=chain_channels,
        ofdm=ofdm,
        amc=amc,
        max_turbo_iters=args.iters,
        seed_mode=args.seed_mode,
        workers=args.workers,
        log_level=args.log_level,
        log_file=args.log_file,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.write_sample_config:
        try:
            path = write_sample_config(args.write_sample_config)
        except OSError as exc:
            print(f"Error: cannot write {args.write_sample_config}: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"Sample configuration created at {path}")
        return EXIT_OK

    if not args.out:
        print("Error: --out is required", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = config_from_args(args)
    except ConfigurationError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    setup_logging(cfg.log_level, cfg.log_file)

    try:
        records = run_sweep(cfg)
    except ConfigurationError as exc:
        logger.error(f"Invalid configuration: {exc}")
        return EXIT_CONFIG
    except SimulationError as exc:
        logger.error(f"Simulation failed: {exc}")
        return EXIT_CONFIG

    try:
        csv_path = write_csv(records, args.out)
        write_metadata(records, cfg, metadata_path(csv_path))
        if args.plot:
            emit_plot_script(records, args.plot, csv_path=csv_path,
                             theory_overlay=args.theory)
    except ExportError as exc:
        logger.error(str(exc))
        return EXIT_IO

    for chain in cfg.chains:
        point = crossover(records, cfg.amc, chain=chain.value)
        where = f"from {point.ebno_db} dB" if point.reached else "never reached"
        print(f"{chain.value}: {point.scheme.value} {where}")
    print(f"Results: {csv_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

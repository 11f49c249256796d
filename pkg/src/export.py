"""
Result files: the BER table (CSV), its JSON metadata sidecar, and a
standalone plotting script rendered from a Jinja2 template.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from .config import SimConfig
from .errors import ExportError, InputShapeError
from .sim import BerRecord, run_interleaver
from .turbo import Interleaver

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["chain", "ebno_db", "scheme", "bits_sent", "bit_errors", "ber",
               "packets", "seed", "channel", "turbo_iters_mean"]
TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"
PLOT_TEMPLATE = "ber_plot.py.j2"

PathLike = Union[str, Path]


def _require_records(records: Sequence[BerRecord]) -> List[BerRecord]:
    records = list(records)
    if not records:
        raise InputShapeError("no records to export")
    return records


def records_to_frame(records: Sequence[BerRecord]) -> pd.DataFrame:
    rows = [{
        "chain": r.chain,
        "ebno_db": r.ebno_db,
        "scheme": r.scheme_used,
        "bits_sent": r.bits_sent,
        "bit_errors": r.bit_errors,
        "ber": r.ber,
        "packets": r.packets,
        "seed": r.seed,
        "channel": r.channel_kind,
        "turbo_iters_mean": r.turbo_iterations_mean,
    } for r in records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(path, exc.strerror or exc) from exc
    return path


def write_csv(records: Sequence[BerRecord], path: PathLike) -> str:
    records = _require_records(records)
    path = _prepare(path)
    try:
        records_to_frame(records).to_csv(path, index=False, lineterminator="\n")
    except OSError as exc:
        raise ExportError(path, exc.strerror or exc) from exc
    logger.info(f"Wrote {len(records)} BER record(s) to {path}")
    return str(path)


def read_csv(path: PathLike) -> List[BerRecord]:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise InputShapeError(f"{path} lacks column(s): {', '.join(missing)}")
    return [
        BerRecord(
            chain=row.chain,
            ebno_db=float(row.ebno_db),
            scheme_used=row.scheme,
            bits_sent=int(row.bits_sent),
            bit_errors=int(row.bit_errors),
            packets=int(row.packets),
            seed=int(row.seed),
            channel_kind=row.channel,
            turbo_iterations_mean=float(row.turbo_iters_mean),
        )
        for row in frame.itertuples(index=False)
    ]


def emit_plot_script(records: Sequence[BerRecord], path: PathLike,
                     csv_path: Optional[PathLike] = None,
                     image_path: Optional[PathLike] = None,
                     theory_overlay: bool = False) -> str:
    """
    Render a matplotlib script that reads ``csv_path`` and draws one
    log-scale BER curve per chain. Rerunning it on the same CSV writes a
    byte-identical PNG.
    """
    records = _require_records(records)
    path = _prepare(path)
    csv_path = Path(csv_path) if csv_path else path.with_suffix(".csv")
    image_path = Path(image_path) if image_path else csv_path.with_suffix(".png")

    env = Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    template = env.get_template(PLOT_TEMPLATE)
    chains = list(dict.fromkeys(r.chain for r in records))
    rendered = template.render(
        csv_path=csv_path.as_posix(),
        image_path=image_path.as_posix(),
        chains=chains,
        channel=" / ".join(dict.fromkeys(r.channel_kind for r in records)),
        theory_overlay=theory_overlay,
    )
    try:
        with open(path, "w", newline="\n") as f:
            f.write(rendered)
    except OSError as exc:
        raise ExportError(path, exc.strerror or exc) from exc
    logger.info(f"Plot script written to {path}")
    return str(path)


def interleaver_digest(interleaver: Interleaver) -> str:
    return hashlib.sha256(interleaver.permutation.astype("<i8").tobytes()).hexdigest()


def _record_summary(record: BerRecord) -> Dict[str, Any]:
    return {
        "scheme": record.scheme_used,
        "bits_sent": record.bits_sent,
        "bit_errors": record.bit_errors,
        "ber": record.ber,
        "packets": record.packets,
    }


def build_metadata(records: Sequence[BerRecord], cfg: SimConfig) -> Dict[str, Any]:
    records = _require_records(records)
    interleaver = None
    if any(r.chain == "turbo" for r in records):
        il = run_interleaver(cfg)
        interleaver = {"length": il.length, "sha256": interleaver_digest(il)}

    points = []
    for r in records:
        entry = {
            "chain": r.chain,
            "ebno_db": r.ebno_db,
            "steady_scheme": r.scheme_used,
            "scheme_history": list(r.scheme_history),
            "breakdown": [_record_summary(b) for b in r.breakdown],
        }
        if r.chain == "turbo":
            entry["turbo_iterations_mean"] = r.turbo_iterations_mean
        points.append(entry)

    return {
        "config": cfg.to_dict(),
        "seed_mode": cfg.seed_mode.value,
        "channels": {c.value: cfg.channel_for(c).value for c in cfg.chains},
        "interleaver": interleaver,
        "points": points,
    }


def write_metadata(records: Sequence[BerRecord], cfg: SimConfig, path: PathLike) -> str:
    """JSON sidecar describing how ``records`` were produced. No timestamps."""
    path = _prepare(path)
    metadata = build_metadata(records, cfg)
    try:
        with open(path, "w", newline="\n") as f:
            json.dump(metadata, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise ExportError(path, exc.strerror or exc) from exc
    logger.info(f"Metadata exported to {path}")
    return str(path)


def metadata_path(csv_path: PathLike) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".meta.json")

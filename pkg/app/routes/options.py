"""
Shared CLI Options
Common flags, config-file merging and row emission for every command.
Flag defaults are None so that a value from --config is only replaced by a
flag the user actually typed.
"""
import argparse
from typing import Any, Dict, Iterable, List, Optional

from dotenv import dotenv_values

from app.utils import csv_writer
from app.utils.console import log, set_quiet, warn
from app.utils.error_handler import ValidationError
from app.utils.validators import CsvRow, SweepConfig

CONFIG_KEYS = set(SweepConfig.model_fields)
TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", help="comma list; sets p_i = p_d")
    parser.add_argument("--pi", help="comma list of insertion probabilities")
    parser.add_argument("--pd", help="comma list of deletion probabilities")
    parser.add_argument("--tol", type=float, help="tolerance (default 1e-9)")
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--pivot", action="store_true", default=None,
                        help="one row per grid point, one column per quantity")
    parser.add_argument("--config", help="key=value file mirroring the long flag names")
    parser.add_argument("--threads", type=int, help="worker cap (default DIDCAP_THREADS)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")


def add_window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", help="comma list or range, e.g. 2,3,4 or 2..7")
    parser.add_argument("--bitsym", action=argparse.BooleanOptionalAction, default=None,
                        help="include the bit-symmetry constraints (default on)")


def add_simulation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", help="flip probability of the Markov input, or 'opt'")
    parser.add_argument("--n", type=int, help="path length (default 10^6)")
    parser.add_argument("--samples", type=int, help="independent paths (default 10)")


def _coerce_bool(key: str, raw: str) -> bool:
    word = raw.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValidationError(f"config key {key!r}: expected a boolean, got {raw!r}")


def read_config_file(path: str) -> Dict[str, Any]:
    values = dotenv_values(path)
    if not values and values is not None:
        warn("CLI", f"config file {path} is empty or missing")
    out: Dict[str, Any] = {}
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            warn("CLI", f"ignoring unknown config key {key!r}")
            continue
        if raw is None:
            continue
        out[key] = _coerce_bool(key, raw) if key in ("bitsym", "pivot") else raw
    return out


def build_config(args: argparse.Namespace, overrides: Optional[Dict[str, Any]] = None) -> SweepConfig:
    """Built-in defaults < --config file < explicit flags."""
    set_quiet(bool(getattr(args, "quiet", False)))
    merged: Dict[str, Any] = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
        log("CLI", f"loaded config {args.config}")
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    merged.update(overrides or {})
    return SweepConfig(**merged)


def emit(rows: Iterable[CsvRow], config: SweepConfig) -> List[CsvRow]:
    rows = list(rows)
    written = csv_writer.write_rows(rows, config.out, config.pivot)
    log("CLI", f"wrote {written} lines to {config.out or 'stdout'}")
    return rows

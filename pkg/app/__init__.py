"""
didcap Application
Main entry point: builds the command-line parser, registers the route
modules and maps exceptions to exit codes.
"""
import argparse
from typing import List, Optional

import pydantic

from app.routes import lower, lownoise, simrate, sweep, trivialize, upper, verify
from app.utils import cache_service
from app.utils.console import log
from app.utils.error_handler import (
    AppError,
    handle_app_error,
    handle_model_error,
    handle_unexpected_error,
)

ROUTES = (lower, upper, lownoise, simrate, trivialize, verify, sweep)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="didcap",
        description="Capacity bounds for the dependent insertion-deletion channel",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for route in ROUTES:
        route.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.handler(args)
    except AppError as exc:
        code = handle_app_error(exc)
    except pydantic.ValidationError as exc:
        code = handle_model_error(exc)
    except Exception as exc:  # noqa: BLE001
        code = handle_unexpected_error(exc)
    stats = cache_service.get_stats()
    log("Cache", ", ".join(f"{name}: {s['hits']} hits / {s['misses']} misses" for name, s in stats.items()))
    return code

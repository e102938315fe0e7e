"""
Trivialize Routes
`trivialize`: objective of the two-string input that drives the bound to 1
once the stationarity constraints are dropped
"""
import argparse

from app.routes.options import add_common_flags, add_window_flags, build_config, emit
from app.services.sweep import sweep_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("trivialize", help="trivializing input of the bound without stationarity")
    add_common_flags(parser)
    add_window_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    emit(sweep_service.run_grid(config, ["trivial"]), config)
    return 0

"""
Sweep Routes
`sweep`: any mix of quantities over one parameter grid, e.g. for plotting with --pivot
"""
import argparse

from app.routes.options import add_common_flags, add_simulation_flags, add_window_flags, build_config, emit
from app.services.sweep import sweep_service
from app.utils.validators import QUANTITIES


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="several quantities over one grid")
    add_common_flags(parser)
    add_window_flags(parser)
    add_simulation_flags(parser)
    parser.add_argument("--quantities", help=f"comma list from {', '.join(QUANTITIES)}")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    emit(sweep_service.run_grid(config), config)
    return 0

"""
Upper Routes
`upper`: window-L convex upper bounds, one row per (grid point, L)
"""
import argparse

from app.routes.options import add_common_flags, add_window_flags, build_config, emit
from app.services.sweep import sweep_service
from app.utils.console import warn


def register(subparsers) -> None:
    parser = subparsers.add_parser("upper", help="convex-program upper bounds for a list of windows L")
    add_common_flags(parser)
    add_window_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows = emit(sweep_service.run_grid(config, ["upper_L"]), config)
    unconverged = [row for row in rows if not row.converged]
    if unconverged:
        warn("Upper", f"{len(unconverged)} of {len(rows)} solves did not reach the barrier tolerance")
    return 0

"""
Lower Routes
`lower`: Markov-input and i.u.d. lower bounds with the genie-erasure upper bound
"""
import argparse

from app.routes.options import add_common_flags, build_config, emit
from app.services.sweep import sweep_service

QUANTITIES = ["lower", "iud_lower", "genie"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("lower", help="lower bounds and the genie-erasure bound")
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    emit(sweep_service.run_grid(config, QUANTITIES), config)
    return 0

"""
Simrate Routes
`simrate`: Monte Carlo entropy-rate estimates under a Markov(alpha) input
"""
import argparse

from app.routes.options import add_common_flags, add_simulation_flags, build_config, emit
from app.services.sweep import sweep_service

QUANTITIES = ["sim_rate", "sim_hy", "sim_hyx"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("simrate", help="simulated information rate with confidence half-widths")
    add_common_flags(parser)
    add_simulation_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    emit(sweep_service.run_grid(config, QUANTITIES), config)
    return 0

"""
Lownoise Routes
`lownoise`: series expansion of the i.u.d. rate at small p, Taylor
coefficients of the rate function and the sign map of its curvature
"""
import argparse
import itertools

import numpy as np

from app.config.solver import settings as solver_settings
from app.routes.options import add_common_flags, build_config, emit
from app.services.lownoise import low_noise_service as lownoise
from app.services.sweep import sweep_service
from app.utils import csv_writer
from app.utils.console import log
from app.utils.error_handler import ValidationError
from app.utils.validators import split_floats

DEFAULT_DELTAS = [round(d, 10) for d in np.arange(-0.25, 0.25 + 1e-9, 0.05)]
COEFFICIENT_COLUMNS = ["p_id", "delta1", "delta2", "A1", "A2", "B20", "B11", "B02",
                       "terms", "taylor_bound_gain"]
SIGN_COLUMNS = ["p_id", "delta1", "delta2", "B_value", "sign"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("lownoise", help="low-noise expansion and Taylor coefficients")
    add_common_flags(parser)
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--coefficients", action="store_true",
                      help="write A1, A2 and the B coefficients for every (d1, d2) pair instead of the expansion")
    mode.add_argument("--bsign-map", action="store_true",
                      help="write the sign of B over the d1 x d2 grid")
    parser.add_argument("--d1", help="comma list of delta1 values (default -0.25..0.25 step 0.05)")
    parser.add_argument("--d2", help="comma list of delta2 values (default -0.25..0.25 step 0.05)")
    parser.add_argument("--k-max", type=int, default=lownoise.B_SIGN_K_MAX,
                        help="series terms for the sign map")
    parser.set_defaults(handler=run)


def _symmetric_ps(config) -> list:
    points = config.grid()
    for point in points:
        if not point.is_symmetric:
            raise ValidationError(f"lownoise needs p_i = p_d, got p_i={point.p_i} p_d={point.p_d}")
        if point.p_i > 0.5:
            raise ValidationError(f"lownoise needs p <= 0.5, got {point.p_i}")
    return sorted({point.p_i for point in points})


def _coefficient_records(ps, d1s, d2s, tol: float) -> list:
    records = []
    for p, d1, d2 in itertools.product(ps, d1s, d2s):
        coeffs = lownoise.taylor_coefficients(p, d1, d2, tol=tol)
        records.append({
            "p_id": p, "delta1": d1, "delta2": d2,
            "A1": coeffs.A1, "A2": coeffs.A2,
            "B20": coeffs.B20, "B11": coeffs.B11, "B02": coeffs.B02,
            "terms": coeffs.terms,
            "taylor_bound_gain": lownoise.quadratic_sup(coeffs.A1, coeffs.B),
        })
    return records


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    ps = _symmetric_ps(config)
    d1s = split_floats(args.d1) if args.d1 else DEFAULT_DELTAS
    d2s = split_floats(args.d2) if args.d2 else DEFAULT_DELTAS
    series_tol = min(config.tol, solver_settings.series_tol)

    if args.bsign_map:
        records = lownoise.b_sign_map(ps, d1s, d2s, k_max=args.k_max)
        negative = sum(1 for r in records if r["sign"] < 0)
        log("LowNoise", f"sign map: {len(records)} feasible points, {negative} with B < 0")
        csv_writer.write_records(records, SIGN_COLUMNS, config.out)
        return 0

    if args.coefficients:
        coeff_d1s = d1s if args.d1 else [0.0]
        coeff_d2s = d2s if args.d2 else [0.0]
        records = _coefficient_records(ps, coeff_d1s, coeff_d2s, series_tol)
        csv_writer.write_records(records, COEFFICIENT_COLUMNS, config.out)
        return 0

    emit(sweep_service.run_grid(config, ["expansion"]), config)
    return 0

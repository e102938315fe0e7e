"""
Verify Routes
`verify`: structural checks by exact finite-block computation; exit 1 on any violation
"""
import argparse
import time

from app.routes.options import build_config
from app.services.verify import verify_service
from app.utils import csv_writer
from app.utils.console import log

SUITE_CHOICES = sorted(verify_service.SUITES) + ["all"]
RECORD_COLUMNS = ["suite", "name", "violation", "passed"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="structural verification suites")
    parser.add_argument("--suite", choices=SUITE_CHOICES, default="all")
    parser.add_argument("--out", help="also write the records as CSV to this path")
    parser.add_argument("--config", help="key=value file mirroring the long flag names")
    parser.add_argument("--quiet", action="store_true")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = build_config(args)
    start = time.time()
    records = verify_service.run_suite(args.suite)
    failed = [r for r in records if not r["passed"]]

    for r in records:
        status = "ok  " if r["passed"] else "FAIL"
        print(f"{status} {r['suite']:<16} {r['name']:<52} max violation {r['violation']:.3e}")
    print(f"{len(records) - len(failed)}/{len(records)} checks passed in {time.time() - start:.1f}s")

    if config.out:
        csv_writer.write_records(records, RECORD_COLUMNS, config.out)
        log("Verify", f"records written to {config.out}")
    return 1 if failed else 0

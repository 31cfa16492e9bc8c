#!/usr/bin/env python
"""Print the repeatability report for the bundled 36-path table.

    python scripts/reproduce_tables.py --seed 0 --resamples 100000 --format text
"""

import argparse
import sys

from openplan import analysis, report


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resamples", type=int, default=report.DEFAULT_RESAMPLES)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--type2-retention", default="drop-last")
    ap.add_argument("--tolerance-profile", default="default", choices=sorted(report.TOLERANCE_PROFILES))
    ap.add_argument("--format", choices=("json", "text"), default="text")
    args = ap.parse_args()

    rep = report.reproduce_paper(
        seed=args.seed, n_resamples=args.resamples, workers=args.workers,
        tolerance_profile=args.tolerance_profile,
        type2_retention=analysis.parse_retention(args.type2_retention),
    )
    sys.stdout.write(report.report_text(rep) if args.format == "text" else report.report_json(rep))
    return 0


if __name__ == "__main__":
    sys.exit(main())

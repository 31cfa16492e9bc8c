#!/usr/bin/env python
"""Write every plot-data table to a directory as TSV."""

import argparse
from pathlib import Path

from openplan import report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resamples", type=int, default=report.DEFAULT_RESAMPLES)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind in report.PLOT_KINDS:
        cols, rows, meta = report.emit_plot_data(kind, seed=args.seed, n_resamples=args.resamples)
        (out / f"{kind}.tsv").write_text(report.plot_data_tsv(cols, rows, meta), encoding="utf-8")
        print(f"{kind}: {len(rows)} rows")


if __name__ == "__main__":
    main()

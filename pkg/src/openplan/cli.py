"""Command-line entry point: ``openplan <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input and 2 on internal errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, iso3382, report, session
from .core import ValidationError

log = logging.getLogger("openplan")

EXIT_OK, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _options(args) -> iso3382.AnalysisOptions:
    return iso3382.AnalysisOptions(abscissa=args.abscissa, adjust_noise=not args.no_noise_adjust)


def _table(args) -> iso3382.AnnexAThresholds:
    return iso3382.AnnexAThresholds.load(args.annex_a_table) if args.annex_a_table else iso3382.AnnexAThresholds()


def cmd_analyze(args) -> int:
    rows = []
    for path in args.manifest:
        sess = session.parse_session(path)
        rows += session.run_analyze(sess, _options(args), _table(args))
    _write(session.format_rows(rows, session.ANALYZE_COLUMNS, args.format), args.output)
    return EXIT_OK


def cmd_classify(args) -> int:
    table = _table(args)
    rows = []
    for spec in args.value:
        metric, _, raw = spec.partition("=")
        try:
            value = float(raw)
        except ValueError:
            raise ValidationError(f"expected METRIC=VALUE, got {spec!r}") from None
        rows.append({"metric": metric, "value": value, "class": iso3382.classify_annex_a(metric, value, table)})
    _write(session.format_rows(rows, ("metric", "value", "class"), args.format), args.output)
    return EXIT_OK


def cmd_repeatability(args) -> int:
    rows = analysis.read_tidy(Path(args.table).read_text(encoding="utf-8"))
    metrics = args.metrics or sorted({r["metric"] for r in rows})
    cfg = analysis.AnalysisConfig(args.resamples, args.seed, not args.anova,
                                  analysis.parse_retention(args.type2_retention), args.workers)
    offices = args.type2_offices.split(",") if args.type2_offices else None
    out = analysis.repeatability_tables(rows, metrics, cfg, offices)
    _write(json.dumps(out, sort_keys=True, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from . import synth

    specs = []
    for i in range(args.paths):
        specs.append(synth.SyntheticOfficeSpec(
            distances=tuple(float(x) for x in args.distances.split(",")),
            decay_db=(args.decay,) * 7,
            sti_model=args.sti_model,
            noise=None if args.no_noise else (args.noise,) * 7,
            level_sd_db=args.level_sd, decay_sd_db=args.decay_sd,
            seed=args.seed + i, office_id=args.office, path_id=str(i + 1),
        ))
    sp, tp = session.write_fixture(specs, args.out_dir)
    print(f"wrote {sp} and {tp}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    rep = report.reproduce_paper(
        seed=args.seed, n_resamples=args.resamples, tolerance_profile=args.tolerance_profile,
        type2_retention=analysis.parse_retention(args.type2_retention), workers=args.workers,
        robust_variance=not args.anova,
    )
    _write(report.report_text(rep) if args.format == "text" else report.report_json(rep), args.output)
    return EXIT_OK


def cmd_plot(args) -> int:
    cols, rows, meta = report.emit_plot_data(
        args.kind, seed=args.seed, n_resamples=args.resamples,
        type2_retention=analysis.parse_retention(args.type2_retention), workers=args.workers,
    )
    _write(report.plot_data_tsv(cols, rows, meta), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="openplan", description="Open-plan office acoustics and repeatability.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, stats=False):
        sp.add_argument("-o", "--output", help="write to a file instead of stdout")
        if stats:
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--resamples", type=int, default=report.DEFAULT_RESAMPLES)
            sp.add_argument("--workers", type=int, default=1)
            sp.add_argument("--type2-retention", default="drop-last",
                            help="drop-last, drop-first or OFFICE:P,P;OFFICE:P,P")

    a = sub.add_parser("analyze", help="metrics for each run of one or more session manifests")
    a.add_argument("manifest", nargs="+")
    a.add_argument("--abscissa", choices=("log2", "linear"), default="log2")
    a.add_argument("--annex-a-table", help="JSON file overriding the good/poor limits")
    a.add_argument("--no-noise-adjust", action="store_true")
    a.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common(a)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("classify", help="good/poor class of metric values")
    c.add_argument("value", nargs="+", metavar="METRIC=VALUE")
    c.add_argument("--annex-a-table")
    c.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common(c)
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("repeatability", help="range, correlation and reliability tables from a tidy TSV")
    r.add_argument("table", help="TSV with columns office, path, run, metric, value")
    r.add_argument("--metrics", nargs="*")
    r.add_argument("--type2-offices", help="comma-separated offices with two measured paths")
    r.add_argument("--anova", action="store_true", help="classical ANOVA variance components")
    common(r, stats=True)
    r.set_defaults(func=cmd_repeatability)

    s = sub.add_parser("simulate", help="write a synthetic session and its ground truth")
    s.add_argument("out_dir")
    s.add_argument("--paths", type=int, default=1)
    s.add_argument("--office", default="S1")
    s.add_argument("--distances", default="2,4,6,8,10,12")
    s.add_argument("--decay", type=float, default=6.0)
    s.add_argument("--noise", type=float, default=30.0)
    s.add_argument("--no-noise", action="store_true")
    s.add_argument("--sti-model", choices=("snr", "linear"), default="snr")
    s.add_argument("--level-sd", type=float, default=0.0)
    s.add_argument("--decay-sd", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("reproduce-paper", help="repeatability report over the bundled 36-path table")
    rp.add_argument("--tolerance-profile", choices=sorted(report.TOLERANCE_PROFILES), default="default")
    rp.add_argument("--anova", action="store_true")
    rp.add_argument("--format", choices=("json", "text"), default="json")
    common(rp, stats=True)
    rp.set_defaults(func=cmd_reproduce)

    e = sub.add_parser("emit-plot-data", help="plot-ready tables")
    e.add_argument("kind", choices=report.PLOT_KINDS)
    common(e, stats=True)
    e.set_defaults(func=cmd_plot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
